use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid model, block size, threshold or flag value.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The coded data does not describe a valid block or file.
    #[error("malformed stream at byte {offset}: {reason}")]
    MalformedStream { offset: usize, reason: String },

    /// A conditioning event carries no probability mass.
    #[error("numeric degeneracy: {0}")]
    NumericDegeneracy(String),

    /// Oracle was asked to condition on a prefix of probability zero.
    #[error("impossible prefix: {0}")]
    ImpossiblePrefix(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn malformed(offset: usize, reason: impl Into<String>) -> Self {
        Error::MalformedStream {
            offset,
            reason: reason.into(),
        }
    }

    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) | Error::Io(_) => 1,
            Error::MalformedStream { .. }
            | Error::NumericDegeneracy(_)
            | Error::ImpossiblePrefix(_) => 2,
        }
    }
}
