//! Construction-free polar compression.
//!
//! A block `x` of `2^n` symbols from a known memoryless source is mapped
//! through the polar transform and run through a successive-cancellation
//! pass that is fed the true symbols. Indices where the decoder would be
//! unsure (by ML error rate, entropy or |LLR|) are stored verbatim; the rest
//! are left for the decoder to infer, with explicit corrections for the few
//! confident-but-wrong guesses. No frozen set is ever constructed: the
//! decoder rediscovers the stored positions by replaying the same pass.
//!
//! * [`source`]: source models, entropies, seeded sampling
//! * [`transform`]: forward and inverse polar transform
//! * [`sc`]: the SC lattice (probability and min-sum LLR domains)
//! * [`codec`]: adaptive- and fixed-threshold schemes, rate accounting
//! * [`container`]: bit-exact block and file format
//! * [`oracle`]: brute-force reference at small block sizes
//! * [`bench`]: Monte Carlo harness producing CSV

pub mod bench;
pub mod codec;
pub mod container;
pub mod error;
pub mod oracle;
pub mod par;
pub mod sc;
pub mod source;
pub mod transform;

pub use codec::{
    decode_adaptive, decode_fixed, default_eps_fix, encode_adaptive, encode_fixed,
    gamma_fix_from_eps, rate_of, truncate_to_rate, AdaptiveEncoding, Codec, Correction,
    FixedEncoding, GammaMode, RateReport,
};
pub use container::{compress_bytes, decompress_bytes, FileParams, Scheme};
pub use error::{Error, Result};
pub use par::Exec;
pub use sc::{EngineKind, IndexStats, ScEngine, SelectionMetric};
pub use source::{model_from_entropy, sample_block, SourceModel};
pub use transform::{forward, inverse, SymbolBlock};
