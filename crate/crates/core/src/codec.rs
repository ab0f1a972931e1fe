//! Adaptive- and fixed-threshold compression of a single block.
//!
//! Both schemes run one guided SC pass at the encoder to learn, for every
//! index, the metric the decoder will see and whether its ML decision would
//! be wrong. Symbols on the retain side of the threshold are stored
//! verbatim; the decoder repeats the same pass and recognises those indices
//! by itself.

use crate::container;
use crate::error::{Error, Result};
use crate::sc::{EngineKind, IndexStats, ScEngine, SelectionMetric};
use crate::source::{binary_entropy, SourceModel};
use crate::transform::{forward, inverse_in_place, SymbolBlock};

/// Output of the adaptive scheme. `threshold == None` means the error set
/// was empty and nothing is retained.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveEncoding {
    pub threshold: Option<f64>,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Correction {
    /// 1-based index into `u`.
    pub index: usize,
    /// `(u_i - ml_i) mod r`, in `1..r`.
    pub delta: u8,
}

/// Output of the fixed-threshold scheme: retained count, retained symbols
/// and the corrections for errors outside the retained set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FixedEncoding {
    pub g_count: usize,
    pub payload: Vec<u8>,
    pub corrections: Vec<Correction>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    /// Symbols per source symbol, charging `log_r N` for the count,
    /// one symbol per retained index and `log_r N + log_r(r-1)` per correction.
    pub analytic_rate: f64,
    /// `8 ×` the serialized block body length.
    pub container_bits: u64,
    /// Physical width of the retained-count field, `ceil(log2(N + 1))`.
    pub count_field_bits: u32,
    pub g_count: usize,
    pub correction_count: usize,
    /// Source entropy in base-`r` units.
    pub source_entropy: f64,
}

/// What the encoder learns from its guided pass.
#[derive(Debug, Clone, PartialEq)]
pub struct GuidedTrace {
    pub u: Vec<u8>,
    pub metric: Vec<f64>,
    pub ml_decision: Vec<u8>,
    /// 1-based indices where `u_i` differs from the ML decision.
    pub errors: Vec<usize>,
}

impl GuidedTrace {
    /// 1-based indices retained at `threshold`.
    pub fn retained(&self, metric: SelectionMetric, threshold: f64) -> Vec<usize> {
        self.metric
            .iter()
            .enumerate()
            .filter(|(_, &v)| metric.retains(v, threshold))
            .map(|(i, _)| i + 1)
            .collect()
    }
}

/// ε threshold minimising the fixed-scheme rate: `1 / (log_r N + log_r(r-1))`.
pub fn default_eps_fix(n_exp: u32, radix: u8) -> f64 {
    let ln_r = (radix as f64).ln();
    let log_r_n = n_exp as f64 * (std::f64::consts::LN_2 / ln_r);
    let log_r_rm1 = ((radix - 1) as f64).ln() / ln_r;
    1.0 / (log_r_n + log_r_rm1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GammaMode {
    /// `|ln(1-ε) / ln ε|`, as printed in the original formulation.
    PaperLiteral,
    /// `ln((1-ε)/ε)`, inverse of `ε = 1 / (1 + e^{|γ|})`.
    #[default]
    ExactLlr,
}

pub fn gamma_fix_from_eps(eps: f64, mode: GammaMode) -> f64 {
    match mode {
        GammaMode::PaperLiteral => ((1.0 - eps).ln() / eps.ln()).abs(),
        GammaMode::ExactLlr => ((1.0 - eps) / eps).ln(),
    }
}

/// Fixed threshold on `metric`'s own scale derived from `eps`.
/// For entropy the smallest entropy compatible with ML error `eps` is used.
pub fn threshold_for_metric(metric: SelectionMetric, eps: f64, gamma_mode: GammaMode) -> f64 {
    match metric {
        SelectionMetric::MlError => eps,
        SelectionMetric::EntropyH => binary_entropy(eps),
        SelectionMetric::AbsLlr => gamma_fix_from_eps(eps, gamma_mode),
    }
}

/// `log_r N`.
pub fn log_radix_len(n_exp: u32, radix: u8) -> f64 {
    n_exp as f64 * (std::f64::consts::LN_2 / (radix as f64).ln())
}

/// Analytic fixed-scheme rate from its counted components.
pub fn analytic_rate(n_exp: u32, radix: u8, g_count: usize, correction_count: usize) -> f64 {
    let n = (1u64 << n_exp) as f64;
    let log_n = log_radix_len(n_exp, radix);
    let log_rm1 = ((radix - 1) as f64).ln() / (radix as f64).ln();
    (log_n + g_count as f64 + correction_count as f64 * (log_n + log_rm1)) / n
}

/// Block codec bound to one model, block size, engine and metric.
/// Holds the SC working buffers so repeated blocks do not reallocate.
#[derive(Debug, Clone)]
pub struct Codec {
    model: SourceModel,
    metric: SelectionMetric,
    engine: ScEngine,
}

impl Codec {
    pub fn new(
        model: &SourceModel,
        n_exp: u32,
        engine: EngineKind,
        metric: SelectionMetric,
    ) -> Result<Self> {
        metric.check_engine(engine)?;
        Ok(Self {
            model: model.clone(),
            metric,
            engine: ScEngine::new(model, n_exp, engine)?,
        })
    }

    pub fn model(&self) -> &SourceModel {
        &self.model
    }

    pub fn metric(&self) -> SelectionMetric {
        self.metric
    }

    pub fn engine_kind(&self) -> EngineKind {
        self.engine.kind()
    }

    pub fn n_exp(&self) -> u32 {
        self.engine.n_exp()
    }

    pub fn radix(&self) -> u8 {
        self.model.radix()
    }

    fn check_block(&self, x: &SymbolBlock) -> Result<()> {
        if x.radix() != self.radix() || x.n_exp() != self.n_exp() {
            return Err(Error::param(format!(
                "block (radix {}, 2^{}) does not match codec (radix {}, 2^{})",
                x.radix(),
                x.n_exp(),
                self.radix(),
                self.n_exp()
            )));
        }
        Ok(())
    }

    /// Guided rate-1 pass over `u = forward(x)`.
    pub fn trace(&mut self, x: &SymbolBlock) -> Result<GuidedTrace> {
        self.check_block(x)?;
        let u = forward(x).into_symbols();
        let n = u.len();
        let metric = self.metric;
        let mut values = Vec::with_capacity(n);
        let mut ml = Vec::with_capacity(n);
        let mut errors = Vec::new();
        let mut feed = |s: &IndexStats| {
            let ui = u[s.index - 1];
            values.push(metric.value(s));
            ml.push(s.ml_decision);
            if s.ml_decision != ui {
                errors.push(s.index);
            }
            Ok(ui)
        };
        self.engine.run(&mut feed)?;
        Ok(GuidedTrace {
            u,
            metric: values,
            ml_decision: ml,
            errors,
        })
    }

    pub fn encode_adaptive(&mut self, x: &SymbolBlock) -> Result<AdaptiveEncoding> {
        let t = self.trace(x)?;
        let metric = self.metric;
        let threshold = metric.boundary(t.errors.iter().map(|&i| t.metric[i - 1]));
        let payload = match threshold {
            None => Vec::new(),
            Some(th) => t
                .metric
                .iter()
                .zip(&t.u)
                .filter(|(&v, _)| metric.retains(v, th))
                .map(|(_, &ui)| ui)
                .collect(),
        };
        Ok(AdaptiveEncoding { threshold, payload })
    }

    pub fn decode_adaptive(&mut self, enc: &AdaptiveEncoding) -> Result<SymbolBlock> {
        if let Some(th) = enc.threshold {
            if th.is_nan() {
                return Err(Error::malformed(0, "threshold is NaN"));
            }
        }
        let metric = self.metric;
        let payload = &enc.payload;
        let mut cursor = 0usize;
        let mut feed = |s: &IndexStats| -> Result<u8> {
            match enc.threshold {
                Some(th) if metric.retains(metric.value(s), th) => {
                    let v = *payload.get(cursor).ok_or_else(|| {
                        Error::malformed(0, format!("payload exhausted at index {}", s.index))
                    })?;
                    cursor += 1;
                    Ok(v)
                }
                _ => Ok(s.ml_decision),
            }
        };
        let u = self.engine.run(&mut feed)?;
        if cursor != payload.len() {
            return Err(Error::malformed(
                0,
                format!("{} payload symbols left unconsumed", payload.len() - cursor),
            ));
        }
        Ok(self.finish(u))
    }

    pub fn encode_fixed(&mut self, x: &SymbolBlock, threshold: f64) -> Result<FixedEncoding> {
        if threshold.is_nan() {
            return Err(Error::param("threshold is NaN"));
        }
        let t = self.trace(x)?;
        let metric = self.metric;
        let r = self.radix() as u16;
        let payload: Vec<u8> = t
            .metric
            .iter()
            .zip(&t.u)
            .filter(|(&v, _)| metric.retains(v, threshold))
            .map(|(_, &ui)| ui)
            .collect();
        let corrections = t
            .errors
            .iter()
            .filter(|&&i| !metric.retains(t.metric[i - 1], threshold))
            .map(|&i| Correction {
                index: i,
                delta: ((t.u[i - 1] as u16 + r - t.ml_decision[i - 1] as u16) % r) as u8,
            })
            .collect();
        Ok(FixedEncoding {
            g_count: payload.len(),
            payload,
            corrections,
        })
    }

    pub fn decode_fixed(&mut self, enc: &FixedEncoding, threshold: f64) -> Result<SymbolBlock> {
        let n = 1usize << self.n_exp();
        let r = self.radix();
        if enc.payload.len() != enc.g_count {
            return Err(Error::malformed(
                0,
                format!(
                    "payload has {} symbols, count field says {}",
                    enc.payload.len(),
                    enc.g_count
                ),
            ));
        }
        let mut prev = 0;
        for c in &enc.corrections {
            if c.index <= prev || c.index > n {
                return Err(Error::malformed(
                    0,
                    format!("correction index {} out of order or range", c.index),
                ));
            }
            if c.delta == 0 || c.delta >= r {
                return Err(Error::malformed(
                    0,
                    format!("correction delta {} outside 1..{r}", c.delta),
                ));
            }
            prev = c.index;
        }

        let metric = self.metric;
        let r16 = r as u16;
        let mut cursor = 0usize;
        let mut next_corr = 0usize;
        let mut feed = |s: &IndexStats| -> Result<u8> {
            let pending = enc
                .corrections
                .get(next_corr)
                .filter(|c| c.index == s.index);
            if metric.retains(metric.value(s), threshold) {
                if pending.is_some() {
                    return Err(Error::malformed(
                        0,
                        format!("correction at retained index {}", s.index),
                    ));
                }
                let v = *enc.payload.get(cursor).ok_or_else(|| {
                    Error::malformed(0, format!("payload exhausted at index {}", s.index))
                })?;
                cursor += 1;
                Ok(v)
            } else if let Some(c) = pending {
                next_corr += 1;
                Ok(((s.ml_decision as u16 + c.delta as u16) % r16) as u8)
            } else {
                Ok(s.ml_decision)
            }
        };
        let u = self.engine.run(&mut feed)?;
        if cursor != enc.payload.len() {
            return Err(Error::malformed(
                0,
                format!(
                    "{} payload symbols left unconsumed",
                    enc.payload.len() - cursor
                ),
            ));
        }
        Ok(self.finish(u))
    }

    fn finish(&self, mut u: Vec<u8>) -> SymbolBlock {
        inverse_in_place(&mut u, self.radix());
        SymbolBlock::from_parts(self.radix(), self.n_exp(), u)
    }
}

pub fn encode_adaptive(
    x: &SymbolBlock,
    model: &SourceModel,
    engine: EngineKind,
    metric: SelectionMetric,
) -> Result<AdaptiveEncoding> {
    Codec::new(model, x.n_exp(), engine, metric)?.encode_adaptive(x)
}

pub fn decode_adaptive(
    enc: &AdaptiveEncoding,
    n_exp: u32,
    model: &SourceModel,
    engine: EngineKind,
    metric: SelectionMetric,
) -> Result<SymbolBlock> {
    Codec::new(model, n_exp, engine, metric)?.decode_adaptive(enc)
}

pub fn encode_fixed(
    x: &SymbolBlock,
    model: &SourceModel,
    engine: EngineKind,
    metric: SelectionMetric,
    threshold: f64,
) -> Result<FixedEncoding> {
    Codec::new(model, x.n_exp(), engine, metric)?.encode_fixed(x, threshold)
}

pub fn decode_fixed(
    enc: &FixedEncoding,
    n_exp: u32,
    model: &SourceModel,
    engine: EngineKind,
    metric: SelectionMetric,
    threshold: f64,
) -> Result<SymbolBlock> {
    Codec::new(model, n_exp, engine, metric)?.decode_fixed(enc, threshold)
}

pub fn rate_of(enc: &FixedEncoding, n_exp: u32, model: &SourceModel) -> RateReport {
    let radix = model.radix();
    let body = container::write_block_fixed(enc, n_exp, radix);
    RateReport {
        analytic_rate: analytic_rate(n_exp, radix, enc.g_count, enc.corrections.len()),
        container_bits: 8 * body.len() as u64,
        count_field_bits: container::count_field_bits(n_exp),
        g_count: enc.g_count,
        correction_count: enc.corrections.len(),
        source_entropy: model.entropy(radix as u32),
    }
}

/// A fixed-scheme encoding accepted into a fixed budget of `length` symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedLengthWord {
    pub length: usize,
    pub encoding: FixedEncoding,
}

/// Fits `enc` into `floor(N·rate)` symbols. `None` marks a block whose
/// analytic rate exceeds the budget, i.e. a decoding failure.
pub fn truncate_to_rate(
    enc: &FixedEncoding,
    n_exp: u32,
    radix: u8,
    rate: f64,
) -> Option<FixedLengthWord> {
    let actual = analytic_rate(n_exp, radix, enc.g_count, enc.corrections.len());
    if actual <= rate {
        let n = (1u64 << n_exp) as f64;
        Some(FixedLengthWord {
            length: (n * rate).floor() as usize,
            encoding: enc.clone(),
        })
    } else {
        None
    }
}
