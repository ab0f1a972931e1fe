//! Successive-cancellation lattice shared by the encoder's guided pass and
//! the decoder's threshold-driven pass.
//!
//! Two message domains are supported: exact probability vectors over any
//! prime radix, and binary min-sum LLRs. Both walk the same recursive
//! lattice in natural index order, so `u_1..u_N` are visited exactly as
//! produced by [`crate::transform::forward`].
//!
//! Encoder and decoder must obtain bit-identical statistics at every index,
//! so all arithmetic here runs in a fixed order and nothing is reassociated.

use crate::error::{Error, Result};
use crate::source::{binary_entropy, SourceModel};
use crate::transform::SymbolBlock;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EngineKind {
    /// Exact conditional distributions, any prime radix.
    Probability,
    /// Min-sum LLR approximation, binary non-degenerate sources only.
    LlrMinSum,
}

impl EngineKind {
    pub fn code(self) -> u8 {
        match self {
            EngineKind::Probability => 0,
            EngineKind::LlrMinSum => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(EngineKind::Probability),
            1 => Some(EngineKind::LlrMinSum),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EngineKind::Probability => "probability",
            EngineKind::LlrMinSum => "llr_minsum",
        }
    }
}

/// Per-index quantity compared against the selection threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SelectionMetric {
    /// Entropy of the conditional distribution, in bits. Retained when `>=`.
    EntropyH,
    /// `1 - max p`. Retained when `>=`.
    MlError,
    /// `|LLR|`. Retained when `<=`.
    AbsLlr,
}

impl SelectionMetric {
    pub fn code(self) -> u8 {
        match self {
            SelectionMetric::MlError => 0,
            SelectionMetric::EntropyH => 1,
            SelectionMetric::AbsLlr => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(SelectionMetric::MlError),
            1 => Some(SelectionMetric::EntropyH),
            2 => Some(SelectionMetric::AbsLlr),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SelectionMetric::EntropyH => "entropy_h",
            SelectionMetric::MlError => "ml_error",
            SelectionMetric::AbsLlr => "abs_llr",
        }
    }

    #[inline]
    pub fn value(self, stats: &IndexStats) -> f64 {
        match self {
            SelectionMetric::EntropyH => stats.entropy_h,
            SelectionMetric::MlError => stats.ml_error,
            SelectionMetric::AbsLlr => stats.llr.map_or(f64::NAN, f64::abs),
        }
    }

    /// Whether a metric value lies on the retain side of `threshold`.
    #[inline]
    pub fn retains(self, value: f64, threshold: f64) -> bool {
        match self {
            SelectionMetric::EntropyH | SelectionMetric::MlError => value >= threshold,
            SelectionMetric::AbsLlr => value <= threshold,
        }
    }

    /// The threshold that retains every value in `values` and nothing
    /// beyond their boundary: min for `>=` metrics, max for `<=`.
    pub fn boundary<I: IntoIterator<Item = f64>>(self, values: I) -> Option<f64> {
        let mut it = values.into_iter();
        let first = it.next()?;
        Some(it.fold(first, |acc, v| match self {
            SelectionMetric::AbsLlr => {
                if v > acc {
                    v
                } else {
                    acc
                }
            }
            _ => {
                if v < acc {
                    v
                } else {
                    acc
                }
            }
        }))
    }

    pub fn check_engine(self, engine: EngineKind) -> Result<()> {
        if self == SelectionMetric::AbsLlr && engine != EngineKind::LlrMinSum {
            return Err(Error::param(
                "abs_llr metric requires the llr_minsum engine",
            ));
        }
        Ok(())
    }
}

/// Statistics presented to the decision feed at one index.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexStats {
    /// 1-based position in `u_1..u_N`.
    pub index: usize,
    pub cond_dist: Vec<f64>,
    /// Entropy of `cond_dist` in bits.
    pub entropy_h: f64,
    pub ml_error: f64,
    /// Present for the LLR engine only.
    pub llr: Option<f64>,
    pub ml_decision: u8,
}

impl IndexStats {
    fn empty(radix: usize) -> Self {
        Self {
            index: 0,
            cond_dist: vec![0.0; radix],
            entropy_h: 0.0,
            ml_error: 0.0,
            llr: None,
            ml_decision: 0,
        }
    }

    fn fill_from_dist(&mut self, dist: &[f64]) {
        self.cond_dist.copy_from_slice(dist);
        let mut best = 0;
        let mut h = 0.0;
        for (k, &p) in dist.iter().enumerate() {
            if p > dist[best] {
                best = k;
            }
            if p > 0.0 {
                h -= p * p.log2();
            }
        }
        self.ml_decision = best as u8;
        self.ml_error = 1.0 - dist[best];
        self.entropy_h = h;
        self.llr = None;
    }

    fn fill_from_llr(&mut self, llr: f64) {
        let decision = if llr >= 0.0 { 0 } else { 1 };
        let eps = 1.0 / (1.0 + llr.abs().exp());
        self.cond_dist[decision] = 1.0 - eps;
        self.cond_dist[1 - decision] = eps;
        self.ml_decision = decision as u8;
        self.ml_error = eps;
        self.entropy_h = binary_entropy(eps);
        self.llr = Some(llr);
    }
}

/// Source of the symbol committed at each index.
pub trait DecisionFeed {
    fn decide(&mut self, stats: &IndexStats) -> Result<u8>;
}

impl<F: FnMut(&IndexStats) -> Result<u8>> DecisionFeed for F {
    fn decide(&mut self, stats: &IndexStats) -> Result<u8> {
        self(stats)
    }
}

fn minus_into(pl: &[f64], pr: &[f64], out: &mut [f64]) {
    let r = pl.len();
    let mut total = 0.0;
    for a in 0..r {
        let mut acc = 0.0;
        for c in 0..r {
            acc += pl[(a + r - c) % r] * pr[c];
        }
        out[a] = acc;
        total += acc;
    }
    if total > 0.0 {
        for v in out.iter_mut() {
            *v /= total;
        }
    }
}

fn plus_into(pl: &[f64], pr: &[f64], u1: u8, out: &mut [f64]) -> Result<()> {
    let r = pl.len();
    let a = u1 as usize;
    let mut total = 0.0;
    for c in 0..r {
        let v = pl[(a + r - c) % r] * pr[c];
        out[c] = v;
        total += v;
    }
    if total <= 0.0 || !total.is_finite() {
        return Err(Error::NumericDegeneracy(format!(
            "conditioning on partial sum {u1} has zero mass"
        )));
    }
    for v in out.iter_mut() {
        *v /= total;
    }
    Ok(())
}

/// Distribution of `a + b mod r` for independent `a ~ pl`, `b ~ pr`.
pub fn minus_combine(pl: &[f64], pr: &[f64]) -> Vec<f64> {
    assert_eq!(pl.len(), pr.len());
    let mut out = vec![0.0; pl.len()];
    minus_into(pl, pr, &mut out);
    out
}

/// Distribution of `b` given `a + b ≡ u1 (mod r)`.
pub fn plus_combine(pl: &[f64], pr: &[f64], u1: u8) -> Result<Vec<f64>> {
    assert_eq!(pl.len(), pr.len());
    if u1 as usize >= pl.len() {
        return Err(Error::param(format!(
            "symbol {u1} outside radix {}",
            pl.len()
        )));
    }
    let mut out = vec![0.0; pl.len()];
    plus_into(pl, pr, u1, &mut out)?;
    Ok(out)
}

#[inline]
pub fn minsum_f(a: f64, b: f64) -> f64 {
    let m = a.abs().min(b.abs());
    if (a < 0.0) != (b < 0.0) {
        -m
    } else {
        m
    }
}

#[inline]
pub fn minsum_g(a: f64, b: f64, u: u8) -> f64 {
    if u == 0 {
        b + a
    } else {
        b - a
    }
}

/// Working state for one SC traversal at a fixed block size.
///
/// `msgs[k]` holds the messages entering a lattice node of size `2^k`
/// (`width` values per position); `sums[k]` holds that node's re-encoded
/// partial sums once it has been fully decided.
#[derive(Debug, Clone)]
pub struct ScEngine {
    kind: EngineKind,
    radix: u8,
    n_exp: u32,
    width: usize,
    msgs: Vec<Vec<f64>>,
    sums: Vec<Vec<u8>>,
    stats: IndexStats,
    committed: Vec<u8>,
}

impl ScEngine {
    pub fn new(model: &SourceModel, n_exp: u32, kind: EngineKind) -> Result<Self> {
        let radix = model.radix();
        if n_exp > 30 {
            return Err(Error::param(format!("block exponent {n_exp} too large")));
        }
        let (width, leaf): (usize, Vec<f64>) = match kind {
            EngineKind::Probability => (radix as usize, model.probs().to_vec()),
            EngineKind::LlrMinSum => {
                if radix != 2 {
                    return Err(Error::param("llr_minsum engine requires radix 2"));
                }
                if model.is_degenerate() {
                    return Err(Error::param(
                        "llr_minsum engine requires nonzero symbol probabilities",
                    ));
                }
                let p = model.probs();
                (1, vec![(p[0] / p[1]).ln()])
            }
        };
        let n = 1usize << n_exp;
        let mut msgs: Vec<Vec<f64>> = (0..=n_exp)
            .map(|k| vec![0.0; (1usize << k) * width])
            .collect();
        for chunk in msgs[n_exp as usize].chunks_exact_mut(width) {
            chunk.copy_from_slice(&leaf);
        }
        let sums = (0..=n_exp).map(|k| vec![0u8; 1usize << k]).collect();
        Ok(Self {
            kind,
            radix,
            n_exp,
            width,
            msgs,
            sums,
            stats: IndexStats::empty(radix as usize),
            committed: Vec::with_capacity(n),
        })
    }

    pub fn kind(&self) -> EngineKind {
        self.kind
    }

    pub fn n_exp(&self) -> u32 {
        self.n_exp
    }

    pub fn radix(&self) -> u8 {
        self.radix
    }

    /// Traverses `i = 1..N`, asking `feed` for each committed symbol.
    /// Returns the committed sequence `u_1..u_N`.
    pub fn run<F: DecisionFeed + ?Sized>(&mut self, feed: &mut F) -> Result<Vec<u8>> {
        self.committed.clear();
        self.node(self.n_exp as usize, feed)?;
        Ok(std::mem::take(&mut self.committed))
    }

    fn node<F: DecisionFeed + ?Sized>(&mut self, k: usize, feed: &mut F) -> Result<()> {
        if k == 0 {
            return self.leaf(feed);
        }
        let half = 1usize << (k - 1);
        let w = self.width;

        {
            let (lower, upper) = self.msgs.split_at_mut(k);
            let src = &upper[0];
            let dst = &mut lower[k - 1];
            match self.kind {
                EngineKind::Probability => {
                    for j in 0..half {
                        minus_into(
                            &src[j * w..(j + 1) * w],
                            &src[(j + half) * w..(j + half + 1) * w],
                            &mut dst[j * w..(j + 1) * w],
                        );
                    }
                }
                EngineKind::LlrMinSum => {
                    for j in 0..half {
                        dst[j] = minsum_f(src[j], src[j + half]);
                    }
                }
            }
        }
        self.node(k - 1, feed)?;

        {
            let (lower, upper) = self.sums.split_at_mut(k);
            upper[0][..half].copy_from_slice(&lower[k - 1]);
        }
        {
            let (lower, upper) = self.msgs.split_at_mut(k);
            let src = &upper[0];
            let dst = &mut lower[k - 1];
            let left = &self.sums[k][..half];
            match self.kind {
                EngineKind::Probability => {
                    for j in 0..half {
                        plus_into(
                            &src[j * w..(j + 1) * w],
                            &src[(j + half) * w..(j + half + 1) * w],
                            left[j],
                            &mut dst[j * w..(j + 1) * w],
                        )?;
                    }
                }
                EngineKind::LlrMinSum => {
                    for j in 0..half {
                        dst[j] = minsum_g(src[j], src[j + half], left[j]);
                    }
                }
            }
        }
        self.node(k - 1, feed)?;

        let r = self.radix as u16;
        let (lower, upper) = self.sums.split_at_mut(k);
        let right = &lower[k - 1];
        let out = &mut upper[0];
        for j in 0..half {
            let t = right[j];
            out[j] = ((out[j] as u16 + r - t as u16) % r) as u8;
            out[j + half] = t;
        }
        Ok(())
    }

    fn leaf<F: DecisionFeed + ?Sized>(&mut self, feed: &mut F) -> Result<()> {
        self.stats.index = self.committed.len() + 1;
        match self.kind {
            EngineKind::Probability => self.stats.fill_from_dist(&self.msgs[0]),
            EngineKind::LlrMinSum => self.stats.fill_from_llr(self.msgs[0][0]),
        }
        let u = feed.decide(&self.stats)?;
        if u >= self.radix {
            return Err(Error::param(format!(
                "decision {u} outside radix {}",
                self.radix
            )));
        }
        self.sums[0][0] = u;
        self.committed.push(u);
        Ok(())
    }
}

/// One full pass, collecting the statistics seen at every index together
/// with the symbol committed there.
pub fn run_pass<F: DecisionFeed>(
    model: &SourceModel,
    n_exp: u32,
    engine: EngineKind,
    mut feed: F,
) -> Result<Vec<(IndexStats, u8)>> {
    let mut sc = ScEngine::new(model, n_exp, engine)?;
    let mut out = Vec::with_capacity(1 << n_exp);
    let mut recorder = |s: &IndexStats| {
        let u = feed.decide(s)?;
        out.push((s.clone(), u));
        Ok(u)
    };
    sc.run(&mut recorder)?;
    Ok(out)
}

/// Rate-1 pass fed with the true `u`. Returns per-index statistics and the
/// 1-based indices where the engine's ML decision differs from `u_i`.
pub fn guided_stats(
    u: &SymbolBlock,
    model: &SourceModel,
    engine: EngineKind,
) -> Result<(Vec<IndexStats>, Vec<usize>)> {
    if u.radix() != model.radix() {
        return Err(Error::param("block radix differs from model radix"));
    }
    let symbols = u.symbols();
    let pass = run_pass(model, u.n_exp(), engine, |s: &IndexStats| {
        Ok(symbols[s.index - 1])
    })?;
    let mut errors = Vec::new();
    let stats = pass
        .into_iter()
        .map(|(s, ui)| {
            if s.ml_decision != ui {
                errors.push(s.index);
            }
            s
        })
        .collect();
    Ok((stats, errors))
}
