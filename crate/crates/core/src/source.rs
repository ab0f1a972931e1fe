//! Discrete memoryless sources: validated models, entropies and seeded sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::transform::SymbolBlock;

/// Largest block exponent accepted by the sampler.
pub const MAX_N_EXP: u32 = 24;

/// An i.i.d. source over the alphabet `0..radix`.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceModel {
    radix: u8,
    probs: Vec<f64>,
}

pub(crate) fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

impl SourceModel {
    /// Builds a model from its probability vector; the radix is the vector length.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let r = probs.len();
        if !(2..=251).contains(&r) || !is_prime(r as u32) {
            return Err(Error::param(format!(
                "alphabet size {r} must be a prime in 2..=251"
            )));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
            return Err(Error::param("probabilities must lie in [0, 1]"));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::param(format!(
                "probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(Self {
            radix: r as u8,
            probs,
        })
    }

    /// Binary model `(1 - p, p)`.
    pub fn binary(p: f64) -> Result<Self> {
        Self::new(vec![1.0 - p, p])
    }

    pub fn radix(&self) -> u8 {
        self.radix
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// True if some symbol has probability exactly 0 or 1.
    pub fn is_degenerate(&self) -> bool {
        self.probs.iter().any(|&p| p == 0.0 || p == 1.0)
    }

    /// Most probable symbol, ties toward the smaller value.
    pub fn most_probable(&self) -> u8 {
        let mut best = 0;
        for (k, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = k;
            }
        }
        best as u8
    }

    /// Shannon entropy in base-`base` units.
    pub fn entropy(&self, base: u32) -> f64 {
        entropy_of(&self.probs, base)
    }
}

/// `-sum p log_base p`, with `0 log 0 = 0`.
pub fn entropy_of(probs: &[f64], base: u32) -> f64 {
    assert!(base >= 2, "entropy base must be at least 2");
    let ln_base = (base as f64).ln();
    let mut h = 0.0;
    for &p in probs {
        if p > 0.0 {
            h -= p * p.ln();
        }
    }
    h / ln_base
}

/// Binary entropy function in bits.
pub fn binary_entropy(p: f64) -> f64 {
    entropy_of(&[p, 1.0 - p], 2)
}

/// Inverts the binary entropy function on `(0, 0.5]` by bisection and
/// returns the model `(1 - p, p)`.
pub fn model_from_entropy(target: f64) -> Result<SourceModel> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(Error::param(format!(
            "binary entropy target {target} outside (0, 1]"
        )));
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if binary_entropy(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p = if (binary_entropy(lo) - target).abs() < (binary_entropy(hi) - target).abs() {
        lo
    } else {
        hi
    };
    SourceModel::binary(p)
}

/// Draws `2^n_exp` i.i.d. symbols from `model` with a generator seeded by `seed`.
pub fn sample_block(model: &SourceModel, n_exp: u32, seed: u64) -> SymbolBlock {
    assert!(
        (1..=MAX_N_EXP).contains(&n_exp),
        "block exponent {n_exp} outside 1..={MAX_N_EXP}"
    );
    let n = 1usize << n_exp;
    let mut cum = Vec::with_capacity(model.probs.len());
    let mut acc = 0.0;
    for &p in &model.probs {
        acc += p;
        cum.push(acc);
    }
    // fallback for draws landing above a rounded-down cumulative total
    let last = model.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0) as u8;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let symbols = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            cum.iter().position(|&c| u < c).map_or(last, |k| k as u8)
        })
        .collect();
    SymbolBlock::from_parts(model.radix, n_exp, symbols)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-trial seed derived from a base seed and a counter, independent of
/// the order in which trials are executed.
pub fn trial_seed(base: u64, stream: u64, trial: u64) -> u64 {
    splitmix64(splitmix64(base ^ splitmix64(stream)) ^ trial)
}
