//! Brute-force reference semantics at small block sizes.
//!
//! Everything here is computed by enumerating every source block `x`,
//! weighting it by its probability and mapping it through the forward
//! transform. No SC recursion is involved.

use crate::error::{Error, Result};
use crate::sc::{EngineKind, IndexStats, ScEngine};
use crate::source::{entropy_of, sample_block, trial_seed, SourceModel};
use crate::transform::forward_in_place;

/// Largest number of source blocks the oracle will enumerate.
pub const MAX_ENUMERATION: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub cond_dist: Vec<f64>,
    /// Entropy of `cond_dist` in bits.
    pub entropy_h: f64,
    /// Probability of the conditioning prefix.
    pub prefix_mass: f64,
}

fn block_count(radix: u8, n_exp: u32) -> Result<u64> {
    let n = 1u32.checked_shl(n_exp).unwrap_or(u32::MAX);
    let mut total: u64 = 1;
    for _ in 0..n {
        total = total.saturating_mul(radix as u64);
        if total > MAX_ENUMERATION {
            return Err(Error::param(format!(
                "oracle limited to {MAX_ENUMERATION} blocks; radix {radix} with N = 2^{n_exp} exceeds it"
            )));
        }
    }
    Ok(total)
}

/// Exact distribution of `U = X·G_N`, indexed by `u` read as a base-`r`
/// number with `u_1` most significant.
#[derive(Debug, Clone)]
pub struct JointTable {
    radix: u8,
    n: usize,
    probs: Vec<f64>,
}

impl JointTable {
    pub fn build(model: &SourceModel, n_exp: u32) -> Result<Self> {
        let r = model.radix();
        let total = block_count(r, n_exp)? as usize;
        let n = 1usize << n_exp;
        let p = model.probs();
        let mut probs = vec![0.0; total];
        let mut x = vec![0u8; n];
        let mut u = vec![0u8; n];
        // odometer over x, x_1 most significant
        for _ in 0..total {
            let w: f64 = x.iter().map(|&s| p[s as usize]).product();
            u.copy_from_slice(&x);
            forward_in_place(&mut u, r);
            let idx = u
                .iter()
                .fold(0usize, |acc, &s| acc * r as usize + s as usize);
            probs[idx] += w;
            for d in x.iter_mut().rev() {
                *d += 1;
                if *d < r {
                    break;
                }
                *d = 0;
            }
        }
        Ok(Self { radix: r, n, probs })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `Pr(U_i = · | U_{1:i-1} = prefix)` with `i = prefix.len() + 1`.
    pub fn conditional(&self, prefix: &[u8]) -> Result<OracleResult> {
        let r = self.radix as usize;
        if prefix.len() >= self.n {
            return Err(Error::param(format!(
                "prefix of length {} leaves no index in a block of {}",
                prefix.len(),
                self.n
            )));
        }
        if prefix.iter().any(|&s| s as usize >= r) {
            return Err(Error::param("prefix symbol outside radix"));
        }
        let start = prefix.iter().fold(0usize, |acc, &s| acc * r + s as usize);
        let tail = r.pow((self.n - prefix.len() - 1) as u32);
        let base = start * r * tail;
        let mut mass = vec![0.0; r];
        for (a, m) in mass.iter_mut().enumerate() {
            let lo = base + a * tail;
            *m = self.probs[lo..lo + tail].iter().sum();
        }
        let total: f64 = mass.iter().sum();
        if total <= 0.0 {
            return Err(Error::ImpossiblePrefix(format!("{prefix:?}")));
        }
        let cond_dist: Vec<f64> = mass.iter().map(|m| m / total).collect();
        Ok(OracleResult {
            entropy_h: entropy_of(&cond_dist, 2),
            cond_dist,
            prefix_mass: total,
        })
    }

    /// `H(U_i | U_{1:i-1})` in bits for every `i`, as the prefix-weighted
    /// mean of the conditional entropies.
    pub fn entropy_profile(&self) -> Vec<f64> {
        let r = self.radix as usize;
        // marginals[k] = distribution of the first k symbols
        let mut marginals = vec![self.probs.clone()];
        for _ in 0..self.n {
            let prev = marginals.last().unwrap();
            let next: Vec<f64> = prev.chunks_exact(r).map(|c| c.iter().sum()).collect();
            marginals.push(next);
        }
        marginals.reverse();
        (1..=self.n)
            .map(|i| {
                marginals[i]
                    .chunks_exact(r)
                    .map(|c| {
                        let m: f64 = c.iter().sum();
                        if m > 0.0 {
                            let d: Vec<f64> = c.iter().map(|v| v / m).collect();
                            m * entropy_of(&d, 2)
                        } else {
                            0.0
                        }
                    })
                    .sum()
            })
            .collect()
    }
}

pub fn brute_conditional(model: &SourceModel, n_exp: u32, prefix: &[u8]) -> Result<OracleResult> {
    JointTable::build(model, n_exp)?.conditional(prefix)
}

/// Exact conditional entropies in bits.
pub fn brute_entropy_profile(model: &SourceModel, n_exp: u32) -> Result<Vec<f64>> {
    Ok(JointTable::build(model, n_exp)?.entropy_profile())
}

/// First disagreement between an engine and the oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct Deviation {
    pub probs: Vec<f64>,
    pub prefix: Vec<u8>,
    pub index: usize,
    pub engine: Vec<f64>,
    pub oracle: Vec<f64>,
    pub max_abs: f64,
}

impl std::fmt::Display for Deviation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "model {:?}, index {}, prefix {:?}: engine {:?} vs oracle {:?} (|Δ| = {:e})",
            self.probs, self.index, self.prefix, self.engine, self.oracle, self.max_abs
        )
    }
}

/// Conditional distributions reported by the probability engine when fed `u`.
pub fn engine_conditionals(model: &SourceModel, n_exp: u32, u: &[u8]) -> Result<Vec<Vec<f64>>> {
    let mut sc = ScEngine::new(model, n_exp, EngineKind::Probability)?;
    let mut out = Vec::with_capacity(u.len());
    let mut feed = |s: &IndexStats| {
        out.push(s.cond_dist.clone());
        Ok(u[s.index - 1])
    };
    sc.run(&mut feed)?;
    Ok(out)
}

/// Which `u` sequences a check feeds through the engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coverage {
    /// Every `u ∈ [0, r)^N`, hence every prefix at every index.
    Exhaustive,
    /// `count` blocks `u = forward(x)` with `x` sampled from the model.
    Sampled { count: usize, seed: u64 },
}

/// Compares `conditionals(u)` against the oracle at every index.
/// Returns the number of comparisons made.
pub fn check_against_oracle<F>(
    model: &SourceModel,
    n_exp: u32,
    coverage: Coverage,
    tol: f64,
    mut conditionals: F,
) -> Result<std::result::Result<usize, Deviation>>
where
    F: FnMut(&[u8]) -> Result<Vec<Vec<f64>>>,
{
    let table = JointTable::build(model, n_exp)?;
    let n = 1usize << n_exp;
    let r = model.radix();
    let blocks: Vec<Vec<u8>> = match coverage {
        Coverage::Exhaustive => {
            let total = block_count(r, n_exp)? as usize;
            (0..total)
                .map(|mut code| {
                    let mut u = vec![0u8; n];
                    for d in u.iter_mut().rev() {
                        *d = (code % r as usize) as u8;
                        code /= r as usize;
                    }
                    u
                })
                .collect()
        }
        Coverage::Sampled { count, seed } => (0..count)
            .map(|t| {
                let mut u =
                    sample_block(model, n_exp, trial_seed(seed, 0, t as u64)).into_symbols();
                forward_in_place(&mut u, r);
                u
            })
            .collect(),
    };
    let mut compared = 0;
    for u in &blocks {
        let got = conditionals(u)?;
        for i in 0..n {
            let prefix = &u[..i];
            let want = match table.conditional(prefix) {
                Ok(o) => o.cond_dist,
                Err(Error::ImpossiblePrefix(_)) => continue,
                Err(e) => return Err(e),
            };
            let max_abs = got[i]
                .iter()
                .zip(&want)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if max_abs.is_nan() || max_abs > tol {
                return Ok(Err(Deviation {
                    probs: model.probs().to_vec(),
                    prefix: prefix.to_vec(),
                    index: i + 1,
                    engine: got[i].clone(),
                    oracle: want,
                    max_abs,
                }));
            }
            compared += 1;
        }
    }
    Ok(Ok(compared))
}

/// Fixed model set used by the command-line check for a given radix.
pub fn check_models(radix: u8) -> Result<Vec<SourceModel>> {
    let sets: Vec<Vec<f64>> = match radix {
        2 => vec![
            vec![0.9, 0.1],
            vec![0.7, 0.3],
            vec![0.5, 0.5],
            vec![0.99, 0.01],
        ],
        3 => vec![
            vec![0.9214, 0.0393, 0.0393],
            vec![0.07, 0.09, 0.84],
            vec![0.1, 0.275, 0.625],
        ],
        r => {
            // geometric-ish profile normalised to 1
            let raw: Vec<f64> = (0..r).map(|k| 0.6f64.powi(k as i32)).collect();
            let s: f64 = raw.iter().sum();
            vec![raw.iter().map(|v| v / s).collect()]
        }
    };
    sets.into_iter().map(SourceModel::new).collect()
}
