//! Monte Carlo experiment harness behind the `bench` and `profile` commands.
//!
//! Every trial draws its block from a seed derived from `(seed, n_exp, trial)`
//! and results are gathered in trial order, so CSV output is identical for
//! identical arguments whatever the thread count.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use crate::codec::{
    default_eps_fix, threshold_for_metric, truncate_to_rate, Codec, FixedEncoding, GammaMode,
};
use crate::container::{self, Scheme};
use crate::error::{Error, Result};
use crate::oracle::JointTable;
use crate::par::{self, Exec};
use crate::sc::{EngineKind, IndexStats, ScEngine, SelectionMetric};
use crate::source::{sample_block, trial_seed, SourceModel};
use crate::transform::forward;

/// Engine/metric choice for fixed-scheme trials; the threshold comes from
/// the default ε for each block size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialSettings {
    pub engine: EngineKind,
    pub metric: SelectionMetric,
    pub gamma_mode: GammaMode,
}

impl Default for TrialSettings {
    fn default() -> Self {
        Self {
            engine: EngineKind::Probability,
            metric: SelectionMetric::MlError,
            gamma_mode: GammaMode::ExactLlr,
        }
    }
}

impl TrialSettings {
    pub fn threshold(&self, n_exp: u32, radix: u8) -> f64 {
        threshold_for_metric(self.metric, default_eps_fix(n_exp, radix), self.gamma_mode)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub scheme: Scheme,
    pub engine: EngineKind,
    pub metric: SelectionMetric,
    pub radix: u8,
    pub n_exp: u32,
    pub seed: u64,
    pub trial: usize,
    pub analytic_rate: f64,
    pub container_bits: u64,
    pub g_count: usize,
    pub correction_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub mean_rate: f64,
    pub std_rate: f64,
    pub trials: usize,
    /// Base-`r` source entropy.
    pub entropy: f64,
    pub mean_g_count: f64,
    pub mean_corrections: f64,
    pub wall_time: Duration,
}

/// Mean and sample standard deviation, summed in slice order.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

pub fn summarize(model: &SourceModel, results: &[TrialResult], wall_time: Duration) -> RunSummary {
    let rates: Vec<f64> = results.iter().map(|t| t.analytic_rate).collect();
    let (mean_rate, std_rate) = mean_std(&rates);
    let n = results.len().max(1) as f64;
    RunSummary {
        mean_rate,
        std_rate,
        trials: results.len(),
        entropy: model.entropy(model.radix() as u32),
        mean_g_count: results.iter().map(|t| t.g_count as f64).sum::<f64>() / n,
        mean_corrections: results
            .iter()
            .map(|t| t.correction_count as f64)
            .sum::<f64>()
            / n,
        wall_time,
    }
}

/// Runs `trials` fixed-scheme encodings and hands each encoding to
/// `inspect` before it is dropped.
fn fixed_trials_with<T, F>(
    model: &SourceModel,
    n_exp: u32,
    settings: TrialSettings,
    trials: usize,
    seed: u64,
    exec: Exec,
    inspect: F,
) -> Result<Vec<(TrialResult, T)>>
where
    T: Send,
    F: Fn(&FixedEncoding) -> T + Sync + Send,
{
    let radix = model.radix();
    let threshold = settings.threshold(n_exp, radix);
    let results = par::map_with(
        exec,
        trials,
        || Codec::new(model, n_exp, settings.engine, settings.metric),
        |codec, t| -> Result<(TrialResult, T)> {
            let codec = codec.as_mut().map_err(|e| Error::param(e.to_string()))?;
            let x = sample_block(model, n_exp, trial_seed(seed, n_exp as u64, t as u64));
            let enc = codec.encode_fixed(&x, threshold)?;
            let extra = inspect(&enc);
            let body = container::write_block_fixed(&enc, n_exp, radix);
            Ok((
                TrialResult {
                    scheme: Scheme::Fixed,
                    engine: settings.engine,
                    metric: settings.metric,
                    radix,
                    n_exp,
                    seed,
                    trial: t,
                    analytic_rate: crate::codec::analytic_rate(
                        n_exp,
                        radix,
                        enc.g_count,
                        enc.corrections.len(),
                    ),
                    container_bits: 8 * body.len() as u64,
                    g_count: enc.g_count,
                    correction_count: enc.corrections.len(),
                },
                extra,
            ))
        },
    );
    results.into_iter().collect()
}

/// Fixed-scheme trials at the default threshold.
pub fn run_fixed_trials(
    model: &SourceModel,
    n_exp: u32,
    settings: TrialSettings,
    trials: usize,
    seed: u64,
    exec: Exec,
) -> Result<Vec<TrialResult>> {
    Ok(
        fixed_trials_with(model, n_exp, settings, trials, seed, exec, |_| ())?
            .into_iter()
            .map(|(t, _)| t)
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub n_exp: u32,
    pub summary: RunSummary,
}

pub fn bench_rate(
    model: &SourceModel,
    n_exps: &[u32],
    settings: TrialSettings,
    trials: usize,
    seed: u64,
    exec: Exec,
) -> Result<Vec<RateRow>> {
    n_exps
        .iter()
        .map(|&n_exp| {
            let start = Instant::now();
            let res = run_fixed_trials(model, n_exp, settings, trials, seed, exec)?;
            Ok(RateRow {
                n_exp,
                summary: summarize(model, &res, start.elapsed()),
            })
        })
        .collect()
}

pub fn rate_csv(
    model: &SourceModel,
    settings: TrialSettings,
    seed: u64,
    rows: &[RateRow],
) -> String {
    let mut out = String::from(
        "scheme,engine,metric,radix,n,N,trials,seed,entropy,mean_rate,std_rate,mean_gcount,mean_corrections\n",
    );
    for row in rows {
        let s = &row.summary;
        writeln!(
            out,
            "fixed,{},{},{},{},{},{},{},{},{},{},{},{}",
            settings.engine.name(),
            settings.metric.name(),
            model.radix(),
            row.n_exp,
            1u64 << row.n_exp,
            s.trials,
            seed,
            s.entropy,
            s.mean_rate,
            s.std_rate,
            s.mean_g_count,
            s.mean_corrections
        )
        .unwrap();
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// Probability of symbol 0.
    pub p: f64,
    pub entropy: f64,
    pub n_exp: u32,
    pub summary: RunSummary,
}

pub fn bench_sweep(
    p_grid: &[f64],
    n_exps: &[u32],
    settings: TrialSettings,
    trials: usize,
    seed: u64,
    exec: Exec,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &p in p_grid {
        if !(p > 0.0 && p <= 0.5) {
            return Err(Error::param(format!("grid value {p} outside (0, 0.5]")));
        }
        let model = SourceModel::new(vec![p, 1.0 - p])?;
        for &n_exp in n_exps {
            let start = Instant::now();
            let res = run_fixed_trials(&model, n_exp, settings, trials, seed, exec)?;
            rows.push(SweepRow {
                p,
                entropy: model.entropy(2),
                n_exp,
                summary: summarize(&model, &res, start.elapsed()),
            });
        }
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("p,entropy,n,N,trials,mean_rate,std_rate\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.p,
            r.entropy,
            r.n_exp,
            1u64 << r.n_exp,
            r.summary.trials,
            r.summary.mean_rate,
            r.summary.std_rate
        )
        .unwrap();
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlerRun {
    pub n_exp: u32,
    pub rates: Vec<f64>,
    /// Fraction of trials whose truncated word fails, per rate.
    pub bler: Vec<f64>,
    pub trials: Vec<TrialResult>,
}

/// Truncation experiment: each trial's encoding is offered every rate budget.
pub fn bench_bler(
    model: &SourceModel,
    n_exps: &[u32],
    rates: &[f64],
    settings: TrialSettings,
    trials: usize,
    seed: u64,
    exec: Exec,
) -> Result<Vec<BlerRun>> {
    if rates.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("rates must be strictly increasing"));
    }
    let radix = model.radix();
    n_exps
        .iter()
        .map(|&n_exp| {
            let res = fixed_trials_with(model, n_exp, settings, trials, seed, exec, |enc| {
                rates
                    .iter()
                    .map(|&r| truncate_to_rate(enc, n_exp, radix, r).is_none())
                    .collect::<Vec<bool>>()
            })?;
            let mut failures = vec![0usize; rates.len()];
            for (_, fails) in &res {
                for (acc, &f) in failures.iter_mut().zip(fails) {
                    *acc += f as usize;
                }
            }
            let count = res.len().max(1) as f64;
            Ok(BlerRun {
                n_exp,
                rates: rates.to_vec(),
                bler: failures.iter().map(|&f| f as f64 / count).collect(),
                trials: res.into_iter().map(|(t, _)| t).collect(),
            })
        })
        .collect()
}

pub fn bler_csv(runs: &[BlerRun]) -> String {
    let mut out = String::from("n,N,R,trials,bler\n");
    for run in runs {
        for (r, b) in run.rates.iter().zip(&run.bler) {
            writeln!(
                out,
                "{},{},{},{},{}",
                run.n_exp,
                1u64 << run.n_exp,
                r,
                run.trials.len(),
                b
            )
            .unwrap();
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileRow {
    pub index: usize,
    pub mean_h: f64,
    pub std_h: f64,
    pub oracle_h: Option<f64>,
}

const PROFILE_CHUNK: usize = 256;

/// Mean and spread of the per-index entropy over sampled blocks, with the
/// exact conditional entropy alongside when the oracle can enumerate.
pub fn profile(
    model: &SourceModel,
    n_exp: u32,
    trials: usize,
    seed: u64,
    exec: Exec,
) -> Result<Vec<ProfileRow>> {
    let n = 1usize << n_exp;
    let mut sum = vec![0.0; n];
    let mut sum_sq = vec![0.0; n];
    let mut done = 0;
    while done < trials {
        let chunk = PROFILE_CHUNK.min(trials - done);
        let batch = par::map_with(
            exec,
            chunk,
            || ScEngine::new(model, n_exp, EngineKind::Probability),
            |engine, k| -> Result<Vec<f64>> {
                let engine = engine.as_mut().map_err(|e| Error::param(e.to_string()))?;
                let t = (done + k) as u64;
                let u = forward(&sample_block(
                    model,
                    n_exp,
                    trial_seed(seed, n_exp as u64, t),
                ));
                let mut h = Vec::with_capacity(n);
                let mut feed = |s: &IndexStats| {
                    h.push(s.entropy_h);
                    Ok(u.symbols()[s.index - 1])
                };
                engine.run(&mut feed)?;
                Ok(h)
            },
        );
        for hs in batch {
            let hs = hs?;
            for ((s, q), h) in sum.iter_mut().zip(sum_sq.iter_mut()).zip(hs) {
                *s += h;
                *q += h * h;
            }
        }
        done += chunk;
    }
    let oracle = JointTable::build(model, n_exp)
        .ok()
        .map(|t| t.entropy_profile());
    let m = trials as f64;
    Ok((0..n)
        .map(|i| {
            let mean = sum[i] / m;
            let var = if trials > 1 {
                ((sum_sq[i] - m * mean * mean) / (m - 1.0)).max(0.0)
            } else {
                0.0
            };
            ProfileRow {
                index: i + 1,
                mean_h: mean,
                std_h: var.sqrt(),
                oracle_h: oracle.as_ref().map(|o| o[i]),
            }
        })
        .collect())
}

pub fn profile_csv(rows: &[ProfileRow]) -> String {
    let mut out = String::from("i,mean_h,std_h,oracle_h\n");
    for r in rows {
        let oracle = r.oracle_h.map(|v| v.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{}", r.index, r.mean_h, r.std_h, oracle).unwrap();
    }
    out
}

/// `a:b` inclusive ranges and single values, comma separated: `8:12,16`.
pub fn parse_int_list(text: &str) -> Result<Vec<u32>> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let bad = || Error::param(format!("bad integer list item '{part}'"));
        match part.split_once(':') {
            Some((a, b)) => {
                let a: u32 = a.trim().parse().map_err(|_| bad())?;
                let b: u32 = b.trim().parse().map_err(|_| bad())?;
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    if out.is_empty() {
        return Err(Error::param("empty integer list"));
    }
    Ok(out)
}

/// `start:stop:step` (inclusive, evaluated as `start + k·step`) or a comma
/// separated list of values.
pub fn parse_float_grid(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::param(format!("bad grid '{text}'"));
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    if parts.len() == 3 {
        let start: f64 = parts[0].parse().map_err(|_| bad())?;
        let stop: f64 = parts[1].parse().map_err(|_| bad())?;
        let step: f64 = parts[2].parse().map_err(|_| bad())?;
        if step.is_nan() || step <= 0.0 || stop < start {
            return Err(bad());
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize;
        return Ok((0..=count).map(|k| start + k as f64 * step).collect());
    }
    if parts.len() != 1 {
        return Err(bad());
    }
    let vals: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    if vals.is_empty() {
        return Err(bad());
    }
    Ok(vals)
}
