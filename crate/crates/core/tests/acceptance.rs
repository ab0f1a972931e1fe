//! Acceptance gate. Each test prints one `PASS`/`FAIL` line; run with
//! `cargo test --test acceptance -- --nocapture --test-threads=1` to see them.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use polarzip::bench::{self, TrialSettings};
use polarzip::codec::{default_eps_fix, threshold_for_metric, Codec, GammaMode};
use polarzip::oracle::{self, Coverage, JointTable};
use polarzip::sc::{EngineKind, IndexStats, ScEngine, SelectionMetric};
use polarzip::source::{model_from_entropy, sample_block, trial_seed, SourceModel};
use polarzip::transform::{forward, SymbolBlock};
use polarzip::{par, rate_of, Exec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(criterion: u32, ok: bool, detail: impl std::fmt::Display) {
    let tag = if ok { "PASS" } else { "FAIL" };
    println!("{tag} criterion {criterion}: {detail}");
    assert!(ok, "criterion {criterion} failed: {detail}");
}

fn default_settings() -> TrialSettings {
    TrialSettings::default()
}

fn mean_fixed_rate(model: &SourceModel, n_exp: u32, trials: usize, seed: u64) -> f64 {
    let res = bench::run_fixed_trials(
        model,
        n_exp,
        default_settings(),
        trials,
        seed,
        Exec::Parallel,
    )
    .unwrap();
    res.iter().map(|t| t.analytic_rate).sum::<f64>() / res.len() as f64
}

fn random_model(rng: &mut ChaCha8Rng, radix: usize) -> SourceModel {
    let skew: i32 = rng.random_range(1..=4);
    let w: Vec<f64> = (0..radix)
        .map(|_| rng.random_range(0.01f64..1.0).powi(skew))
        .collect();
    let s: f64 = w.iter().sum();
    let mut p: Vec<f64> = w.iter().map(|v| v / s).collect();
    let tail: f64 = p[1..].iter().sum();
    p[0] = 1.0 - tail;
    SourceModel::new(p).unwrap()
}

const ROUNDTRIP_CYCLES: usize = 10_000;

#[test]
fn criterion_1_lossless_roundtrip() {
    let start = Instant::now();
    let outcomes = par::map_with(
        Exec::Parallel,
        ROUNDTRIP_CYCLES,
        || (),
        |_, k| {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(0xacce_0001, 0, k as u64));
            let radix = [2usize, 3, 5][rng.random_range(0..3)];
            let model = random_model(&mut rng, radix);
            let n_exp = rng.random_range(1..=12u32);
            let engine = if radix == 2 && rng.random_bool(0.5) {
                EngineKind::LlrMinSum
            } else {
                EngineKind::Probability
            };
            let metric = match (engine, rng.random_range(0..3)) {
                (EngineKind::LlrMinSum, 0) => SelectionMetric::AbsLlr,
                (_, 1) => SelectionMetric::EntropyH,
                _ => SelectionMetric::MlError,
            };
            let adaptive = rng.random_bool(0.5);
            let x = sample_block(&model, n_exp, rng.random());
            let mut codec = Codec::new(&model, n_exp, engine, metric).unwrap();
            let back = if adaptive {
                codec
                    .encode_adaptive(&x)
                    .and_then(|e| codec.decode_adaptive(&e))
            } else {
                let th = threshold_for_metric(
                    metric,
                    default_eps_fix(n_exp, model.radix()),
                    GammaMode::ExactLlr,
                );
                codec
                    .encode_fixed(&x, th)
                    .and_then(|e| codec.decode_fixed(&e, th))
            };
            matches!(back, Ok(ref b) if *b == x)
        },
    );
    let elapsed = start.elapsed();
    let mismatches = outcomes.iter().filter(|ok| !**ok).count();
    verdict(
        1,
        mismatches == 0 && elapsed < Duration::from_secs(120),
        format!("{ROUNDTRIP_CYCLES} cycles, {mismatches} mismatches, {elapsed:.1?}"),
    );
}

#[test]
fn criterion_2_oracle_equivalence() {
    let mut compared = 0;
    let mut failures = Vec::new();
    let mut check =
        |model: &SourceModel, n_exp: u32, coverage: Coverage| match oracle::check_against_oracle(
            model,
            n_exp,
            coverage,
            1e-9,
            |u| oracle::engine_conditionals(model, n_exp, u),
        )
        .unwrap()
        {
            Ok(c) => compared += c,
            Err(d) => failures.push(d.to_string()),
        };
    for radix in [2u8, 3] {
        for model in oracle::check_models(radix).unwrap() {
            for n_exp in [1, 2] {
                check(&model, n_exp, Coverage::Exhaustive);
            }
        }
    }
    for model in oracle::check_models(2).unwrap() {
        check(
            &model,
            3,
            Coverage::Sampled {
                count: 256,
                seed: 0xacce_0002,
            },
        );
    }
    verdict(
        2,
        failures.is_empty(),
        format!("{compared} conditionals within 1e-9; deviations: {failures:?}"),
    );
}

#[test]
fn criterion_3_binary_table() {
    let rows = [
        (0.5, 10u32, 0.53636),
        (0.1, 10, 0.11937),
        (0.9, 12, 0.91437),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (h, n_exp, target) in rows {
        let model = model_from_entropy(h).unwrap();
        let mean = mean_fixed_rate(&model, n_exp, 1000, 0xacce_0003);
        ok &= (mean - target).abs() <= 0.01;
        detail.push(format!("H={h} N=2^{n_exp}: {mean:.5} vs {target}"));
    }
    verdict(3, ok, detail.join("; "));
}

#[test]
fn criterion_4_ternary_table() {
    let rows = [
        (vec![0.9214, 0.0393, 0.0393], 0.33684),
        (vec![0.07, 0.09, 0.84], 0.54055),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (probs, target) in rows {
        let model = SourceModel::new(probs.clone()).unwrap();
        let mean = mean_fixed_rate(&model, 10, 1000, 0xacce_0004);
        ok &= (mean - target).abs() <= 0.012;
        detail.push(format!("{probs:?}: {mean:.5} vs {target}"));
    }
    verdict(4, ok, detail.join("; "));
}

#[test]
fn criterion_5_rate_near_entropy() {
    let grid = [0.05, 0.11, 0.2, 0.316, 0.5];
    let rows = bench::bench_sweep(
        &grid,
        &[16],
        default_settings(),
        100,
        0xacce_0005,
        Exec::Parallel,
    )
    .unwrap();
    let mut ok = rows.len() == grid.len();
    let mut detail = Vec::new();
    for row in &rows {
        let gap = row.summary.mean_rate - row.entropy;
        ok &= (-0.005..=0.02).contains(&gap);
        detail.push(format!("p={} gap={gap:+.4}", row.p));
    }
    verdict(5, ok, detail.join("; "));
}

#[test]
fn criterion_6_bler_from_truncation() {
    let model = model_from_entropy(0.5).unwrap();
    let rates = bench::parse_float_grid("0.40:0.80:0.005").unwrap();
    let runs = bench::bench_bler(
        &model,
        &[10, 12],
        &rates,
        default_settings(),
        1000,
        0xacce_0006,
        Exec::Parallel,
    )
    .unwrap();
    let mut ok = true;
    let mut detail = Vec::new();
    for run in &runs {
        let n = (1u64 << run.n_exp) as f64;
        let log_n = run.n_exp as f64;
        // R_fix recomputed from the raw counts, binary so log_2(r-1) = 0
        let samples: Vec<f64> = run
            .trials
            .iter()
            .map(|t| (log_n + t.g_count as f64 + t.correction_count as f64 * log_n) / n)
            .collect();
        let total = samples.len();
        let mut exact = true;
        for (&r, &bler) in run.rates.iter().zip(&run.bler) {
            let below = samples.iter().filter(|&&s| s <= r).count();
            let cdf = below as f64 / total as f64;
            exact &= bler == (total - below) as f64 / total as f64;
            exact &= (bler - (1.0 - cdf)).abs() <= f64::EPSILON;
        }
        let monotone = run.bler.windows(2).all(|w| w[1] <= w[0]);
        let ends = run.bler.first() == Some(&1.0) && run.bler.last() == Some(&0.0);
        ok &= exact && monotone && ends;
        detail.push(format!(
            "N=2^{}: exact={exact} monotone={monotone} spans 1..0={ends}",
            run.n_exp
        ));
    }
    verdict(6, ok, detail.join("; "));
}

fn block_identities(
    model: &SourceModel,
    n_exp: u32,
    engine: EngineKind,
    metric: SelectionMetric,
    seed: u64,
) -> Result<(), String> {
    let x = sample_block(model, n_exp, seed);
    let r = model.radix();
    let mut codec = Codec::new(model, n_exp, engine, metric).unwrap();
    let trace = codec.trace(&x).unwrap();

    let adaptive = codec.encode_adaptive(&x).unwrap();
    let g: Vec<usize> = match adaptive.threshold {
        Some(th) => trace.retained(metric, th),
        None => Vec::new(),
    };
    if !trace.errors.iter().all(|i| g.contains(i)) {
        return Err("error set not inside adaptive retained set".into());
    }

    let th = threshold_for_metric(metric, default_eps_fix(n_exp, r), GammaMode::ExactLlr);
    let fixed = codec.encode_fixed(&x, th).unwrap();
    let g_fix = trace.retained(metric, th);
    let star: Vec<usize> = trace
        .errors
        .iter()
        .copied()
        .filter(|i| !g_fix.contains(i))
        .collect();
    let got: Vec<usize> = fixed.corrections.iter().map(|c| c.index).collect();
    if got != star || fixed.g_count != g_fix.len() {
        return Err("correction set differs from E \\ G_fix".into());
    }
    for c in &fixed.corrections {
        let i = c.index - 1;
        if c.delta != (trace.u[i] + r - trace.ml_decision[i]) % r {
            return Err(format!("bad delta at index {}", c.index));
        }
    }

    let report = rate_of(&fixed, n_exp, model);
    let n = (1u64 << n_exp) as f64;
    let log_n = n_exp as f64 * (std::f64::consts::LN_2 / (r as f64).ln());
    let log_rm1 = ((r - 1) as f64).ln() / (r as f64).ln();
    let expect = (log_n + g_fix.len() as f64 + star.len() as f64 * (log_n + log_rm1)) / n;
    if report.analytic_rate != expect
        || report.g_count != g_fix.len()
        || report.correction_count != star.len()
    {
        return Err(format!("rate report {} vs {expect}", report.analytic_rate));
    }
    Ok(())
}

/// `Σ_u P(u) Σ_i ħ_i(u)` computed by the engine over every block.
fn engine_expected_entropy_sum(model: &SourceModel, n_exp: u32) -> f64 {
    let r = model.radix() as usize;
    let n = 1usize << n_exp;
    let mut engine = ScEngine::new(model, n_exp, EngineKind::Probability).unwrap();
    let mut total = 0.0;
    for code in 0..r.pow(n as u32) {
        let mut c = code;
        let mut prob = 1.0;
        let x: Vec<u8> = (0..n)
            .map(|_| {
                let d = c % r;
                c /= r;
                prob *= model.probs()[d];
                d as u8
            })
            .collect();
        let u = forward(&SymbolBlock::new(r as u8, x).unwrap());
        let mut sum_h = 0.0;
        let mut feed = |s: &IndexStats| {
            sum_h += s.entropy_h;
            Ok(u.symbols()[s.index - 1])
        };
        engine.run(&mut feed).unwrap();
        total += prob * sum_h;
    }
    total
}

#[test]
fn criterion_7_set_and_rate_identities() {
    let mut blocks = 0;
    let mut failures = Vec::new();
    let configs: Vec<(Vec<f64>, EngineKind, SelectionMetric)> = vec![
        (
            vec![0.89, 0.11],
            EngineKind::Probability,
            SelectionMetric::MlError,
        ),
        (
            vec![0.89, 0.11],
            EngineKind::Probability,
            SelectionMetric::EntropyH,
        ),
        (
            vec![0.7, 0.3],
            EngineKind::LlrMinSum,
            SelectionMetric::AbsLlr,
        ),
        (
            vec![0.97, 0.03],
            EngineKind::LlrMinSum,
            SelectionMetric::MlError,
        ),
        (
            vec![0.9214, 0.0393, 0.0393],
            EngineKind::Probability,
            SelectionMetric::MlError,
        ),
        (
            vec![0.07, 0.09, 0.84],
            EngineKind::Probability,
            SelectionMetric::EntropyH,
        ),
        (
            vec![0.6, 0.2, 0.1, 0.06, 0.04],
            EngineKind::Probability,
            SelectionMetric::MlError,
        ),
    ];
    for (probs, engine, metric) in &configs {
        let model = SourceModel::new(probs.clone()).unwrap();
        for n_exp in [2u32, 6, 10] {
            for t in 0..40u64 {
                blocks += 1;
                if let Err(e) = block_identities(
                    &model,
                    n_exp,
                    *engine,
                    *metric,
                    trial_seed(7, n_exp as u64, t),
                ) {
                    failures.push(format!("{probs:?} 2^{n_exp} trial {t}: {e}"));
                }
            }
        }
    }

    let mut worst: f64 = 0.0;
    for radix in [2u8, 3] {
        for model in oracle::check_models(radix).unwrap() {
            let h = model.entropy(2);
            for n_exp in 0..=3u32 {
                let n = (1u64 << n_exp) as f64;
                let oracle_sum: f64 = JointTable::build(&model, n_exp)
                    .unwrap()
                    .entropy_profile()
                    .iter()
                    .sum();
                let engine_sum = engine_expected_entropy_sum(&model, n_exp);
                worst = worst
                    .max((oracle_sum - n * h).abs())
                    .max((engine_sum - n * h).abs());
            }
        }
    }
    verdict(
        7,
        failures.is_empty() && worst <= 1e-9,
        format!("{blocks} blocks checked, chain-rule residual {worst:.2e}, failures {failures:?}"),
    );
}

const BIN: &str = env!("CARGO_BIN_EXE_polarzip");

fn cli(args: &[&str], threads: &str) -> Vec<u8> {
    let out = Command::new(BIN)
        .args(args)
        .env("POLARZIP_THREADS", threads)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

fn cli_file(args: &[&str], threads: &str, path: &Path) -> Vec<u8> {
    cli(args, threads);
    std::fs::read(path).unwrap()
}

#[test]
fn criterion_8_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out.csv");
    let csv_s = csv.to_str().unwrap();
    let input = dir.path().join("in.bin");
    let data: Vec<u8> = (0..20_000u64)
        .map(|i| {
            if trial_seed(8, 0, i).is_multiple_of(9) {
                0x24
            } else {
                0
            }
        })
        .collect();
    std::fs::write(&input, data).unwrap();
    let packed = dir.path().join("out.pzc");

    let commands: Vec<(&str, Vec<&str>)> = vec![
        (
            "bench rate",
            vec![
                "bench",
                "rate",
                "--entropy-base2",
                "0.5",
                "--n-exp-range",
                "8:10",
                "--trials",
                "200",
                "--seed",
                "11",
                "--csv",
                csv_s,
            ],
        ),
        (
            "bench sweep",
            vec![
                "bench",
                "sweep",
                "--p-grid",
                "0.05:0.5:0.15",
                "--n-exp",
                "9",
                "--trials",
                "100",
                "--seed",
                "12",
                "--csv",
                csv_s,
            ],
        ),
        (
            "bench bler",
            vec![
                "bench",
                "bler",
                "--entropy-base2",
                "0.5",
                "--n-exp",
                "9",
                "--rates",
                "0.5:0.7:0.01",
                "--trials",
                "200",
                "--seed",
                "13",
                "--csv",
                csv_s,
            ],
        ),
        (
            "profile",
            vec![
                "profile", "--probs", "0.9,0.1", "--n-exp", "3", "--trials", "600", "--seed", "14",
                "--csv", csv_s,
            ],
        ),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, args) in &commands {
        let a = cli_file(args, "0", &csv);
        let b = cli_file(args, "0", &csv);
        let c = cli_file(args, "1", &csv);
        let same = !a.is_empty() && a == b && a == c;
        ok &= same;
        detail.push(format!("{name}={same}"));
    }
    for scheme in ["fixed", "adaptive"] {
        let args = [
            "compress",
            input.to_str().unwrap(),
            packed.to_str().unwrap(),
            "--probs",
            "0.985,0.015",
            "--block-exp",
            "12",
            "--scheme",
            scheme,
        ];
        let a = cli_file(&args, "0", &packed);
        let b = cli_file(&args, "0", &packed);
        let c = cli_file(&args, "1", &packed);
        let same = a == b && a == c;
        ok &= same;
        detail.push(format!("compress {scheme}={same}"));
    }
    verdict(8, ok, detail.join(" "));
}

fn median(mut v: Vec<Duration>) -> Duration {
    v.sort();
    v[v.len() / 2]
}

#[test]
fn criterion_9_encode_scaling() {
    let model = model_from_entropy(0.5).unwrap();
    let th = default_eps_fix(14, 2);
    let mut small = Codec::new(
        &model,
        14,
        EngineKind::Probability,
        SelectionMetric::MlError,
    )
    .unwrap();
    let mut large = Codec::new(
        &model,
        15,
        EngineKind::Probability,
        SelectionMetric::MlError,
    )
    .unwrap();
    let mut t_small = Vec::new();
    let mut t_large = Vec::new();
    // warm-up, then interleave so drift hits both sizes alike
    for rep in 0..17u64 {
        let xs = sample_block(&model, 14, rep);
        let xl = sample_block(&model, 15, rep);
        let start = Instant::now();
        small.encode_fixed(&xs, th).unwrap();
        let ds = start.elapsed();
        let start = Instant::now();
        large.encode_fixed(&xl, th).unwrap();
        let dl = start.elapsed();
        if rep > 0 {
            t_small.push(ds);
            t_large.push(dl);
        }
    }
    let (ms, ml) = (median(t_small), median(t_large));
    let ratio = ml.as_secs_f64() / ms.as_secs_f64();
    verdict(
        9,
        ratio <= 3.0,
        format!("median encode 2^14 {ms:.2?}, 2^15 {ml:.2?}, ratio {ratio:.2}"),
    );
}
