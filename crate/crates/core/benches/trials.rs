use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use polarzip::bench::{run_fixed_trials, TrialSettings};
use polarzip::codec::{default_eps_fix, Codec};
use polarzip::{model_from_entropy, sample_block, EngineKind, Exec, SelectionMetric};

fn trial_batches(c: &mut Criterion) {
    let model = model_from_entropy(0.5).unwrap();
    let mut group = c.benchmark_group("fixed_trials");
    group.sample_size(10);
    for n_exp in [10u32, 14] {
        let trials = 64;
        group.throughput(Throughput::Elements(trials as u64));
        for (name, exec) in [
            ("sequential", Exec::Sequential),
            ("parallel", Exec::Parallel),
        ] {
            group.bench_with_input(BenchmarkId::new(name, n_exp), &n_exp, |b, &n_exp| {
                b.iter(|| {
                    run_fixed_trials(&model, n_exp, TrialSettings::default(), trials, 1, exec)
                        .unwrap()
                })
            });
        }
    }
    group.finish();
}

fn block_codec(c: &mut Criterion) {
    let model = model_from_entropy(0.5).unwrap();
    let mut group = c.benchmark_group("block");
    for (engine, metric) in [
        (EngineKind::Probability, SelectionMetric::MlError),
        (EngineKind::LlrMinSum, SelectionMetric::AbsLlr),
    ] {
        for n_exp in [12u32, 16] {
            let x = sample_block(&model, n_exp, 0);
            let th = polarzip::codec::threshold_for_metric(
                metric,
                default_eps_fix(n_exp, 2),
                Default::default(),
            );
            let mut codec = Codec::new(&model, n_exp, engine, metric).unwrap();
            let enc = codec.encode_fixed(&x, th).unwrap();
            group.throughput(Throughput::Elements(1 << n_exp));
            group.bench_function(
                BenchmarkId::new(format!("encode/{}", engine.name()), n_exp),
                |b| b.iter(|| codec.encode_fixed(black_box(&x), th).unwrap()),
            );
            group.bench_function(
                BenchmarkId::new(format!("decode/{}", engine.name()), n_exp),
                |b| b.iter(|| codec.decode_fixed(black_box(&enc), th).unwrap()),
            );
        }
    }
    group.finish();
}

criterion_group!(benches, trial_batches, block_codec);
criterion_main!(benches);
