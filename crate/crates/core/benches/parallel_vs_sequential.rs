//! Sequential vs parallel execution of the two hot loops: bootstrap
//! replicates and corpus text scoring.
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use volmo_core::par::{self, Execution};
use volmo_core::stats::{bootstrap_on_schedule, BootstrapConfig, ResampleSchedule};
use volmo_core::text::embed::OneHotProvider;
use volmo_core::text::{score_pair, ScoreConfig, TextPair};

fn f1(sample: &[&(bool, bool)]) -> f64 {
    let tp = sample.iter().filter(|(g, p)| *g && *p).count() as f64;
    let wrong = sample.iter().filter(|(g, p)| g != p).count() as f64;
    if tp == 0.0 {
        0.0
    } else {
        2.0 * tp / (2.0 * tp + wrong)
    }
}

fn bench_bootstrap(c: &mut Criterion) {
    let data: Vec<(bool, bool)> = (0..2_000).map(|i| (i % 5 == 0, i % 7 == 0 || i % 5 == 0)).collect();
    let config = BootstrapConfig {
        sample_size: data.len(),
        repeats: 1_000,
        seed: 1,
        ..Default::default()
    };
    let schedule = ResampleSchedule::generate(data.len(), &config).unwrap();
    let mut group = c.benchmark_group("bootstrap_1000x2000");
    for mode in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{mode:?}")), &mode, |b, &mode| {
            b.iter(|| bootstrap_on_schedule(black_box(&data), "f1", f1, &schedule, mode).unwrap())
        });
    }
    group.finish();
}

fn bench_corpus(c: &mut Criterion) {
    let words = [
        "soft", "drusen", "near", "the", "fovea", "macular", "hole", "edema", "optic", "disc", "cupping",
    ];
    let pairs: Vec<TextPair> = (0..500)
        .map(|i| TextPair {
            id: format!("p{i}"),
            model_id: None,
            candidate: (0..40)
                .map(|k| words[(i * 7 + k * 3) % words.len()])
                .collect::<Vec<_>>()
                .join(" "),
            reference: (0..40)
                .map(|k| words[(i * 5 + k) % words.len()])
                .collect::<Vec<_>>()
                .join(" "),
        })
        .collect();
    let provider = OneHotProvider::default();
    let config = ScoreConfig::default();
    let mut group = c.benchmark_group("score_corpus_500");
    for mode in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{mode:?}")), &mode, |b, &mode| {
            b.iter(|| par::map_with(mode, black_box(&pairs), |p| score_pair(p, &provider, &config).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_bootstrap, bench_corpus);
criterion_main!(benches);
