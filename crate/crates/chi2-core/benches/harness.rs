//! Parallel vs sequential replication throughput on the tail experiment.

use chi2_core::{
    run_tail_experiment, run_tail_experiment_sequential, Distribution, SmoothingRule,
    TailExperiment,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn tail_experiment_paths(c: &mut Criterion) {
    let p = Distribution::uniform(10).unwrap();
    let mut group = c.benchmark_group("tail_experiment");
    for replications in [200u64, 2000] {
        let exp = TailExperiment::new(
            p.clone(),
            SmoothingRule::Fixed(1.0),
            1000,
            0.05,
            replications,
        );
        group.bench_with_input(
            BenchmarkId::new("parallel", replications),
            &exp,
            |b, exp| b.iter(|| black_box(run_tail_experiment(exp, 42).unwrap())),
        );
        group.bench_with_input(
            BenchmarkId::new("sequential", replications),
            &exp,
            |b, exp| b.iter(|| black_box(run_tail_experiment_sequential(exp, 42).unwrap())),
        );
    }
    group.finish();
}

criterion_group!(benches, tail_experiment_paths);
criterion_main!(benches);
