use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mipt_core::circuit::{build_circuit, CircuitSpec};
use mipt_core::dataset::{generate_dataset, Labels};
use mipt_core::par::Exec;
use mipt_core::trajectory::purification_histogram;

fn datasets(c: &mut Criterion) {
    let inst = (0..)
        .map(|s| build_circuit(&CircuitSpec::new(32, 16, 0.3, s)).unwrap())
        .find(|c| mipt_core::trajectory::purification_time(c).is_some())
        .unwrap();
    let mut group = c.benchmark_group("dataset_L32_T16");
    group.sample_size(10);
    for (name, exec) in [("parallel", Exec::Auto), ("sequential", Exec::Sequential)] {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| generate_dataset(black_box(&inst), 512, None, 0, Labels::Purified, exec).unwrap())
        });
    }
    group.finish();
}

fn histograms(c: &mut Criterion) {
    let mut group = c.benchmark_group("purification_hist_L24");
    group.sample_size(10);
    for (name, exec) in [("parallel", Exec::Auto), ("sequential", Exec::Sequential)] {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| purification_histogram(24, 24, 0.16, 256, black_box(7), exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, datasets, histograms);
criterion_main!(benches);
