use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use splitflow::{estimate_moments, SimConfig};
use splitflow_bench::split_model;

fn simulate(c: &mut Criterion) {
    let model = split_model(0.5);
    let mut group = c.benchmark_group("simulate");
    group.sample_size(20);
    for trials in [10_000u64, 100_000, 1_000_000] {
        group.throughput(Throughput::Elements(trials));
        group.bench_with_input(BenchmarkId::from_parameter(trials), &trials, |b, &n| {
            b.iter(|| estimate_moments(&model, &SimConfig::new(n, 7)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, simulate);
criterion_main!(benches);
