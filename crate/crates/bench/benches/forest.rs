use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use stormpanel_bench::forest_dataset;
use stormpanel_core::predict::{fit_forest, ForestParams};

fn forest(c: &mut Criterion) {
    let mut g = c.benchmark_group("fit_forest");
    g.sample_size(10);
    for n in [1000, 5000] {
        let ds = forest_dataset(3, n);
        let params = ForestParams {
            n_trees: 100,
            ..Default::default()
        };
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| fit_forest(&ds.x, &ds.y, &params).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, forest);
criterion_main!(benches);
