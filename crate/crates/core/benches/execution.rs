use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spinperm::anticon::estimate_moments;
use spinperm::permanent::gaussian_permanent_variance_check;
use spinperm::{Execution, ModelKind, Rng};

fn modes() -> [(&'static str, Execution); 2] {
    [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)]
}

fn permanent_variance(c: &mut Criterion) {
    let mut g = c.benchmark_group("permanent_variance_m5_4000");
    for (name, exec) in modes() {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| gaussian_permanent_variance_check(5, 4000, &Rng::new(1, 0), exec).unwrap())
        });
    }
    g.finish();
}

fn anticon_moments(c: &mut Criterion) {
    let mut g = c.benchmark_group("anticon_moments_h3_n4_64");
    g.sample_size(10);
    let t = 4.0 * 4f64.ln();
    for (name, exec) in modes() {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| estimate_moments(ModelKind::H3, 4, t, 64, &Rng::new(1, 0), exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, permanent_variance, anticon_moments);
criterion_main!(benches);
