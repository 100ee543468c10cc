use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pks_bench::smooth_state;
use pks_core::spectral::{derivative, solve_poisson};

fn transforms(c: &mut Criterion) {
    let mut group = c.benchmark_group("fft_round_trip");
    for (dim, n) in [(2, 64), (2, 128), (3, 32), (3, 48)] {
        let f = smooth_state(dim, n).n;
        group.bench_with_input(BenchmarkId::new(format!("{dim}d"), n), &f, |b, f| {
            b.iter(|| f.to_spectral().unwrap().into_physical())
        });
    }
    group.finish();
}

fn operators(c: &mut Criterion) {
    let f = smooth_state(2, 128).n;
    c.bench_function("derivative_2d_128", |b| b.iter(|| derivative(&f, 1, 1).unwrap()));
    c.bench_function("poisson_2d_128", |b| b.iter(|| solve_poisson(&f)));
}

criterion_group!(benches, transforms, operators);
criterion_main!(benches);
