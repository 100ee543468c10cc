use criterion::{criterion_group, criterion_main, Criterion};
use pks_bench::smooth_state;
use pks_core::diagnostics::{free_energy, functional_f_m, remainder};

fn functionals(c: &mut Criterion) {
    let s = smooth_state(2, 128);
    let (n, cc) = (remainder(&s.n), remainder(&s.c));
    c.bench_function("f_m_2d_128_m3", |b| b.iter(|| functional_f_m(&n, &cc, 1024.0, 3).unwrap()));
    c.bench_function("free_energy_2d_128", |b| b.iter(|| free_energy(&s.n, &s.c).unwrap()));

    let s3 = smooth_state(3, 32);
    let (n3, c3) = (remainder(&s3.n), remainder(&s3.c));
    c.bench_function("f_m_3d_32_m3", |b| b.iter(|| functional_f_m(&n3, &c3, 1024.0, 3).unwrap()));
}

criterion_group!(benches, functionals);
criterion_main!(benches);
