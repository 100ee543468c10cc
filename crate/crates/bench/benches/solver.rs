use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pks_bench::smooth_state;
use pks_core::solver::{Coupling, Stepper};
use pks_core::{FlowKind, FlowSpec, ModelParams};

fn heun_step(c: &mut Criterion) {
    let params = ModelParams::default().with_a(1024.0);
    let flow = FlowSpec::new(FlowKind::StationaryCos);
    let mut group = c.benchmark_group("step");
    for (dim, n) in [(2, 64), (2, 128), (3, 32)] {
        let state = smooth_state(dim, n);
        let stepper = Stepper::new(state.n.grid(), &params, &flow, Coupling::Chemotaxis).unwrap();
        group.bench_with_input(BenchmarkId::new(format!("{dim}d"), n), &state, |b, s| {
            b.iter(|| stepper.step(s, 1e-3).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, heun_step);
criterion_main!(benches);
