use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use halfline::{
    make_initial_data, solve_linear, solve_nonlinear, Components, Grid1D, InitialData,
    InitialProfile, ModelParams, SolverConfig,
};

fn solvers(c: &mut Criterion) {
    let p = ModelParams::mixed(1.0, 1.0, 1.0).unwrap();
    let cfg = SolverConfig::new(Grid1D::new(100.0, 1000).unwrap(), 5.0);
    let init = make_initial_data(
        &InitialData::new(
            InitialProfile::Algebraic {
                amplitude: 0.01,
                r: 1.0,
            },
            Components::Both,
        ),
        &cfg.grid,
        &p,
    )
    .unwrap();

    let mut g = c.benchmark_group("solve to t = 5 on 1000 cells");
    g.sample_size(10);
    g.bench_function("linear", |b| {
        b.iter(|| solve_linear(black_box(&init), &p, &cfg).unwrap())
    });
    g.bench_function("nonlinear", |b| {
        b.iter(|| solve_nonlinear(black_box(&init), &p, &cfg).unwrap())
    });
    g.finish();
}

criterion_group!(benches, solvers);
criterion_main!(benches);
