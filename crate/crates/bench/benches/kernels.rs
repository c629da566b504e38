use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use halfline::special::erfcx;
use halfline::{
    e_function, green_leading, invert_laplace_green, EFunctionArgs, FourierOracle, ModelParams,
    QuadratureConfig,
};

fn special(c: &mut Criterion) {
    c.bench_function("erfcx sweep", |b| {
        b.iter(|| {
            (0..200)
                .map(|k| erfcx(black_box(-20.0 + 0.2 * k as f64)))
                .sum::<f64>()
        })
    });
    let args = EFunctionArgs::new(3.0, 5.0, 1.0, 2.0, 1.0).unwrap();
    c.bench_function("e_function", |b| {
        b.iter(|| e_function(black_box(&args)).unwrap())
    });
}

fn green(c: &mut Criterion) {
    let p = ModelParams::mixed(1.0, 1.0, 1.0).unwrap();
    let q = QuadratureConfig::default();
    c.bench_function("green_leading", |b| {
        b.iter(|| green_leading(black_box(5.0), 3.0, 4.0, &p).unwrap())
    });
    let mut g = c.benchmark_group("invert_laplace_green");
    g.sample_size(20);
    for t in [1.0, 10.0] {
        g.bench_with_input(BenchmarkId::from_parameter(t), &t, |b, &t| {
            b.iter(|| invert_laplace_green(5.0, 3.0, black_box(t), &p, &q).unwrap())
        });
    }
    g.finish();

    let mut g = c.benchmark_group("fourier_oracle");
    g.sample_size(10);
    g.bench_function("build", |b| {
        b.iter(|| FourierOracle::new(black_box(5.0), &p, &q).unwrap())
    });
    let oracle = FourierOracle::new(5.0, &p, &q).unwrap();
    g.bench_function("evaluate", |b| b.iter(|| oracle.smooth(black_box(2.5))));
    g.finish();
}

criterion_group!(benches, special, green);
criterion_main!(benches);
