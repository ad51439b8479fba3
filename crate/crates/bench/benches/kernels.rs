use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gibbs_core::curve::LogFanoCurve;
use gibbs_core::rational::Q;
use gibbs_core::sampler::{run_chain, SamplerParams};
use gibbs_core::selberg::{convergence_run, selberg_log_z, Schedule, WeightTriple};
use gibbs_core::thresholds::lct_oracle;
use gibbs_core::toric::{legendre, phi0, ConvexProfile, Side};

fn oracle(c: &mut Criterion) {
    let curve = LogFanoCurve::from_weights(vec![Q::new(1, 2), Q::new(2, 3), Q::new(1, 5)]).unwrap();
    let mut g = c.benchmark_group("lct_oracle");
    for n in [20u64, 200] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| lct_oracle(black_box(&curve), n, true).unwrap())
        });
    }
    g.finish();
}

fn selberg(c: &mut Criterion) {
    let w = WeightTriple::new(0.3, 0.3, 0.3).unwrap();
    c.bench_function("selberg_log_z/800", |b| b.iter(|| selberg_log_z(black_box(&w), 800).unwrap()));
    let ns = [50, 100, 200, 400, 800];
    c.bench_function("convergence_run/symmetric", |b| {
        b.iter(|| convergence_run(&Schedule::Symmetric, black_box(&ns)).unwrap())
    });
}

fn legendre_transform(c: &mut Criterion) {
    let p = ConvexProfile::from_fn(Side::Primal, -64.0, 64.0, 16385, |x| phi0(2.0, x));
    c.bench_function("legendre/16385", |b| b.iter(|| legendre(black_box(&p), 1.0, 4097).unwrap()));
}

fn chain(c: &mut Criterion) {
    let mut g = c.benchmark_group("run_chain");
    g.sample_size(10);
    for n in [10usize, 50] {
        let mut p = SamplerParams::new(n, -0.5, 0.0, 20_000, 3);
        p.burn_in = 0;
        g.bench_with_input(BenchmarkId::from_parameter(n), &p, |b, p| b.iter(|| run_chain(black_box(p)).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, oracle, selberg, legendre_transform, chain);
criterion_main!(benches);
