use std::hint::black_box;

use convpred::{
    analyze, fcp, lambda_weights, sdr_512, si_sdr, solve_wls, synthesize, wpe_vanilla, LambdaMode,
    PredConfig,
};
use convpred_bench::fixture;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn solver(c: &mut Criterion) {
    let fx = fixture(16_000, 4.0);
    let w = lambda_weights(&fx.y, LambdaMode::MixPower, 1e-3).unwrap();
    let mut g = c.benchmark_group("solve_wls");
    g.sample_size(10);
    for taps in [10, 20, 40] {
        g.bench_with_input(BenchmarkId::from_parameter(taps), &taps, |b, &k| {
            b.iter(|| solve_wls(black_box(&fx.est), black_box(&fx.y), k, 0, &w, 1e-6).unwrap())
        });
    }
    g.finish();
}

fn algorithms(c: &mut Criterion) {
    let fx = fixture(16_000, 4.0);
    let mut g = c.benchmark_group("algorithms");
    g.sample_size(10);
    g.bench_function("fcp", |b| {
        b.iter(|| fcp(black_box(&fx.y), black_box(&fx.est), &PredConfig::fcp()).unwrap())
    });
    g.bench_function("wpe_vanilla", |b| {
        b.iter(|| wpe_vanilla(black_box(&fx.y), &PredConfig::wpe()).unwrap())
    });
    g.finish();
}

fn transform(c: &mut Criterion) {
    let fx = fixture(16_000, 4.0);
    let x = &fx.scene.y;
    c.bench_function("stft/analyze", |b| {
        b.iter(|| analyze(black_box(x), &fx.stft).unwrap())
    });
    c.bench_function("stft/synthesize", |b| {
        b.iter(|| synthesize(black_box(&fx.y), x.len()).unwrap())
    });
}

fn metrics(c: &mut Criterion) {
    let fx = fixture(16_000, 4.0);
    let (y, s) = (&fx.scene.y, &fx.scene.s);
    c.bench_function("metrics/si_sdr", |b| {
        b.iter(|| si_sdr(black_box(y), s).unwrap())
    });
    let mut g = c.benchmark_group("metrics");
    g.sample_size(10);
    g.bench_function("sdr_512", |b| b.iter(|| sdr_512(black_box(y), s).unwrap()));
    g.finish();
}

criterion_group!(benches, solver, algorithms, transform, metrics);
criterion_main!(benches);
