use acl_bench::{exact_instances, sphere};
use acl_core::charfn::cf_weighted_sum;
use acl_core::{
    ball_integral, condition_margin, essential_lcd, exact_q, mc_q, IntegrationOptions, LcdOptions, MarginOptions,
    ScalarLaw,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn exact(c: &mut Criterion) {
    let mut g = c.benchmark_group("exact_q");
    for (label, law, a, lambda) in exact_instances() {
        g.bench_function(label, |b| b.iter(|| exact_q(&law, black_box(&a), lambda).unwrap()));
    }
    g.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let mut g = c.benchmark_group("mc_q");
    g.sample_size(10);
    for d in [1, 2] {
        let a = sphere(32, d);
        g.bench_with_input(BenchmarkId::new("gaussian/n32", d), &a, |b, a| {
            b.iter(|| mc_q(&ScalarLaw::Gaussian { mean: 0.0, stddev: 1.0 }, a, 1.0, 50_000, 7).unwrap())
        });
    }
    g.finish();
}

fn esseen_integral(c: &mut Criterion) {
    let mut g = c.benchmark_group("ball_integral");
    g.sample_size(10);
    let opts = IntegrationOptions { points: 1 << 14, ..IntegrationOptions::default() };
    for d in [1, 2, 3] {
        let a = sphere(8, d);
        let r = (d as f64).sqrt();
        g.bench_with_input(BenchmarkId::new("rademacher/n8", d), &a, |b, a| {
            b.iter(|| ball_integral(|t| cf_weighted_sum(&ScalarLaw::Rademacher, a, t).unwrap().re, d, r, &opts).unwrap())
        });
    }
    g.finish();
}

fn arithmetic(c: &mut Criterion) {
    let mut g = c.benchmark_group("arith");
    g.sample_size(10);
    let a = sphere(16, 2);
    let opts = MarginOptions { points: 1 << 14, ..MarginOptions::default() };
    g.bench_function("condition_margin/n16d2", |b| b.iter(|| condition_margin(black_box(&a), 2.0, &opts).unwrap()));
    let ones = acl_core::CoefficientMatrix::ones(4).unwrap();
    g.bench_function("essential_lcd/ones4", |b| {
        b.iter(|| essential_lcd(black_box(&ones), 0.5, 0.1, 4.0, &LcdOptions::default()).unwrap())
    });
    g.finish();
}

criterion_group!(benches, exact, monte_carlo, esseen_integral, arithmetic);
criterion_main!(benches);
