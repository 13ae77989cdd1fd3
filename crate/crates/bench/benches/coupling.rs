use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use prhl_bench::skewed_pair;
use prhl_core::case_studies::{build, run_built, Params};
use prhl_core::dist::{lifting_exists, tv_distance};
use prhl_core::prhl::check_proof;

fn lifting(c: &mut Criterion) {
    let mut group = c.benchmark_group("lifting");
    for n in [8, 16, 32] {
        let (up, down) = skewed_pair(n);
        let ge = |a: &i64, b: &i64| a >= b;
        group.bench_with_input(BenchmarkId::new("ge", n), &n, |b, _| {
            b.iter(|| lifting_exists(&ge, black_box(&up), black_box(&down)))
        });
        group.bench_with_input(BenchmarkId::new("tv", n), &n, |b, _| {
            b.iter(|| tv_distance(black_box(&up), black_box(&down)))
        });
    }
    group.finish();
}

fn studies(c: &mut Criterion) {
    let mut group = c.benchmark_group("case-study");
    group.sample_size(10);
    for name in ["random-walk", "biased-coins", "bins", "birth-death"] {
        let built = build(name, &Params::new()).expect("default parameters are valid");
        let (j, script) = built.judgment().expect("shipped studies parse");
        group.bench_function(BenchmarkId::new("check", name), |b| {
            b.iter(|| check_proof(&j, &script.proof, &built.domains, built.fuel).is_ok())
        });
        group.bench_function(BenchmarkId::new("full", name), |b| {
            b.iter(|| run_built(&built))
        });
    }
    group.finish();
}

criterion_group!(benches, lifting, studies);
criterion_main!(benches);
