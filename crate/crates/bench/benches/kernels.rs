use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use csl_bench::{diagonal, golden_model};
use csl_core::arithmetic::cf_expand;
use csl_core::localization::eigenpairs_by_index;
use csl_core::operators::eigen::{dirichlet_eigenvalues, periodic_eigenvalues};
use csl_core::operators::{periodic_eval, sweep, transfer};
use csl_core::spectral::lyapunov;
use csl_core::IrrationalSpec;

fn determinants(c: &mut Criterion) {
    let model = golden_model(10.0);
    let mut g = c.benchmark_group("determinant");
    for n in [64, 1024, 16384] {
        let d = diagonal(&model, n);
        g.bench_with_input(BenchmarkId::new("dirichlet", n), &d, |b, d| b.iter(|| sweep(black_box(d), 5.0)));
        g.bench_with_input(BenchmarkId::new("periodic", n), &d, |b, d| b.iter(|| periodic_eval(black_box(d), 5.0)));
        g.bench_with_input(BenchmarkId::new("transfer", n), &d, |b, d| b.iter(|| transfer(black_box(d), 5.0)));
    }
    g.finish();
}

fn eigenvalues(c: &mut Criterion) {
    let model = golden_model(10.0);
    let mut g = c.benchmark_group("eigenvalues");
    g.sample_size(20);
    for n in [34, 89, 233] {
        let d = diagonal(&model, n);
        g.bench_with_input(BenchmarkId::new("dirichlet", n), &d, |b, d| b.iter(|| dirichlet_eigenvalues(black_box(d))));
        g.bench_with_input(BenchmarkId::new("periodic", n), &d, |b, d| b.iter(|| periodic_eigenvalues(black_box(d))));
    }
    g.finish();
}

fn eigenpairs(c: &mut Criterion) {
    let model = golden_model(10.0);
    let d = diagonal(&model, 2048);
    let mut g = c.benchmark_group("eigenpairs");
    g.sample_size(10);
    g.bench_function("10 middle pairs of 2048", |b| b.iter(|| eigenpairs_by_index(black_box(&d), 1019..1029, 7)));
    g.finish();
}

fn estimators(c: &mut Criterion) {
    let model = golden_model(10.0);
    let mut g = c.benchmark_group("estimators");
    g.sample_size(10);
    g.bench_function("lyapunov n=1e4 x8", |b| b.iter(|| lyapunov(&model, black_box(5.0), 10_000, 8)));
    g.bench_function("cf golden depth 40", |b| b.iter(|| cf_expand(black_box(&IrrationalSpec::golden()), 40)));
    g.finish();
}

criterion_group!(benches, determinants, eigenvalues, eigenpairs, estimators);
criterion_main!(benches);
