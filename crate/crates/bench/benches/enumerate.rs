use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use svmenum::kernel::gram;
use svmenum::solver::solve_constrained;
use svmenum::{EnumConfig, EnumSession, IndexSet, KernelSpec, SolverParams, SvmProblem};
use svmenum_bench::overlapping;

fn gram_matrix(c: &mut Criterion) {
    let mut group = c.benchmark_group("gram");
    for n in [100, 400] {
        let ds = overlapping(n, 1);
        group.bench_with_input(BenchmarkId::new("rbf", n), &ds, |b, ds| {
            b.iter(|| gram(&KernelSpec::Rbf { gamma: 0.5 }, black_box(ds)).unwrap())
        });
    }
    group.finish();
}

fn root_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_full");
    for n in [50, 150, 300] {
        let ds = overlapping(n, 2);
        let problem = SvmProblem::new(Arc::clone(&ds), 1.0, KernelSpec::Linear).unwrap();
        let full = IndexSet::full(n);
        let params = SolverParams::default();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| solve_constrained(&problem, black_box(&full), &params).unwrap())
        });
    }
    group.finish();
}

fn top_k(c: &mut Criterion) {
    let mut group = c.benchmark_group("top_k");
    group.sample_size(10);
    for (n, k) in [(50, 50), (150, 20)] {
        let ds = overlapping(n, 3);
        group.bench_with_input(BenchmarkId::new(format!("n{n}"), k), &k, |b, &k| {
            b.iter(|| svmenum::top_k(Arc::clone(&ds), EnumConfig::new(1.0, KernelSpec::Linear), k).unwrap())
        });
    }
    group.finish();
}

/// Cost of one more model from a session that has already emitted 50.
fn next_model(c: &mut Criterion) {
    let ds = overlapping(150, 4);
    let mut warm = EnumSession::new(Arc::clone(&ds), EnumConfig::new(1.0, KernelSpec::Linear)).unwrap();
    for _ in 0..50 {
        warm.next_model().unwrap();
    }
    let snapshot = warm.snapshot();
    let problem = Arc::new(SvmProblem::new(Arc::clone(&ds), 1.0, KernelSpec::Linear).unwrap());
    c.bench_function("next_model_after_50", |b| {
        b.iter_batched(
            || EnumSession::restore_with_problem(Arc::clone(&problem), snapshot.clone()).unwrap(),
            |mut s| s.next_model().unwrap(),
            BatchSize::LargeInput,
        )
    });
}

criterion_group!(benches, gram_matrix, root_solve, top_k, next_model);
criterion_main!(benches);
