//! Benchmarks for the dominant computational stages: operator assembly,
//! subspace extraction, the polynomial certificate, superoperator
//! exponentials and whole-sample detection throughput.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use dfsslab_bench::{seeded_model, seeded_symmetric};
use dfsslab_core::dynamics::{evolve, superoperator, DensityMatrix, EvolveBackend};
use dfsslab_core::linalg::cr;
use dfsslab_core::sampling::{detect_subspace, detect_resultant};
use dfsslab_core::subspace::{cdfs_commutator, cdfs_invariant, dfs_basis};
use dfsslab_core::{cdfs_exists_v1, hamiltonian, CVector, QubitCount, Tolerances};

fn bench_operator_assembly(c: &mut Criterion) {
    let delta = seeded_symmetric(6, 11);
    let n = QubitCount::new(6).unwrap();
    c.bench_function("hamiltonian n=6", |b| {
        b.iter(|| hamiltonian(black_box(n), black_box(&delta)).unwrap())
    });
}

fn bench_subspace_pipeline(c: &mut Criterion) {
    let tol = Tolerances::default();
    let model = seeded_model(4, 23);
    let dfs = dfs_basis(&model, 1, &tol).unwrap();
    c.bench_function("cdfs fixed point n=4", |b| {
        b.iter(|| cdfs_invariant(black_box(&model), black_box(&dfs), &tol).unwrap())
    });
    c.bench_function("cdfs commutator n=4", |b| {
        b.iter(|| {
            cdfs_commutator(black_box(&model), black_box(&dfs), model.dim(), &tol).unwrap()
        })
    });
}

fn bench_certificate(c: &mut Criterion) {
    let tol = Tolerances::default();
    let delta = seeded_symmetric(6, 31);
    c.bench_function("resultant certificate n=6", |b| {
        b.iter(|| cdfs_exists_v1(black_box(&delta), &tol).unwrap())
    });
}

fn bench_evolution(c: &mut Criterion) {
    let model = seeded_model(3, 47);
    c.bench_function("superoperator n=3", |b| {
        b.iter(|| superoperator(black_box(&model)).unwrap())
    });

    let mut psi = CVector::zeros(model.dim());
    psi[1] = cr(1.0);
    let rho0 = DensityMatrix::pure(&psi).unwrap();
    let times = [0.5, 1.0, 2.0];
    c.bench_function("evolve expm n=3", |b| {
        b.iter(|| evolve(&model, black_box(&rho0), &times, EvolveBackend::MatrixExp).unwrap())
    });
}

fn bench_detection_throughput(c: &mut Criterion) {
    let tol = Tolerances::default();
    let delta = seeded_symmetric(5, 59);
    c.bench_function("subspace detector n=5", |b| {
        b.iter(|| detect_subspace(black_box(&delta), &tol).unwrap())
    });
    c.bench_function("resultant detector n=5", |b| {
        b.iter(|| detect_resultant(black_box(&delta), &tol).unwrap())
    });
}

criterion_group!(
    benches,
    bench_operator_assembly,
    bench_subspace_pipeline,
    bench_certificate,
    bench_evolution,
    bench_detection_throughput
);
criterion_main!(benches);
