//! Kernel timings on one thread against the full rayon pool. Built without the
//! `parallel` feature, only the sequential variants run.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ebh_core::model::apply_hamiltonian;
use ebh_core::obs::{self, WitnessKernel};
use ebh_core::sweep::{self, recipes, Observables};
use ebh_core::{build_hamiltonian, enumerate_basis, solve, ModelParams, SolverOptions};

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    if !ebh_core::par::is_parallel() {
        return vec![("sequential", one)];
    }
    let all = rayon::ThreadPoolBuilder::new().build().unwrap();
    vec![("1-thread", one), ("pool", all)]
}

fn params() -> ModelParams {
    ModelParams {
        hopping: 0.5,
        long_range: 0.3,
        ..ModelParams::new(8, 8)
    }
}

fn hamiltonian(c: &mut Criterion) {
    let p = params();
    let basis = enumerate_basis(8, 8).unwrap();
    let h = build_hamiltonian(&p, &basis).unwrap();
    let psi = vec![1.0 / (basis.dim() as f64).sqrt(); basis.dim()];
    let mut g = c.benchmark_group("hamiltonian");
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::new("build", name), |b| {
            pool.install(|| b.iter(|| build_hamiltonian(&p, &basis).unwrap()))
        });
        g.bench_function(BenchmarkId::new("csr_matvec", name), |b| {
            let mut out = vec![0.0; basis.dim()];
            pool.install(|| b.iter(|| h.matvec_into(&psi, &mut out)))
        });
        g.bench_function(BenchmarkId::new("matrix_free", name), |b| {
            pool.install(|| b.iter(|| apply_hamiltonian(&p, &basis, &psi).unwrap()))
        });
    }
    g.finish();
}

fn observables(c: &mut Criterion) {
    let (basis, gs) = solve(&params(), &SolverOptions::default()).unwrap();
    let psi = gs.vector;
    let mut g = c.benchmark_group("observables");
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::new("witness_all", name), |b| {
            pool.install(|| b.iter(|| obs::witness_all(&psi, &basis).unwrap()))
        });
        g.bench_function(BenchmarkId::new("witness_cached", name), |b| {
            let kernel = pool.install(|| WitnessKernel::new(&basis));
            pool.install(|| b.iter(|| kernel.mode(&psi, 0).unwrap()))
        });
        g.bench_function(BenchmarkId::new("entropy", name), |b| {
            pool.install(|| b.iter(|| obs::entanglement_entropy(&psi, &basis, 4).unwrap()))
        });
    }
    g.finish();
}

fn solver_and_sweep(c: &mut Criterion) {
    let spec = sweep::SweepSpec {
        values: sweep::linspace(0.0, 2.0, 4),
        observables: Observables {
            gap: false,
            ..Observables::ALL
        },
        ..recipes::fig2()
    };
    let mut g = c.benchmark_group("solve");
    g.sample_size(10);
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::new("ground_state", name), |b| {
            pool.install(|| b.iter(|| solve(&params(), &SolverOptions::default()).unwrap()))
        });
        g.bench_function(BenchmarkId::new("sweep_4_points", name), |b| {
            pool.install(|| b.iter(|| sweep::run_sweep(&spec).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, hamiltonian, observables, solver_and_sweep);
criterion_main!(benches);
