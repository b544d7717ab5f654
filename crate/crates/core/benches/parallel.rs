use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gaussphase::{
    apply_local, coeffs_from_squeezed, moments_by_quadrature_with, covariance_of_squeezed, solve_general, trajectory_with, EvolutionSpec,
    Exec, LocalSymplectic, QuadratureGrid, SolverOptions, SqueezedParams,
};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn bench_trajectory(c: &mut Criterion) {
    let mut g = c.benchmark_group("trajectory");
    for steps in [500, 5000] {
        let spec = EvolutionSpec { steps, ..Default::default() };
        for (name, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(name, steps), &spec, |b, spec| {
                b.iter(|| trajectory_with(black_box(spec), exec).unwrap())
            });
        }
    }
    g.finish();
}

fn bench_quadrature(c: &mut Criterion) {
    let coeffs = coeffs_from_squeezed(SqueezedParams::new(1.0, 1.0).unwrap());
    let mut g = c.benchmark_group("quadrature");
    for nodes in [64, 128] {
        let grid = QuadratureGrid { nodes_per_axis: nodes, domain_scale: 8.0 };
        for (name, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(name, nodes), &grid, |b, grid| {
                b.iter(|| moments_by_quadrature_with(black_box(&coeffs), grid, exec).unwrap())
            });
        }
    }
    g.finish();
}

fn bench_solver(c: &mut Criterion) {
    let v = apply_local(
        &covariance_of_squeezed(SqueezedParams::new(1.2, 0.8).unwrap()),
        &LocalSymplectic::new(0.6, 0.3, -1.1),
        &LocalSymplectic::new(-0.4, 2.0, 0.7),
    );
    let opts = SolverOptions::default();
    let mut g = c.benchmark_group("solve_general");
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| solve_general(black_box(&v), &opts, exec).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, bench_trajectory, bench_quadrature, bench_solver);
criterion_main!(benches);
