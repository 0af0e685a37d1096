//! Parallel against forced-sequential execution of the data-parallel kernels.

use bohmlab::par::Sequential;
use bohmlab::propagator::{compose_sliced, KernelMatrix, SliceScheme};
use bohmlab::solver::{evolve_trace, PotentialSpec, Units};
use bohmlab::stochastic::{sample_paths, NelsonDiffusion, PathInit, SamplingOptions};
use bohmlab::{Grid1D, WaveField};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;

fn packet(grid: &Grid1D) -> WaveField {
    WaveField::from_fn(grid, 0.0, |x| Complex64::from_polar((-x * x / 4.0).exp(), 2.0 * x))
        .and_then(|p| p.normalized())
        .expect("valid packet")
}

fn modes(c: &mut Criterion, name: &str, mut f: impl FnMut()) {
    let mut group = c.benchmark_group(name);
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("mode", "parallel"), |b| b.iter(&mut f));
    group.bench_function(BenchmarkId::new("mode", "sequential"), |b| {
        b.iter(|| {
            let _guard = Sequential::enter();
            f()
        })
    });
    group.finish();
}

fn benches(c: &mut Criterion) {
    let units = Units::default();

    let small = Grid1D::symmetric(6.0, 16).expect("grid");
    let pot = PotentialSpec::harmonic(1.0).with_units(units);
    let scheme = SliceScheme::new(16, 0.0, 1.0).expect("scheme");
    modes(c, "compose_sliced", || {
        compose_sliced(&pot, &scheme, &small).expect("compose");
    });

    let grid = Grid1D::symmetric(30.0, 1024).expect("grid");
    let psi = packet(&grid);
    let trace = evolve_trace(&psi, &PotentialSpec::free().with_units(units), 1e-3, 500, 10).expect("trace");
    let process = NelsonDiffusion::new(units);
    modes(c, "sample_paths", || {
        sample_paths(
            &trace,
            &process,
            SamplingOptions {
                n_paths: 10_000,
                master_seed: 1,
                init: PathInit::FromDensity,
            },
        )
        .expect("ensemble");
    });

    let kernel = KernelMatrix::free(&grid, 0.0, 1.0, units).expect("kernel");
    modes(c, "kernel_apply", || {
        kernel.apply(&psi).expect("apply");
    });
}

criterion_group!(parallel, benches);
criterion_main!(parallel);
