use std::f64::consts::PI;

use bohmlab::sampling::{ks_distance, DensityCdf};
use bohmlab::solver::{evolve_trace, EvolutionTrace, PotentialSpec, Units};
use bohmlab::stochastic::{
    conditional_mean_velocity, conditional_osmotic_velocity, mean_path_vs_bohm, sample_paths, NelsonDiffusion,
    PathEnsemble, PathInit, SamplingOptions,
};
use bohmlab::{Grid1D, WaveField};
use num_complex::Complex64;

fn gaussian(g: &Grid1D, sigma: f64, x0: f64) -> WaveField {
    WaveField::from_fn(g, 0.0, |x| Complex64::new((-(x - x0).powi(2) / (4.0 * sigma * sigma)).exp(), 0.0))
        .unwrap()
        .normalized()
        .unwrap()
}

fn from_density(trace: &EvolutionTrace, n_paths: usize, seed: u64) -> PathEnsemble {
    sample_paths(
        trace,
        &NelsonDiffusion::new(Units::default()),
        SamplingOptions {
            n_paths,
            master_seed: seed,
            init: PathInit::FromDensity,
        },
    )
    .unwrap()
}

fn max_ks(trace: &EvolutionTrace, ens: &PathEnsemble, every: usize) -> f64 {
    (0..trace.len())
        .step_by(every)
        .map(|k| {
            let cdf = DensityCdf::new(&trace.snapshots()[k].density()).unwrap();
            ks_distance(&ens.wrapped_positions(k, trace.grid()), &cdf).unwrap()
        })
        .fold(0.0, f64::max)
}

#[test]
fn free_gaussian_ensemble_tracks_density_and_velocity() {
    let g = Grid1D::symmetric(30.0, 1024).unwrap();
    let trace = evolve_trace(&gaussian(&g, 1.0, 0.0), &PotentialSpec::free(), 1e-3, 2000, 10).unwrap();
    let ens = from_density(&trace, 100_000, 2024);
    assert!(max_ks(&trace, &ens, 50) < 0.02);

    let t = 1.0;
    let sigma2 = 1.0 + t * t / 4.0;
    for i in 0..10 {
        let q = -2.25 + 0.5 * i as f64;
        let v = conditional_mean_velocity(&ens, q, t, 0.1).unwrap();
        assert!(v.count >= 500);
        assert!(v.z_score(q * t / (4.0 + t * t)) < 3.0, "v at {q}: {v:?}");
        let u = conditional_osmotic_velocity(&ens, q, t, 0.1).unwrap();
        assert!(u.z_score(-q / (2.0 * sigma2)) < 3.0, "u at {q}: {u:?}");
    }
}

#[test]
fn ground_state_law_is_stationary() {
    let g = Grid1D::symmetric(12.0, 256).unwrap();
    let trace = evolve_trace(&gaussian(&g, 0.5f64.sqrt(), 0.0), &PotentialSpec::harmonic(1.0), 1e-3, 3000, 10).unwrap();
    let ens = from_density(&trace, 100_000, 5);
    let rho = DensityCdf::new(&trace.snapshots()[0].density()).unwrap();
    for k in (0..trace.len()).step_by(50) {
        let d = ks_distance(&ens.wrapped_positions(k, &g), &rho).unwrap();
        assert!(d < 0.01, "KS {d} at step {k}");
    }
}

#[test]
fn plane_wave_mean_path_is_the_bohm_path() {
    let g = Grid1D::new(0.0, 2.0 * PI, 64).unwrap();
    let psi = WaveField::from_fn(&g, 0.0, |x| Complex64::from_polar(1.0, 2.0 * x)).unwrap().normalized().unwrap();
    let trace = evolve_trace(&psi, &PotentialSpec::free(), 1e-3, 1000, 10).unwrap();
    let ens = from_density(&trace, 10_000, 9);
    let v = conditional_mean_velocity(&ens, 3.0, 0.5, 0.5).unwrap();
    assert!(v.z_score(2.0) < 3.0);
    // Uniform drift: the window width adds no bias.
    let cmp = mean_path_vs_bohm(&ens, &trace, &[3.0], Units::default(), 1.5).unwrap();
    assert!(cmp[0].rms < 1e-2, "{}", cmp[0].rms);
}

#[test]
fn coherent_state_mean_path_oscillates() {
    let g = Grid1D::symmetric(12.0, 256).unwrap();
    let steps = 6400;
    let trace = evolve_trace(
        &gaussian(&g, 0.5f64.sqrt(), 2.0),
        &PotentialSpec::harmonic(1.0),
        2.0 * PI / steps as f64,
        steps,
        20,
    )
    .unwrap();
    let ens = from_density(&trace, 100_000, 9);
    let cmp = mean_path_vs_bohm(&ens, &trace, &[1.5, 2.0, 2.5], Units::default(), 0.2).unwrap();
    for c in &cmp {
        assert!(c.rms < 5e-2, "{}: {}", c.seed, c.rms);
        let classical = c.times.iter().map(|t| c.seed - 2.0 + 2.0 * t.cos());
        let worst = c.reconstructed.iter().zip(classical).map(|(r, x)| (r - x).abs()).fold(0.0, f64::max);
        assert!(worst < 0.15, "{worst}");
    }
}
