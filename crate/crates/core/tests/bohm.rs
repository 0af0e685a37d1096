use std::f64::consts::PI;

use bohmlab::bohm::{equivariance_w1, integrate_trajectories, ordering_preserved, TrajectoryOptions};
use bohmlab::solver::{evolve_trace, PotentialSpec, Units};
use bohmlab::{Grid1D, WaveField};
use num_complex::Complex64;

fn gaussian(g: &Grid1D, sigma: f64, x0: f64) -> WaveField {
    WaveField::from_fn(g, 0.0, |x| Complex64::new((-(x - x0).powi(2) / (4.0 * sigma * sigma)).exp(), 0.0))
        .unwrap()
        .normalized()
        .unwrap()
}

#[test]
fn coherent_state_trajectories_oscillate_classically() {
    let g = Grid1D::symmetric(16.0, 512).unwrap();
    let (omega, amp) = (1.0, 2.0);
    // sigma^2 = ħ / 2mω
    let psi0 = gaussian(&g, (0.5f64).sqrt(), amp);
    let steps = 6400;
    let trace = evolve_trace(&psi0, &PotentialSpec::harmonic(omega), 2.0 * PI / steps as f64, steps, 10).unwrap();
    let seeds: Vec<f64> = (0..21).map(|i| amp - 1.5 + 0.15 * i as f64).collect();
    let trs = integrate_trajectories(&trace, &seeds, Units::default(), TrajectoryOptions::default()).unwrap();
    let mut worst: f64 = 0.0;
    for tr in &trs {
        assert!(tr.stop.is_none());
        assert_eq!(tr.samples.len(), trace.len());
        for &(t, x) in &tr.samples {
            worst = worst.max((x - (tr.seed - amp + amp * (omega * t).cos())).abs());
        }
    }
    assert!(worst < 1e-3, "{worst:e}");
    assert!(ordering_preserved(&trs));
}

#[test]
fn two_slit_trajectories_respect_the_axis() {
    let g = Grid1D::symmetric(40.0, 2048).unwrap();
    let (d, s) = (4.0, 0.5);
    let a = gaussian(&g, s, -d / 2.0);
    let b = gaussian(&g, s, d / 2.0);
    let psi0 = WaveField::new(g.clone(), a.values().iter().zip(b.values()).map(|(a, b)| a + b).collect(), 0.0)
        .unwrap()
        .normalized()
        .unwrap();
    let trace = evolve_trace(&psi0, &PotentialSpec::free(), 1e-3, 3000, 10).unwrap();
    let half: Vec<f64> = (0..50).map(|i| d / 2.0 - 1.5 * s + 3.0 * s * i as f64 / 49.0).collect();
    let seeds: Vec<f64> = half.iter().map(|x| -x).chain(half.iter().copied()).collect();
    let trs = integrate_trajectories(&trace, &seeds, Units::default(), TrajectoryOptions::default()).unwrap();
    for tr in &trs {
        assert!(tr.samples.iter().all(|&(_, x)| x.signum() == tr.seed.signum()));
    }
    assert!(ordering_preserved(&trs));
}

#[test]
fn free_gaussian_transport_is_equivariant() {
    let g = Grid1D::symmetric(30.0, 1024).unwrap();
    let trace = evolve_trace(&gaussian(&g, 1.0, 0.0), &PotentialSpec::free(), 1e-3, 2000, 20).unwrap();
    let w1 = equivariance_w1(&trace, 1000, Units::default(), TrajectoryOptions::default()).unwrap();
    let worst = w1.iter().copied().fold(0.0, f64::max);
    assert!(worst < 1e-3, "{worst:e}");
}
