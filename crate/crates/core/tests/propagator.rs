use std::f64::consts::PI;

use bohmlab::propagator::{compose_sliced, KernelMatrix, SliceScheme};
use bohmlab::solver::{evolve_trace, PotentialSpec, Units};
use bohmlab::{Grid1D, WaveField};
use num_complex::Complex64;

fn central(a: f64, b: f64) -> bool {
    a.abs() <= 5.0 && b.abs() <= 5.0
}

#[test]
fn sliced_free_kernel_matches_analytic() {
    let g = Grid1D::symmetric(6.0, 16).unwrap();
    let exact = KernelMatrix::free(&g, 0.0, 1.0, Units::default()).unwrap();
    let k = compose_sliced(&PotentialSpec::free(), &SliceScheme::new(64, 0.0, 1.0).unwrap(), &g).unwrap();
    let err = k.max_relative_error(&exact, central).unwrap();
    assert!(err < 1e-3, "{err:e}");
    assert!(k.report().unwrap().slices_short_enough());
}

#[test]
fn sliced_harmonic_kernel_converges() {
    let g = Grid1D::symmetric(6.0, 16).unwrap();
    let exact = KernelMatrix::harmonic(&g, 0.0, 1.0, Units::default(), 1.0).unwrap();
    let pot = PotentialSpec::harmonic(1.0);
    let errs: Vec<f64> = [16, 32, 64, 128]
        .iter()
        .map(|&n| {
            let k = compose_sliced(&pot, &SliceScheme::new(n, 0.0, 1.0).unwrap(), &g).unwrap();
            k.max_relative_error(&exact, central).unwrap()
        })
        .collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    assert!(errs[3] < 1e-2, "{errs:?}");
}

fn ground_state(g: &Grid1D, omega: f64) -> WaveField {
    WaveField::from_fn(g, 0.0, |x| Complex64::new((-omega * x * x / 2.0).exp(), 0.0))
        .unwrap()
        .normalized()
        .unwrap()
}

#[test]
fn ground_state_returns_after_a_period() {
    let g = Grid1D::symmetric(20.0, 512).unwrap();
    let psi0 = ground_state(&g, 1.0);
    // The full period is a caustic; go around in quarter turns.
    let quarter = KernelMatrix::harmonic(&g, 0.0, PI / 2.0, Units::default(), 1.0).unwrap();
    let mut psi = psi0.clone();
    for _ in 0..4 {
        psi = quarter.apply(&psi).unwrap();
    }
    let f = psi0.fidelity(&psi).unwrap();
    assert!(f > 1.0 - 1e-4, "fidelity {f}");
}

fn max_diff_central(a: &WaveField, b: &WaveField, half: f64) -> f64 {
    let g = a.grid();
    (0..g.len())
        .filter(|&i| g.x(i).abs() <= half)
        .map(|i| (a.values()[i] - b.values()[i]).norm())
        .fold(0.0, f64::max)
}

#[test]
fn kernel_application_agrees_with_solver() {
    let g = Grid1D::symmetric(16.0, 1024).unwrap();
    let u = Units::default();
    let psi0 = WaveField::from_fn(&g, 0.0, |x| Complex64::from_polar((-(x + 1.0).powi(2) / 2.0).exp(), 0.8 * x))
        .unwrap()
        .normalized()
        .unwrap();
    for pot in [PotentialSpec::free(), PotentialSpec::harmonic(1.0)] {
        let kernel = match pot.omega() {
            Some(w) => KernelMatrix::harmonic(&g, 0.0, 1.0, u, w).unwrap(),
            None => KernelMatrix::free(&g, 0.0, 1.0, u).unwrap(),
        };
        let via_kernel = kernel.apply(&psi0).unwrap();
        let via_solver = evolve_trace(&psi0, &pot, 1e-3, 1000, 1000).unwrap().last().clone();
        let d = max_diff_central(&via_kernel, &via_solver, 8.0);
        assert!(d < 1e-3, "{:?}: {d:e}", pot.kind);
        assert!(kernel.norm_defect(&psi0).unwrap() < 1e-3);
    }
}
