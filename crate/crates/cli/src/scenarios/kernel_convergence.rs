//! Sliced path-integral kernels against the closed forms, and the classical
//! structure of the actions.

use std::f64::consts::PI;

use anyhow::{bail, Result};
use bohmlab::propagator::{
    compose_sliced, free_action_w, free_kernel_g, ho_action_w, ho_kernel_g, short_time_action, KernelMatrix,
    SliceScheme,
};
use bohmlab::solver::{evolve_trace, PotentialSpec, Units};
use bohmlab::{Error, Grid1D, WaveField};
use num_complex::Complex64;

use super::*;
use crate::report::Oracle;

/// `(x_to, x_from)` sample pairs for the pointwise formula checks.
const PAIRS: [(f64, f64); 4] = [(1.0, -0.5), (2.0, 0.3), (-3.0, 1.0), (0.4, 0.4)];

fn max_diff_within(a: &WaveField, b: &WaveField, half: f64) -> f64 {
    let g = a.grid();
    max_of(
        (0..g.len())
            .filter(|&i| g.x(i).abs() <= half)
            .map(|i| (a.values()[i] - b.values()[i]).norm()),
    )
}

fn formula_checks(u: Units, omega: f64, t_span: f64, checks: &mut Vec<Check>) -> Result<()> {
    let m = u.mass;
    // The oscillator formulas at vanishing frequency.
    let tiny = 1e-6 / t_span;
    let (mut dw, mut dg) = (0.0f64, 0.0f64);
    for (a, b) in PAIRS {
        let wf = free_action_w(a, b, t_span, 0.0, m)?;
        let wh = ho_action_w(a, b, t_span, 0.0, m, tiny)?;
        dw = dw.max((wh - wf).abs() / wf.abs().max(1.0));
        let gf = free_kernel_g(a, b, t_span, 0.0, u)?;
        let gh = ho_kernel_g(a, b, t_span, 0.0, u, tiny)?;
        dg = dg.max((gh - gf).norm() / gf.norm());
    }
    checks.push(Check::below("omega_to_zero_action", dw, 1e-6, Oracle::Analytic));
    checks.push(Check::below("omega_to_zero_kernel", dg, 1e-6, Oracle::Analytic));

    // W_t + W_x^2 / 2m + V = 0 by centred differences.
    let period = 2.0 * PI / omega;
    let h = 1e-5;
    let mut hj = 0.0f64;
    for (xt, xf) in PAIRS {
        for t in [0.15 * period, 0.35 * period] {
            let w = |a: f64, tt: f64| ho_action_w(a, xf, tt, 0.0, m, omega);
            let wt = (w(xt, t + h)? - w(xt, t - h)?) / (2.0 * h);
            let wx = (w(xt + h, t)? - w(xt - h, t)?) / (2.0 * h);
            hj = hj.max((wt + wx * wx / (2.0 * m) + 0.5 * m * omega * omega * xt * xt).abs());
        }
    }
    checks.push(Check::below("hamilton_jacobi_residual", hj, 1e-6, Oracle::CrossCheck));

    // p' = dW/dx', p = -dW/dx, both m (x' - x) / T for the free action.
    let mut pr = 0.0f64;
    for (qt, qf) in PAIRS {
        let w = |a: f64, b: f64| free_action_w(a, b, t_span, 0.0, m);
        let expect = m * (qt - qf) / t_span;
        let d_to = (w(qt + h, qf)? - w(qt - h, qf)?) / (2.0 * h);
        let d_from = (w(qt, qf + h)? - w(qt, qf - h)?) / (2.0 * h);
        pr = pr.max((d_to - expect).abs()).max((-d_from - expect).abs());
    }
    checks.push(Check::below("generating_function_momenta", pr, 1e-8, Oracle::CrossCheck));

    checks.push(Check::below(
        "short_time_action_unit_step",
        (short_time_action(1.0, 0.0, 1.0, m)? - m / 2.0).abs(),
        1e-15,
        Oracle::Analytic,
    ));
    let g = free_kernel_g(0.7, -0.2, t_span, 0.0, u)?;
    checks.push(Check::below(
        "free_kernel_modulus",
        (g.norm() - (m / (2.0 * PI * u.hbar * t_span)).sqrt()).abs(),
        1e-12,
        Oracle::Analytic,
    ));
    let quarter = ho_action_w(1.3, -0.6, period / 4.0, 0.0, m, omega)?;
    checks.push(Check::below(
        "quarter_period_action",
        (quarter - (-m * omega * 1.3 * -0.6)).abs(),
        1e-12,
        Oracle::Analytic,
    ));
    let caustic = matches!(ho_kernel_g(1.0, 0.5, period, 0.0, u, omega), Err(Error::Caustic { .. }));
    checks.push(Check::at_least(
        "full_period_caustic_reported",
        caustic as u8 as f64,
        1.0,
        Oracle::Analytic,
    ));
    Ok(())
}

/// Analytic kernels applied on a fine grid, against the solver and each other.
fn application_checks(u: Units, omega: f64, t_span: f64, g: &Grid1D, checks: &mut Vec<Check>) -> Result<()> {
    let half = g.length() / 4.0;
    let psi0 = WaveField::from_fn(g, 0.0, |x| Complex64::from_polar((-(x + 1.0).powi(2) / 2.0).exp(), 0.8 * x))?
        .normalized()?;
    let steps = 1000;
    for (label, pot, kernel) in [
        ("free", PotentialSpec::free().with_units(u), KernelMatrix::free(g, 0.0, t_span, u)?),
        (
            "harmonic",
            PotentialSpec::harmonic(omega).with_units(u),
            KernelMatrix::harmonic(g, 0.0, t_span, u, omega)?,
        ),
    ] {
        let via_kernel = kernel.apply(&psi0)?;
        let via_solver = evolve_trace(&psi0, &pot, t_span / steps as f64, steps, steps)?.last().clone();
        checks.push(Check::below(
            format!("{label}_kernel_vs_solver"),
            max_diff_within(&via_kernel, &via_solver, half),
            1e-3,
            Oracle::CrossCheck,
        ));
        checks.push(Check::below(
            format!("{label}_kernel_norm_defect"),
            kernel.norm_defect(&psi0)?,
            1e-3,
            Oracle::Invariant,
        ));
    }

    let once = KernelMatrix::free(g, 0.0, t_span, u)?;
    let twice = KernelMatrix::free(g, t_span, 2.0 * t_span, u)?;
    let direct = KernelMatrix::free(g, 0.0, 2.0 * t_span, u)?;
    let composed = twice.apply(&once.apply(&psi0)?)?;
    checks.push(Check::below(
        "free_semigroup",
        max_diff_within(&composed, &direct.apply(&psi0)?, half),
        1e-4,
        Oracle::Invariant,
    ));

    // The full period is a caustic; go around in quarter turns.
    let sigma = (u.hbar / (2.0 * u.mass * omega)).sqrt();
    let ground = gaussian(g, sigma, 0.0, 0.0)?;
    let quarter = KernelMatrix::harmonic(g, 0.0, PI / (2.0 * omega), u, omega)?;
    let mut psi = ground.clone();
    for _ in 0..4 {
        psi = quarter.apply(&psi)?;
    }
    checks.push(Check::below(
        "ground_state_period_infidelity",
        1.0 - ground.fidelity(&psi)?,
        1e-4,
        Oracle::Invariant,
    ));
    Ok(())
}

pub fn run(cfg: &ScenarioConfig, sink: &mut Sink, checks: &mut Vec<Check>) -> Result<()> {
    let g = grid(cfg)?;
    let u = units(cfg)?;
    let (Some(omega), Some(slices), Some(t_span)) =
        (cfg.physics.omega, cfg.kernel.slices.clone(), cfg.kernel.t_span)
    else {
        bail!("kernel settings missing");
    };
    let c = cfg.kernel.central_half_width.unwrap_or(5.0);
    let central = move |a: f64, b: f64| a.abs() <= c && b.abs() <= c;
    let mut rows = Vec::new();

    let free_slices = cfg.kernel.free_slices.unwrap_or(64);
    let exact_free = KernelMatrix::free(&g, 0.0, t_span, u)?;
    let free = compose_sliced(
        &PotentialSpec::free().with_units(u),
        &SliceScheme::new(free_slices, 0.0, t_span)?,
        &g,
    )?;
    let free_err = free.max_relative_error(&exact_free, central)?;
    rows.push((0.0, free_slices, free_err));
    checks.push(Check::below("free_sliced_vs_analytic", free_err, 1e-3, Oracle::Analytic));

    let pot = PotentialSpec::harmonic(omega).with_units(u);
    let exact = KernelMatrix::harmonic(&g, 0.0, t_span, u, omega)?;
    let mut errs = Vec::with_capacity(slices.len());
    let mut finest = None;
    for &n in &slices {
        let k = compose_sliced(&pot, &SliceScheme::new(n, 0.0, t_span)?, &g)?;
        let e = k.max_relative_error(&exact, central)?;
        rows.push((omega, n, e));
        errs.push(e);
        finest = Some(k);
    }
    let finest = finest.expect("slices validated non-empty");
    checks.push(Check::below(
        "harmonic_sliced_vs_analytic",
        *errs.last().expect("non-empty"),
        1e-2,
        Oracle::Analytic,
    ));
    let non_monotone = errs.windows(2).filter(|w| w[1] >= w[0]).count();
    checks.push(Check::at_most(
        "harmonic_ladder_non_monotone_steps",
        non_monotone as f64,
        0.0,
        Oracle::Convergence,
    ));
    let ratio = finest.report().map_or(f64::NAN, |r| r.slice_phase_ratio);
    checks.push(Check::below("finest_slice_phase_ratio", ratio, 0.5, Oracle::Invariant));

    formula_checks(u, omega, t_span, checks)?;
    let apply_grid = Grid1D::symmetric(
        cfg.kernel.apply_half_width.unwrap_or(16.0),
        cfg.kernel.apply_n.unwrap_or(1024),
    )?;
    application_checks(u, omega, t_span, &apply_grid, checks)?;

    sink.table("kernel_errors.csv", &["omega", "n_slices", "max_rel_error"], &rows)?;
    let mut entries = Vec::with_capacity(g.len() * g.len());
    for i in 0..g.len() {
        for j in 0..g.len() {
            let (a, b) = (finest.get(i, j), exact.get(i, j));
            entries.push([g.x(i), g.x(j), a.re, a.im, b.re, b.im]);
        }
    }
    sink.table(
        "harmonic_kernel.csv",
        &["x_to", "x_from", "re", "im", "re_exact", "im_exact"],
        &entries,
    )?;
    Ok(())
}
