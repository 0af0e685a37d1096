//! Displaced harmonic ground state: rigid classical oscillation of the
//! density, the Bohm trajectories and the Nelson mean path.

use std::f64::consts::PI;

use anyhow::{bail, Result};
use bohmlab::bohm::{integrate_trajectories, TrajectoryOptions};
use bohmlab::solver::{
    bohm_velocity, continuity_residual, energy_expectation, evolve_trace, liouville_residual, PotentialSpec,
};
use bohmlab::stochastic::{mean_path_vs_bohm, sample_paths, NelsonDiffusion, PathInit, SamplingOptions};
use bohmlab::RealField;

use super::*;
use crate::report::Oracle;

pub fn run(cfg: &ScenarioConfig, sink: &mut Sink, checks: &mut Vec<Check>) -> Result<()> {
    let name = Scenario::CoherentState.name();
    let g = grid(cfg)?;
    let u = units(cfg)?;
    let Some(omega) = cfg.physics.omega else {
        bail!("physics.omega missing");
    };
    let amp = cfg.physics.amplitude.unwrap_or(0.0);
    let k0 = cfg.physics.k0.unwrap_or(0.0);
    let (dt, n_steps) = step(cfg)?;
    let sigma = (u.hbar / (2.0 * u.mass * omega)).sqrt();
    let pot = PotentialSpec::harmonic(omega).with_units(u);
    let psi0 = gaussian(&g, sigma, amp, k0)?;
    let trace = evolve_trace(&psi0, &pot, dt, n_steps, cfg.stride())?;
    let v0 = u.hbar * k0 / u.mass;
    let classical = |t: f64| amp * (omega * t).cos() + v0 / omega * (omega * t).sin();

    checks.push(Check::below("norm_drift", norm_drift(&trace), 1e-10, Oracle::Invariant));
    let e0 = energy_expectation(&psi0, &pot)?;
    let mut e_drift = 0.0f64;
    for s in trace.snapshots() {
        e_drift = e_drift.max((energy_expectation(s, &pot)? - e0).abs());
    }
    checks.push(Check::below("energy_drift", e_drift, 1e-8, Oracle::Invariant));
    let centre_err = max_of(
        trace
            .snapshots()
            .iter()
            .map(|s| (s.position_expectation() - classical(s.t())).abs()),
    );
    checks.push(Check::below("centre_vs_classical", centre_err, 1e-6, Oracle::Analytic));
    let spread_err = max_of(trace.snapshots().iter().map(|s| (s.position_spread() - sigma).abs()));
    checks.push(Check::below("spread_constant", spread_err, 1e-6, Oracle::Analytic));

    let period = 2.0 * PI / omega;
    let periods = trace.t_end() / period;
    if periods >= 1.0 - 1e-9 && (periods - periods.round()).abs() < 1e-9 {
        let d = trace.last().density().max_abs_diff(&psi0.density())?;
        checks.push(Check::below("period_return_density", d, 1e-6, Oracle::Analytic));
    }

    let lv = liouville_residual(&trace, |psi| bohm_velocity(psi, u))?;
    let cr = continuity_residual(&trace, u)?;
    checks.push(Check::at_most("continuity_minus_liouville", (cr - lv).abs(), 0.0, Oracle::Invariant));

    momentum_identities(trace.last(), u, super::free_gaussian::EVOLVED_RHO_FLOOR, "final", checks)?;

    let seeds = match &cfg.trajectories.seeds {
        Some(s) => s.clone(),
        None => {
            let n = cfg.trajectories.n_seeds.unwrap_or(21).max(2);
            (0..n)
                .map(|i| amp + sigma * (-2.0 + 4.0 * i as f64 / (n - 1) as f64))
                .collect()
        }
    };
    let trs = integrate_trajectories(&trace, &seeds, u, TrajectoryOptions::default())?;
    checks.push(Check::at_most("trajectories_stopped", stopped(&trs) as f64, 0.0, Oracle::Analytic));
    checks.push(Check::below(
        "trajectories_vs_classical",
        max_path_error(&trs, |s, t| s - amp + classical(t)),
        1e-3,
        Oracle::Analytic,
    ));
    checks.push(Check::at_most(
        "trajectory_order_violations",
        ordering_violations(&trs) as f64,
        0.0,
        Oracle::Invariant,
    ));
    sink.bohm_trajectories("trajectories.csv", name, &trs)?;
    let densities: Vec<RealField> = trace.snapshots().iter().map(|s| s.density()).collect();
    sink.fields("density.csv", &densities)?;

    if let Some(n_paths) = cfg.ensemble.n_paths {
        let coarse = trace.decimated(cfg.ensemble.decimate.unwrap_or(1))?;
        let ens = sample_paths(
            &coarse,
            &NelsonDiffusion::new(u),
            SamplingOptions {
                n_paths,
                master_seed: cfg.ensemble.master_seed.unwrap_or(0),
                init: PathInit::FromDensity,
            },
        )?;
        checks.push(Check::at_most("ensemble_masked_hits", ens.masked_hits() as f64, 0.0, Oracle::Invariant));
        let summary = ensemble_summary(&coarse, &ens, 10)?;
        checks.push(Check::below(
            "ensemble_ks_max",
            max_of(summary.iter().map(|r| r[3])),
            0.02,
            Oracle::Statistical,
        ));
        sink.table(
            "ensemble_summary.csv",
            &["t", "mean", "std", "ks"],
            &summary,
        )?;
        let offset = sigma / 2f64.sqrt();
        let path_seeds = [amp - offset, amp, amp + offset];
        let bw = cfg.ensemble.path_bandwidth.unwrap_or(0.2);
        let cmp = mean_path_vs_bohm(&ens, &coarse, &path_seeds, u, bw)?;
        checks.push(Check::below(
            "mean_path_rms",
            max_of(cmp.iter().map(|c| c.rms)),
            5e-2,
            Oracle::Statistical,
        ));
        write_mean_paths(sink, "mean_path.csv", name, &cmp)?;
    }
    Ok(())
}
