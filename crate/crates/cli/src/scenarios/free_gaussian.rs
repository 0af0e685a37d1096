//! Spreading free Gaussian: polar dynamics, momentum identities, Bohm
//! trajectories and, optionally, a Nelson ensemble.

use anyhow::{bail, Result};
use bohmlab::bohm::{
    equivariance_w1, integrate_trajectories, local_momentum, quantile_seeds, MomentumMethod, TrajectoryOptions,
};
use bohmlab::solver::{
    continuity_residual, energy_expectation, evolve_trace, qhj_residual, PotentialSpec, Units, DEFAULT_RHO_FLOOR,
};
use bohmlab::stochastic::{
    conditional_mean_velocity, conditional_osmotic_velocity, sample_paths, NelsonDiffusion, PathInit,
    SamplingOptions,
};
use bohmlab::{RealField, WaveField};

use super::*;
use crate::report::Oracle;

/// Density floor for comparing momentum routes on a propagated field, whose
/// far tails carry propagation roundoff.
pub const EVOLVED_RHO_FLOOR: f64 = 1e-8;

/// Family-wise limit for the osmotic probes: per-probe false-alarm rate
/// 6e-5, so about 1e-3 for twenty probes.
const OSMOTIC_Z_LIMIT: f64 = 4.0;

/// Closed-form packet `exp(-(x-x0)^2/4 sigma0^2 + i k0 x)` under `V = 0`.
#[derive(Debug, Clone, Copy)]
pub struct FreePacket {
    pub sigma0: f64,
    pub x0: f64,
    pub k0: f64,
    pub units: Units,
}

impl FreePacket {
    fn rate(&self) -> f64 {
        self.units.hbar / (2.0 * self.units.mass * self.sigma0 * self.sigma0)
    }

    pub fn spread(&self, t: f64) -> f64 {
        self.sigma0 * (1.0 + (self.rate() * t).powi(2)).sqrt()
    }

    pub fn centre(&self, t: f64) -> f64 {
        self.x0 + self.units.hbar * self.k0 * t / self.units.mass
    }

    /// `p_B(x, t)`.
    pub fn momentum(&self, x: f64, t: f64) -> f64 {
        let a2t = self.rate().powi(2) * t;
        self.units.hbar * self.k0 + self.units.mass * (x - self.centre(t)) * a2t / (1.0 + a2t * t)
    }

    /// Osmotic velocity `(ħ/2m) d ln rho/dx`.
    pub fn osmotic(&self, x: f64, t: f64) -> f64 {
        -self.units.hbar / (2.0 * self.units.mass) * (x - self.centre(t)) / self.spread(t).powi(2)
    }

    /// Bohm trajectory through `seed` at `t = 0`.
    pub fn trajectory(&self, seed: f64, t: f64) -> f64 {
        self.centre(t) + (seed - self.x0) * self.spread(t) / self.sigma0
    }

    /// Ten points across `centre ± 2.25 sigma(t)`.
    pub fn default_probes(&self, t: f64) -> Vec<f64> {
        (0..10)
            .map(|i| self.centre(t) + self.spread(t) * (-2.25 + 0.5 * i as f64))
            .collect()
    }
}

pub fn packet(cfg: &ScenarioConfig) -> Result<FreePacket> {
    let Some(sigma0) = cfg.physics.sigma0 else {
        bail!("physics.sigma0 missing");
    };
    Ok(FreePacket {
        sigma0,
        x0: cfg.physics.x0.unwrap_or(0.0),
        k0: cfg.physics.k0.unwrap_or(0.0),
        units: units(cfg)?,
    })
}

/// Ratio of residuals at snapshot spacing `h` and `h/2`, from traces with
/// the run's step and span.
fn residual_ratios(psi0: &WaveField, pot: &PotentialSpec, dt: f64, n_steps: usize, h: f64) -> Result<(f64, f64)> {
    let half = (h / (2.0 * dt)).round() as usize;
    let full = 2 * half;
    let n = n_steps / full * full;
    if n / full < 4 {
        bail!("run too short for residual spacing {h}: need at least {} steps", 4 * full);
    }
    let coarse = evolve_trace(psi0, pot, dt, n, full)?;
    let fine = evolve_trace(psi0, pot, dt, n, half)?;
    let c = continuity_residual(&coarse, pot.units)? / continuity_residual(&fine, pot.units)?;
    let q = qhj_residual(&coarse, pot, DEFAULT_RHO_FLOOR)? / qhj_residual(&fine, pot, DEFAULT_RHO_FLOOR)?;
    Ok((c, q))
}

pub fn run(cfg: &ScenarioConfig, sink: &mut Sink, checks: &mut Vec<Check>) -> Result<()> {
    let name = Scenario::FreeGaussian.name();
    let g = grid(cfg)?;
    let pk = packet(cfg)?;
    let u = pk.units;
    let (dt, n_steps) = step(cfg)?;
    let pot = PotentialSpec::free().with_units(u);
    let psi0 = gaussian(&g, pk.sigma0, pk.x0, pk.k0)?;
    let trace = evolve_trace(&psi0, &pot, dt, n_steps, cfg.stride())?;
    let last = trace.last();
    let t_end = trace.t_end();

    checks.push(Check::below("norm_drift", norm_drift(&trace), 1e-10, Oracle::Invariant));
    let e0 = energy_expectation(&psi0, &pot)?;
    let mut e_drift = 0.0f64;
    for s in trace.snapshots() {
        e_drift = e_drift.max((energy_expectation(s, &pot)? - e0).abs());
    }
    checks.push(Check::below("energy_drift", e_drift, 1e-8, Oracle::Invariant));
    checks.push(Check::below(
        "spread_vs_analytic",
        (last.position_spread() - pk.spread(t_end)).abs(),
        1e-6,
        Oracle::Analytic,
    ));
    checks.push(Check::below(
        "centre_vs_analytic",
        (last.position_expectation() - pk.centre(t_end)).abs(),
        1e-6,
        Oracle::Analytic,
    ));

    let h = cfg.time.residual_spacing.unwrap_or(0.05);
    let (c_ratio, q_ratio) = residual_ratios(&psi0, &pot, dt, n_steps, h)?;
    checks.push(Check::range("continuity_residual_ratio", c_ratio, 3.5, 4.5, Oracle::Convergence));
    checks.push(Check::range("qhj_residual_ratio", q_ratio, 3.5, 4.5, Oracle::Convergence));

    momentum_identities(&psi0, u, DEFAULT_RHO_FLOOR, "initial", checks)?;
    momentum_identities(last, u, EVOLVED_RHO_FLOOR, "final", checks)?;
    let pb = local_momentum(last, u, MomentumMethod::WeakValue, DEFAULT_RHO_FLOOR)?;
    let pb_err = max_of((0..g.len()).filter_map(|j| Some((pb.get(j)? - pk.momentum(g.x(j), t_end)).abs())));
    checks.push(Check::below("final_momentum_vs_analytic", pb_err, 1e-6, Oracle::Analytic));

    let seeds = match &cfg.trajectories.seeds {
        Some(s) => s.clone(),
        None => quantile_seeds(&psi0, cfg.trajectories.n_seeds.unwrap_or(21))?,
    };
    let options = TrajectoryOptions::default();
    let trs = integrate_trajectories(&trace, &seeds, u, options)?;
    checks.push(Check::at_most("trajectories_stopped", stopped(&trs) as f64, 0.0, Oracle::Analytic));
    checks.push(Check::below(
        "trajectories_vs_analytic",
        max_path_error(&trs, |s, t| pk.trajectory(s, t)),
        1e-4,
        Oracle::Analytic,
    ));
    checks.push(Check::at_most(
        "trajectory_order_violations",
        ordering_violations(&trs) as f64,
        0.0,
        Oracle::Invariant,
    ));
    let w1 = equivariance_w1(&trace, 1000, u, options)?;
    checks.push(Check::below("equivariance_w1", max_of(w1), 1e-3, Oracle::Invariant));

    sink.bohm_trajectories("trajectories.csv", name, &trs)?;
    let densities: Vec<RealField> = trace.snapshots().iter().map(|s| s.density()).collect();
    sink.fields("density.csv", &densities)?;
    let momenta = trace
        .snapshots()
        .iter()
        .map(|s| local_momentum(s, u, MomentumMethod::WeakValue, DEFAULT_RHO_FLOOR))
        .collect::<bohmlab::Result<Vec<_>>>()?;
    sink.fields("momentum.csv", &momenta)?;

    if let Some(n_paths) = cfg.ensemble.n_paths {
        let ens = sample_paths(
            &trace,
            &NelsonDiffusion::new(u),
            SamplingOptions {
                n_paths,
                master_seed: cfg.ensemble.master_seed.unwrap_or(0),
                init: PathInit::FromDensity,
            },
        )?;
        let summary = ensemble_summary(&trace, &ens, 10)?;
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
        probe_checks(&ens, &pk, cfg, t_end, sink, checks)?;
    }
    Ok(())
}

/// Conditional drift estimates against the analytic `v` and `u`.
pub fn probe_checks(
    ens: &bohmlab::stochastic::PathEnsemble,
    pk: &FreePacket,
    cfg: &ScenarioConfig,
    t_end: f64,
    sink: &mut Sink,
    checks: &mut Vec<Check>,
) -> Result<()> {
    let t = cfg.ensemble.probe_time.unwrap_or(t_end / 2.0);
    let bw = cfg.ensemble.bandwidth.unwrap_or(0.1);
    let probes = cfg.ensemble.probes.clone().unwrap_or_else(|| pk.default_probes(t));
    let m = pk.units.mass;
    let mut rows = Vec::with_capacity(probes.len());
    let (mut zv, mut zu, mut min_count) = (0.0f64, 0.0f64, usize::MAX);
    for &q in &probes {
        let v = conditional_mean_velocity(ens, q, t, bw)?;
        let o = conditional_osmotic_velocity(ens, q, t, bw)?;
        let (ve, ue) = (pk.momentum(q, t) / m, pk.osmotic(q, t));
        zv = zv.max(v.z_score(ve));
        zu = zu.max(o.z_score(ue));
        min_count = min_count.min(v.count);
        rows.push((q, v.estimate, v.standard_error, ve, o.estimate, o.standard_error, ue, v.count));
    }
    checks.push(Check::at_least("probe_points", probes.len() as f64, 10.0, Oracle::Statistical));
    checks.push(Check::at_least(
        "probe_window_count_min",
        min_count as f64,
        bohmlab::stochastic::MIN_WINDOW_COUNT as f64,
        Oracle::Statistical,
    ));
    checks.push(Check::below("conditional_velocity_max_z", zv, 3.0, Oracle::Statistical));
    checks.push(Check::below(
        "conditional_osmotic_max_z",
        zu,
        OSMOTIC_Z_LIMIT,
        Oracle::Statistical,
    ));
    sink.table(
        "probes.csv",
        &["q", "v", "v_se", "v_expected", "u", "u_se", "u_expected", "count"],
        &rows,
    )?;
    Ok(())
}
