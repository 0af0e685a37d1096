//! Two Gaussian slits evolving freely; trajectories never cross the axis
//! between them.

use anyhow::{bail, Result};
use bohmlab::bohm::{integrate_trajectories, TrajectoryOptions};
use bohmlab::solver::{evolve_trace, PotentialSpec};
use bohmlab::{RealField, WaveField};

use super::*;
use crate::report::Oracle;

/// `n` seeds spread over `±1.5 width` around each slit, mirror-symmetric.
pub fn default_seeds(separation: f64, width: f64, n: usize) -> Vec<f64> {
    let half = n / 2;
    let right: Vec<f64> = (0..half)
        .map(|i| {
            let f = if half > 1 { i as f64 / (half - 1) as f64 } else { 0.5 };
            separation / 2.0 - 1.5 * width + 3.0 * width * f
        })
        .collect();
    right.iter().rev().map(|x| -x).chain(right.iter().copied()).collect()
}

pub fn run(cfg: &ScenarioConfig, sink: &mut Sink, checks: &mut Vec<Check>) -> Result<()> {
    let name = Scenario::TwoSlit.name();
    let g = grid(cfg)?;
    let u = units(cfg)?;
    let (Some(d), Some(s)) = (cfg.slits.separation, cfg.slits.width) else {
        bail!("slit geometry missing");
    };
    let (dt, n_steps) = step(cfg)?;
    let k0 = cfg.physics.k0.unwrap_or(0.0);
    let a = gaussian(&g, s, -d / 2.0, k0)?;
    let b = gaussian(&g, s, d / 2.0, k0)?;
    let psi0 = WaveField::new(g.clone(), a.values().iter().zip(b.values()).map(|(a, b)| a + b).collect(), 0.0)?
        .normalized()?;
    let pot = PotentialSpec::free().with_units(u);
    let trace = evolve_trace(&psi0, &pot, dt, n_steps, cfg.stride())?;
    checks.push(Check::below("norm_drift", norm_drift(&trace), 1e-10, Oracle::Invariant));

    let seeds = match &cfg.trajectories.seeds {
        Some(s) => s.clone(),
        None => default_seeds(d, s, cfg.trajectories.n_seeds.unwrap_or(100)),
    };
    let trs = integrate_trajectories(&trace, &seeds, u, TrajectoryOptions::default())?;
    let crossings = trs
        .iter()
        .filter(|tr| tr.samples.iter().any(|&(_, x)| x.signum() != tr.seed.signum()))
        .count();
    checks.push(Check::at_most("axis_crossings", crossings as f64, 0.0, Oracle::Invariant));
    checks.push(Check::at_most(
        "trajectory_order_violations",
        ordering_violations(&trs) as f64,
        0.0,
        Oracle::Invariant,
    ));
    checks.push(Check::at_most("trajectories_stopped", stopped(&trs) as f64, 0.0, Oracle::Invariant));
    // Mirror pairs, when the seeds come in ±x pairs.
    let mut mirror = 0.0f64;
    for tr in &trs {
        if let Some(m) = trs.iter().find(|o| o.seed == -tr.seed) {
            for (p, q) in tr.samples.iter().zip(&m.samples) {
                mirror = mirror.max((p.1 + q.1).abs());
            }
        }
    }
    checks.push(Check::below("mirror_symmetry", mirror, 1e-6, Oracle::Invariant));

    sink.bohm_trajectories("trajectories.csv", name, &trs)?;
    let densities: Vec<RealField> = trace.snapshots().iter().map(|s| s.density()).collect();
    sink.fields("density.csv", &densities)?;
    Ok(())
}
