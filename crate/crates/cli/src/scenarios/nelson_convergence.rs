//! Nelson ensembles for the free Gaussian: conditional drifts at probe
//! points and the mean-path discrepancy across ensemble sizes.

use anyhow::{bail, Result};
use bohmlab::bohm::{integrate_trajectories, TrajectoryOptions};
use bohmlab::solver::{evolve_trace, PotentialSpec};
use bohmlab::stochastic::{
    mean_path_ladder, mean_path_vs_bohm, sample_paths, LadderOptions, NelsonDiffusion, PathInit, SamplingOptions,
};

use super::free_gaussian::{packet, probe_checks};
use super::*;
use crate::report::Oracle;

pub fn run(cfg: &ScenarioConfig, sink: &mut Sink, checks: &mut Vec<Check>) -> Result<()> {
    let name = Scenario::NelsonConvergence.name();
    let g = grid(cfg)?;
    let pk = packet(cfg)?;
    let u = pk.units;
    let (dt, n_steps) = step(cfg)?;
    let e = &cfg.ensemble;
    let (Some(n_paths), Some(master_seed), Some(ladder), Some(path_bw), Some(seeds)) = (
        e.n_paths,
        e.master_seed,
        e.ladder.clone(),
        e.path_bandwidth,
        cfg.trajectories.seeds.clone(),
    ) else {
        bail!("ensemble settings missing");
    };
    let psi0 = gaussian(&g, pk.sigma0, pk.x0, pk.k0)?;
    let trace = evolve_trace(&psi0, &PotentialSpec::free().with_units(u), dt, n_steps, cfg.stride())?;
    let process = NelsonDiffusion::new(u);

    let ens = sample_paths(
        &trace,
        &process,
        SamplingOptions {
            n_paths,
            master_seed,
            init: PathInit::FromDensity,
        },
    )?;
    checks.push(Check::at_most("ensemble_masked_hits", ens.masked_hits() as f64, 0.0, Oracle::Invariant));
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
    probe_checks(&ens, &pk, cfg, trace.t_end(), sink, checks)?;

    let cmp = mean_path_vs_bohm(&ens, &trace, &seeds, u, path_bw)?;
    write_mean_paths(sink, "mean_path.csv", name, &cmp)?;
    drop(ens);

    let report = mean_path_ladder(
        &trace,
        &process,
        seeds[0],
        u,
        &LadderOptions {
            sizes: ladder,
            replicates: e.replicates.unwrap_or(8),
            master_seed,
            bandwidth: path_bw,
        },
    )?;
    checks.push(Check::range("ladder_exponent", report.exponent, -0.65, -0.35, Oracle::Convergence));
    sink.table(
        "ladder.csv",
        &["n_paths", "rms"],
        &report.rungs.iter().map(|r| (r.n_paths, r.rms)).collect::<Vec<_>>(),
    )?;

    let trs = integrate_trajectories(&trace, &seeds, u, TrajectoryOptions::default())?;
    sink.bohm_trajectories("trajectories.csv", name, &trs)?;
    Ok(())
}
