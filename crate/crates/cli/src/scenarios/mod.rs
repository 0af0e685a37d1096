//! One runner per scenario. Each pushes its checks as it goes, so a module
//! error part-way through still leaves the earlier checks in the report.

use anyhow::{anyhow, Result};
use bohmlab::bohm::Trajectory;
use bohmlab::sampling::{ks_distance, DensityCdf};
use bohmlab::solver::{EvolutionTrace, Units};
use bohmlab::stochastic::{MeanPathComparison, PathEnsemble};
use bohmlab::{Grid1D, WaveField};
use num_complex::Complex64;

use crate::config::{Scenario, ScenarioConfig};
use crate::output::Sink;
use crate::report::Check;

pub mod algebra_checks;
pub mod coherent_state;
pub mod free_gaussian;
pub mod kernel_convergence;
pub mod nelson_convergence;
pub mod two_slit;

pub fn run(scenario: Scenario, cfg: &ScenarioConfig, sink: &mut Sink, checks: &mut Vec<Check>) -> Result<()> {
    match scenario {
        Scenario::FreeGaussian => free_gaussian::run(cfg, sink, checks),
        Scenario::CoherentState => coherent_state::run(cfg, sink, checks),
        Scenario::TwoSlit => two_slit::run(cfg, sink, checks),
        Scenario::KernelConvergence => kernel_convergence::run(cfg, sink, checks),
        Scenario::NelsonConvergence => nelson_convergence::run(cfg, sink, checks),
        Scenario::AlgebraChecks => algebra_checks::run(cfg, sink, checks),
    }
}

fn grid(cfg: &ScenarioConfig) -> Result<Grid1D> {
    let g = &cfg.grid;
    match (g.x_min, g.x_max, g.n) {
        (Some(a), Some(b), Some(n)) => Ok(Grid1D::new(a, b, n)?),
        _ => Err(anyhow!("grid section incomplete")),
    }
}

fn units(cfg: &ScenarioConfig) -> Result<Units> {
    Ok(Units::new(cfg.physics.mass.unwrap_or(1.0), cfg.physics.hbar.unwrap_or(1.0))?)
}

fn step(cfg: &ScenarioConfig) -> Result<(f64, usize)> {
    match (cfg.dt(), cfg.time.n_steps) {
        (Some(dt), Some(n)) => Ok((dt, n)),
        _ => Err(anyhow!("time step or step count missing")),
    }
}

/// Normalized `exp(-(x-x0)^2 / 4 sigma^2 + i k0 x)`.
fn gaussian(grid: &Grid1D, sigma: f64, x0: f64, k0: f64) -> Result<WaveField> {
    Ok(WaveField::from_fn(grid, 0.0, |x| {
        Complex64::from_polar((-(x - x0).powi(2) / (4.0 * sigma * sigma)).exp(), k0 * x)
    })?
    .normalized()?)
}

fn norm_drift(trace: &EvolutionTrace) -> f64 {
    trace
        .snapshots()
        .iter()
        .map(|s| (s.norm_sq() - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Pairs of seed-adjacent trajectories that swap order at some shared sample.
fn ordering_violations(trs: &[Trajectory]) -> usize {
    let mut order: Vec<&Trajectory> = trs.iter().collect();
    order.sort_by(|a, b| a.seed.total_cmp(&b.seed));
    order
        .windows(2)
        .filter(|w| {
            w[0].samples
                .iter()
                .zip(&w[1].samples)
                .any(|(a, b)| a.1 > b.1)
        })
        .count()
}

/// Largest deviation of trajectory samples from `expected(seed, t)`.
fn max_path_error(trs: &[Trajectory], expected: impl Fn(f64, f64) -> f64) -> f64 {
    let expected = &expected;
    max_of(
        trs.iter()
            .flat_map(|tr| tr.samples.iter().map(move |&(t, x)| (x - expected(tr.seed, t)).abs())),
    )
}

fn stopped(trs: &[Trajectory]) -> usize {
    trs.iter().filter(|t| t.stop.is_some()).count()
}

/// KS distance between the ensemble and `|psi|^2` at every `every`-th
/// snapshot, plus the last one: `[t, mean, std, ks]`.
fn ensemble_summary(trace: &EvolutionTrace, ens: &PathEnsemble, every: usize) -> Result<Vec<[f64; 4]>> {
    let mut ks: Vec<usize> = (0..trace.len()).step_by(every.max(1)).collect();
    if ks.last() != Some(&(trace.len() - 1)) {
        ks.push(trace.len() - 1);
    }
    ks.into_iter()
        .map(|k| {
            let xs = ens.wrapped_positions(k, trace.grid());
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            let cdf = DensityCdf::new(&trace.snapshots()[k].density())?;
            Ok([trace.time(k), mean, var.sqrt(), ks_distance(&xs, &cdf)?])
        })
        .collect()
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values
        .into_iter()
        .fold(0.0, |a: f64, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) })
}

/// The three local-momentum routes, the momentum density and the global
/// momentum on one field.
fn momentum_identities(psi: &WaveField, units: Units, rho_floor: f64, label: &str, checks: &mut Vec<Check>) -> Result<()> {
    use bohmlab::bohm::{field_momentum_density, global_momentum, local_momentum, moyal_mean_momentum, MomentumMethod};
    use crate::report::Oracle;

    let pg = local_momentum(psi, units, MomentumMethod::PhaseGradient, rho_floor)?;
    let wv = local_momentum(psi, units, MomentumMethod::WeakValue, rho_floor)?;
    let my = moyal_mean_momentum(psi, units, rho_floor)?;
    checks.push(Check::below(
        format!("{label}_phase_gradient_vs_weak_value"),
        pg.max_abs_diff(&wv)?,
        1e-8,
        Oracle::CrossCheck,
    ));
    checks.push(Check::below(
        format!("{label}_moyal_vs_weak_value"),
        my.max_abs_diff(&wv)?,
        1e-8,
        Oracle::CrossCheck,
    ));
    let t0x = field_momentum_density(psi, units)?;
    let rho = psi.density();
    let stress = max_of((0..rho.values().len()).filter_map(|j| {
        let p = wv.get(j)?;
        Some((t0x.values()[j] - rho.values()[j] * p).abs())
    }));
    checks.push(Check::below(format!("{label}_momentum_density_vs_rho_p"), stress, 1e-10, Oracle::Invariant));
    let total = global_momentum(psi, units)?;
    checks.push(Check::below(
        format!("{label}_global_momentum_vs_expectation"),
        (total - psi.momentum_expectation(units.hbar)).abs(),
        1e-8,
        Oracle::CrossCheck,
    ));
    Ok(())
}

/// Bohm and reconstructed mean paths as `bohm_i` / `mean_i` trajectories.
fn write_mean_paths(sink: &mut Sink, file: &str, scenario: &str, cmp: &[MeanPathComparison]) -> Result<()> {
    let rows: Vec<(String, Vec<(f64, f64)>)> = cmp
        .iter()
        .enumerate()
        .flat_map(|(i, c)| {
            let zip = |xs: &[f64]| c.times.iter().copied().zip(xs.iter().copied()).collect::<Vec<_>>();
            [(format!("bohm_{i}"), zip(&c.bohm)), (format!("mean_{i}"), zip(&c.reconstructed))]
        })
        .collect();
    sink.trajectories(file, scenario, rows.iter().map(|(id, s)| (id.clone(), s.as_slice())))
}
