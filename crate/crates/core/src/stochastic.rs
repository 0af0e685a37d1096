//! Nelson diffusion sample paths and conditional-average estimators.
//!
//! Each path solves `dX = b(X, t) dt + sqrt(ħ/m) dW` with the forward drift
//! `b = v + u`, where `v = ħ Im(psi'/psi) / m` is the current velocity and
//! `u = ħ Re(psi'/psi) / m = (ħ/2m) d ln rho / dx` the osmotic velocity. The
//! stationary law of the process is `|psi|^2`, and the conditional mean of the
//! symmetric finite difference of the paths recovers `v`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bohm::{integrate_trajectories, TrajectoryOptions};
use crate::error::{Error, Result};
use crate::field::{RealField, WaveField};
use crate::grid::Grid1D;
use crate::par;
use crate::sampling::DensityCdf;
use crate::solver::{EvolutionTrace, Units, DEFAULT_RHO_FLOOR};

/// Current and osmotic velocity of one snapshot.
#[derive(Debug, Clone)]
pub struct DriftFields {
    pub v: RealField,
    pub u: RealField,
}

impl DriftFields {
    pub fn from_field(psi: &WaveField, units: Units, rho_floor: f64) -> Result<Self> {
        units.validate()?;
        let grid = psi.grid();
        let d = grid.derivative(psi.values(), 1)?;
        let mask: Vec<bool> = psi.values().iter().map(|p| p.norm_sqr() >= rho_floor).collect();
        if !mask.iter().any(|&m| m) {
            return Err(Error::DegenerateField { floor: rho_floor });
        }
        let ratio: Vec<Complex64> = psi
            .values()
            .iter()
            .zip(&d)
            .zip(&mask)
            .map(|((p, dp), &ok)| if ok { dp / p } else { Complex64::new(0.0, 0.0) })
            .collect();
        let scale = units.hbar / units.mass;
        let v = ratio.iter().map(|r| scale * r.im).collect();
        let u = ratio.iter().map(|r| scale * r.re).collect();
        Ok(DriftFields {
            v: RealField::masked(grid.clone(), v, psi.t(), mask.clone())?,
            u: RealField::masked(grid.clone(), u, psi.t(), mask)?,
        })
    }

    /// `b+ = v + u` at point `j`.
    pub fn forward(&self, j: usize) -> Option<f64> {
        Some(self.v.get(j)? + self.u.get(j)?)
    }

    /// `b- = v - u` at point `j`.
    pub fn backward(&self, j: usize) -> Option<f64> {
        Some(self.v.get(j)? - self.u.get(j)?)
    }
}

/// Drift fields of every snapshot.
pub fn drift_fields(trace: &EvolutionTrace, units: Units, rho_floor: f64) -> Result<Vec<DriftFields>> {
    par::map_slice(trace.snapshots(), |psi| DriftFields::from_field(psi, units, rho_floor))
        .into_iter()
        .collect()
}

/// A diffusion driven by a wave field: drift per snapshot plus a constant noise
/// amplitude.
pub trait PathProcess: Sync {
    /// Drift on the grid of `psi`, with a validity mask.
    fn drift(&self, psi: &WaveField) -> Result<(Vec<f64>, Vec<bool>)>;
    /// Coefficient of `dW`.
    fn noise(&self) -> f64;
}

/// `dX = (v + u) dt + sqrt(ħ/m) dW`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelsonDiffusion {
    pub units: Units,
    pub rho_floor: f64,
}

impl NelsonDiffusion {
    pub fn new(units: Units) -> Self {
        NelsonDiffusion {
            units,
            rho_floor: DEFAULT_RHO_FLOOR,
        }
    }
}

impl PathProcess for NelsonDiffusion {
    fn drift(&self, psi: &WaveField) -> Result<(Vec<f64>, Vec<bool>)> {
        let f = DriftFields::from_field(psi, self.units, self.rho_floor)?;
        let n = psi.values().len();
        let mask = f.v.mask().expect("drift fields are masked").to_vec();
        let b = (0..n).map(|j| f.forward(j).unwrap_or(0.0)).collect();
        Ok((b, mask))
    }

    fn noise(&self) -> f64 {
        (self.units.hbar / self.units.mass).sqrt()
    }
}

/// Starting points of the paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathInit {
    Delta(f64),
    /// Independent draws from `|psi(t0)|^2`.
    FromDensity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingOptions {
    pub n_paths: usize,
    pub master_seed: u64,
    pub init: PathInit,
}

/// Paths on the time grid of a trace, stored path-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    n_paths: usize,
    n_times: usize,
    t0: f64,
    dt: f64,
    period: f64,
    master_seed: u64,
    positions: Vec<f64>,
    masked_hits: usize,
}

impl PathEnsemble {
    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Drift evaluations whose stencil touched a low-density point and used
    /// the nearest defined value instead.
    pub fn masked_hits(&self) -> usize {
        self.masked_hits
    }

    /// Positions of one path; unwrapped, so they may leave the grid interval.
    pub fn path(&self, i: usize) -> &[f64] {
        &self.positions[i * self.n_times..(i + 1) * self.n_times]
    }

    pub fn position(&self, i: usize, k: usize) -> f64 {
        self.positions[i * self.n_times + k]
    }

    /// All positions at time index `k`, folded into the grid interval.
    pub fn wrapped_positions(&self, k: usize, grid: &Grid1D) -> Vec<f64> {
        (0..self.n_paths)
            .map(|i| grid.x_min() + (self.position(i, k) - grid.x_min()).rem_euclid(self.period))
            .collect()
    }

    fn index_of(&self, t: f64) -> Result<usize> {
        let s = (t - self.t0) / self.dt;
        let k = s.round();
        if (s - k).abs() > 1e-6 || k < 1.0 || k as usize + 1 >= self.n_times {
            return Err(Error::InvalidParameter {
                name: "t",
                reason: format!("{t} is not an interior time of the ensemble"),
            });
        }
        Ok(k as usize)
    }

    fn periodic_offset(&self, d: f64) -> f64 {
        d - self.period * (d / self.period).round()
    }
}

/// Per-snapshot drift with periodic cubic interpolation; masked points carry
/// the nearest defined value.
struct DriftTable {
    x_min: f64,
    dx: f64,
    n: usize,
    values: Vec<Vec<f64>>,
    filled: Vec<Vec<bool>>,
}

impl DriftTable {
    fn new<P: PathProcess>(trace: &EvolutionTrace, process: &P) -> Result<Self> {
        let grid = trace.grid();
        let fields = par::map_slice(trace.snapshots(), |psi| process.drift(psi))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let n = grid.len();
        let mut values = Vec::with_capacity(fields.len());
        let mut filled = Vec::with_capacity(fields.len());
        for (v, mask) in fields {
            let valid: Vec<usize> = (0..n).filter(|&j| mask[j]).collect();
            let mut out = v.clone();
            for j in (0..n).filter(|&j| !mask[j]) {
                let nearest = valid
                    .iter()
                    .copied()
                    .min_by_key(|&m| {
                        let d = j.abs_diff(m);
                        d.min(n - d)
                    })
                    .expect("drift has at least one defined point");
                out[j] = v[nearest];
            }
            values.push(out);
            filled.push(mask.iter().map(|m| !m).collect());
        }
        Ok(DriftTable {
            x_min: grid.x_min(),
            dx: grid.dx(),
            n,
            values,
            filled,
        })
    }

    /// `(drift, touched a filled point)`.
    fn eval(&self, k: usize, x: f64) -> (f64, bool) {
        let u = (x - self.x_min) / self.dx;
        let i = u.floor();
        let f = u - i;
        let n = self.n as i64;
        let base = i as i64;
        let w = [
            -f * (f - 1.0) * (f - 2.0) / 6.0,
            (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0,
            -(f + 1.0) * f * (f - 2.0) / 2.0,
            (f + 1.0) * f * (f - 1.0) / 6.0,
        ];
        let (vals, fill) = (&self.values[k], &self.filled[k]);
        let mut acc = 0.0;
        let mut hit = false;
        for (o, w) in (-1..=2).zip(w) {
            let m = (base + o).rem_euclid(n) as usize;
            acc += w * vals[m];
            hit |= fill[m];
        }
        (acc, hit)
    }
}

/// Euler–Maruyama paths at the trace spacing. Path `i` draws from ChaCha8
/// stream `i` of `master_seed`, so the ensemble does not depend on scheduling.
pub fn sample_paths<P: PathProcess>(
    trace: &EvolutionTrace,
    process: &P,
    options: SamplingOptions,
) -> Result<PathEnsemble> {
    if options.n_paths == 0 {
        return Err(Error::InvalidParameter {
            name: "n_paths",
            reason: "need at least one path".into(),
        });
    }
    let grid = trace.grid();
    let table = DriftTable::new(trace, process)?;
    let cdf = match options.init {
        PathInit::FromDensity => Some(DensityCdf::new(&trace.snapshots()[0].density())?),
        PathInit::Delta(x) => {
            let j = grid.position_index(x).round() as usize;
            if !(grid.x_min()..grid.x_max()).contains(&x) {
                return Err(Error::OutOfDomain {
                    x,
                    lo: grid.x_min(),
                    hi: grid.x_max(),
                });
            }
            if table.filled[0][j % grid.len()] {
                return Err(Error::MaskedPoint { x });
            }
            None
        }
    };
    let n_times = trace.len();
    let dt = trace.dt();
    let noise = process.noise() * dt.sqrt();
    let paths = par::map_range(options.n_paths, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(options.master_seed);
        rng.set_stream(i as u64);
        let mut x = match (&cdf, options.init) {
            (Some(c), _) => c.quantile(rng.random::<f64>()),
            (None, PathInit::Delta(x0)) => x0,
            (None, PathInit::FromDensity) => unreachable!(),
        };
        let mut out = Vec::with_capacity(n_times);
        let mut hits = 0usize;
        out.push(x);
        for k in 0..n_times - 1 {
            let (b, hit) = table.eval(k, x);
            hits += hit as usize;
            let xi: f64 = rng.sample(StandardNormal);
            x += b * dt + noise * xi;
            out.push(x);
        }
        (out, hits)
    });
    let mut positions = Vec::with_capacity(options.n_paths * n_times);
    let mut masked_hits = 0;
    for (p, h) in paths {
        positions.extend(p);
        masked_hits += h;
    }
    Ok(PathEnsemble {
        n_paths: options.n_paths,
        n_times,
        t0: trace.t0(),
        dt,
        period: grid.length(),
        master_seed: options.master_seed,
        positions,
        masked_hits,
    })
}

/// Window average with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalEstimate {
    pub estimate: f64,
    pub standard_error: f64,
    pub count: usize,
}

impl ConditionalEstimate {
    /// `|estimate - target|` in units of the standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.estimate - target).abs() / self.standard_error
    }
}

/// Fewest in-window paths accepted by the conditional estimators.
pub const MIN_WINDOW_COUNT: usize = 100;

fn window_average(
    ens: &PathEnsemble,
    q: f64,
    k: usize,
    bandwidth: f64,
    statistic: impl Fn(f64, f64, f64) -> f64,
) -> Result<ConditionalEstimate> {
    if !(bandwidth > 0.0) {
        return Err(Error::InvalidParameter {
            name: "bandwidth",
            reason: format!("must be positive, got {bandwidth}"),
        });
    }
    let (mut n, mut sum, mut sum_sq) = (0usize, 0.0, 0.0);
    for i in 0..ens.n_paths {
        let p = ens.path(i);
        if ens.periodic_offset(p[k] - q).abs() < bandwidth {
            let s = statistic(p[k - 1], p[k], p[k + 1]);
            n += 1;
            sum += s;
            sum_sq += s * s;
        }
    }
    if n < MIN_WINDOW_COUNT {
        return Err(Error::InsufficientSamples {
            count: n,
            needed: MIN_WINDOW_COUNT,
        });
    }
    let mean = sum / n as f64;
    let var = (sum_sq - n as f64 * mean * mean) / (n - 1) as f64;
    Ok(ConditionalEstimate {
        estimate: mean,
        standard_error: (var.max(0.0) / n as f64).sqrt(),
        count: n,
    })
}

/// Mean of `(X(t+dt) - X(t-dt)) / 2dt` over paths with `|X(t) - Q| < bandwidth`;
/// estimates the current velocity `v(Q, t)`.
pub fn conditional_mean_velocity(ens: &PathEnsemble, q: f64, t: f64, bandwidth: f64) -> Result<ConditionalEstimate> {
    let k = ens.index_of(t)?;
    let dt = ens.dt;
    window_average(ens, q, k, bandwidth, |a, _, c| (c - a) / (2.0 * dt))
}

/// Mean of `(X(t+dt) - 2X(t) + X(t-dt)) / 2dt` in the same window; estimates
/// the osmotic velocity `u(Q, t)`.
pub fn conditional_osmotic_velocity(ens: &PathEnsemble, q: f64, t: f64, bandwidth: f64) -> Result<ConditionalEstimate> {
    let k = ens.index_of(t)?;
    let dt = ens.dt;
    window_average(ens, q, k, bandwidth, |a, b, c| (c - 2.0 * b + a) / (2.0 * dt))
}

/// Bohm trajectory against the path rebuilt from conditional mean velocities.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanPathComparison {
    pub seed: f64,
    pub times: Vec<f64>,
    pub bohm: Vec<f64>,
    pub reconstructed: Vec<f64>,
    pub rms: f64,
}

/// For every seed, integrates `dQ/dt = conditional_mean_velocity(Q, t)` with
/// Heun steps from `Q(t0) = seed` and compares with the Bohm trajectory over
/// the times where both exist.
pub fn mean_path_vs_bohm(
    ens: &PathEnsemble,
    trace: &EvolutionTrace,
    seeds: &[f64],
    units: Units,
    bandwidth: f64,
) -> Result<Vec<MeanPathComparison>> {
    if ens.n_times != trace.len() || (ens.dt - trace.dt()).abs() > 1e-12 * trace.dt() {
        return Err(Error::GridMismatch("ensemble and trace time grids differ".into()));
    }
    if ens.n_times < 3 {
        return Err(Error::TraceTooShort {
            needed: 3,
            have: ens.n_times,
        });
    }
    let bohm = integrate_trajectories(trace, seeds, units, TrajectoryOptions::default())?;
    let last = ens.n_times - 2;
    let dt = ens.dt;
    // The estimator needs a neighbour on each side; index 0 borrows index 1.
    let velocity = |q: f64, k: usize| -> Result<f64> {
        let k = k.clamp(1, last);
        Ok(conditional_mean_velocity(ens, q, ens.time(k), bandwidth)?.estimate)
    };
    bohm.iter()
        .map(|traj| {
            let mut q = traj.seed;
            let mut path = vec![q];
            for k in 0..last {
                let v0 = velocity(q, k)?;
                let predictor = q + dt * v0;
                let v1 = velocity(predictor, k + 1)?;
                q += 0.5 * dt * (v0 + v1);
                path.push(q);
            }
            let len = path.len().min(traj.samples.len());
            let bohm_x: Vec<f64> = traj.samples[..len].iter().map(|s| s.1).collect();
            let rms = (bohm_x
                .iter()
                .zip(&path)
                .map(|(b, r)| (b - r).powi(2))
                .sum::<f64>()
                / len as f64)
                .sqrt();
            Ok(MeanPathComparison {
                seed: traj.seed,
                times: (0..len).map(|k| ens.time(k)).collect(),
                bohm: bohm_x,
                reconstructed: path[..len].to_vec(),
                rms,
            })
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InsufficientSamples {
            count: x.len().min(y.len()),
            needed: 2,
        });
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidParameter {
            name: "log_log_slope",
            reason: "values must be positive".into(),
        });
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// One rung of an ensemble-size ladder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderRung {
    pub n_paths: usize,
    /// Root mean square over replicates of the mean-path RMS discrepancy.
    pub rms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderReport {
    pub rungs: Vec<LadderRung>,
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderOptions {
    pub sizes: Vec<usize>,
    pub replicates: usize,
    pub master_seed: u64,
    pub bandwidth: f64,
}

/// Seed of replicate `r` under `master`.
pub fn replicate_seed(master: u64, r: usize) -> u64 {
    master ^ (r as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Mean-path discrepancy for a single seed across ensemble sizes, with the
/// fitted power of `n_paths`. Ensembles start from `|psi(t0)|^2`.
pub fn mean_path_ladder<P: PathProcess>(
    trace: &EvolutionTrace,
    process: &P,
    seed: f64,
    units: Units,
    options: &LadderOptions,
) -> Result<LadderReport> {
    if options.replicates == 0 {
        return Err(Error::InvalidParameter {
            name: "replicates",
            reason: "need at least one replicate".into(),
        });
    }
    let mut rungs = Vec::with_capacity(options.sizes.len());
    for &n in &options.sizes {
        let mut acc = 0.0;
        for r in 0..options.replicates {
            let ens = sample_paths(
                trace,
                process,
                SamplingOptions {
                    n_paths: n,
                    master_seed: replicate_seed(options.master_seed, r),
                    init: PathInit::FromDensity,
                },
            )?;
            let cmp = mean_path_vs_bohm(&ens, trace, &[seed], units, options.bandwidth)?;
            acc += cmp[0].rms.powi(2);
        }
        rungs.push(LadderRung {
            n_paths: n,
            rms: (acc / options.replicates as f64).sqrt(),
        });
    }
    let xs: Vec<f64> = rungs.iter().map(|r| r.n_paths as f64).collect();
    let ys: Vec<f64> = rungs.iter().map(|r| r.rms).collect();
    let exponent = log_log_slope(&xs, &ys)?;
    Ok(LadderReport { rungs, exponent })
}
