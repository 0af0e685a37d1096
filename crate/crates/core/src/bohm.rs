//! Local momentum, momentum density and deterministic trajectories.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{RealField, WaveField};
use crate::par;
use crate::sampling::DensityCdf;
use crate::solver::{polar_decompose, EvolutionTrace, Units};

/// How the local momentum is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentumMethod {
    /// Differentiate the unwrapped phase action `S`.
    PhaseGradient,
    /// `Re[(-iħ psi') / psi]`.
    WeakValue,
}

/// Half-width of the phase-gradient difference stencil.
const STENCIL_HALF: usize = 8;

/// Weights of the first derivative at `z` from nodes `xs` (Fornberg's
/// recursion).
fn first_derivative_weights(z: f64, xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    // c[j][k]: weight of node j for derivative k.
    let mut c = vec![[0.0f64; 2]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - z;
    for i in 1..n {
        let mn = i.min(1);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - z;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|w| w[1]).collect()
}

/// `dS/dx` along each run of consecutive defined points by centred
/// differences of up to order `2 * STENCIL_HALF`, narrowing towards the ends
/// of the run (wide one-sided stencils amplify the phase noise of the
/// low-density tails). The two outermost points of a run use five nodes
/// shifted into the run; runs of a single point stay undefined.
fn run_gradient(s: &RealField) -> (Vec<f64>, Vec<bool>) {
    let n = s.values().len();
    let dx = s.grid().dx();
    let centred: Vec<Vec<f64>> = (0..=STENCIL_HALF)
        .map(|h| {
            let nodes: Vec<f64> = (0..=2 * h).map(|m| m as f64 - h as f64).collect();
            first_derivative_weights(0.0, &nodes)
        })
        .collect();
    let mut out = vec![0.0; n];
    let mut ok = vec![false; n];
    let mut j = 0;
    while j < n {
        if !s.is_valid(j) {
            j += 1;
            continue;
        }
        let start = j;
        while j < n && s.is_valid(j) {
            j += 1;
        }
        let run = &s.values()[start..j];
        let len = run.len();
        if len < 2 {
            continue;
        }
        for i in 0..len {
            let h = i.min(len - 1 - i).min(STENCIL_HALF);
            let d = if h >= 2 || (h == 1 && len < 5) {
                centred[h].iter().zip(&run[i - h..=i + h]).map(|(w, v)| w * v).sum::<f64>()
            } else if len >= 5 {
                // Five nodes shifted into the run.
                let lo = i.saturating_sub(2).min(len - 5);
                let nodes: Vec<f64> = (lo..lo + 5).map(|m| m as f64 - i as f64).collect();
                first_derivative_weights(0.0, &nodes)
                    .iter()
                    .zip(&run[lo..lo + 5])
                    .map(|(w, v)| w * v)
                    .sum::<f64>()
            } else if i == 0 {
                run[1] - run[0]
            } else {
                run[i] - run[i - 1]
            };
            out[start + i] = d / dx;
            ok[start + i] = true;
        }
    }
    (out, ok)
}

/// Bohm local momentum `p_B`, masked where `|psi|^2 < rho_floor`.
pub fn local_momentum(psi: &WaveField, units: Units, method: MomentumMethod, rho_floor: f64) -> Result<RealField> {
    let polar = polar_decompose(psi, units, rho_floor)?;
    let grid = psi.grid().clone();
    let (values, mask) = match method {
        MomentumMethod::PhaseGradient => run_gradient(&polar.phase),
        MomentumMethod::WeakValue => {
            let d = psi.grid().derivative(psi.values(), 1)?;
            let mask = polar.node_mask().to_vec();
            let v = psi
                .values()
                .iter()
                .zip(&d)
                .zip(&mask)
                .map(|((p, dp), &ok)| if ok { (-Complex64::i() * units.hbar * dp / p).re } else { 0.0 })
                .collect();
            (v, mask)
        }
    };
    RealField::masked(grid, values, psi.t(), mask)
}

/// Mean momentum from the diagonal of the two-point function,
/// `(ħ/2i)(psi* psi' - psi (psi*)') / rho`; `psi'` and `(psi*)'` are
/// differentiated separately.
pub fn moyal_mean_momentum(psi: &WaveField, units: Units, rho_floor: f64) -> Result<RealField> {
    units.validate()?;
    let grid = psi.grid();
    let d = grid.derivative(psi.values(), 1)?;
    let conj: Vec<Complex64> = psi.values().iter().map(|v| v.conj()).collect();
    let dc = grid.derivative(&conj, 1)?;
    let mut mask = Vec::with_capacity(d.len());
    let values = psi
        .values()
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let rho = p.norm_sqr();
            let ok = rho >= rho_floor;
            mask.push(ok);
            if !ok {
                return 0.0;
            }
            let two_point = (conj[j] * d[j] - p * dc[j]) / (2.0 * Complex64::i());
            units.hbar * two_point.re / rho
        })
        .collect();
    if !mask.iter().any(|&m| m) {
        return Err(Error::DegenerateField { floor: rho_floor });
    }
    RealField::masked(grid.clone(), values, psi.t(), mask)
}

/// Momentum density `T^{0x} = (iħ/2)(psi (psi*)' - psi* psi')`.
pub fn field_momentum_density(psi: &WaveField, units: Units) -> Result<RealField> {
    units.validate()?;
    let grid = psi.grid();
    let d = grid.derivative(psi.values(), 1)?;
    let values = psi
        .values()
        .iter()
        .zip(&d)
        .map(|(p, dp)| {
            let dpc = dp.conj();
            (Complex64::i() * units.hbar / 2.0 * (p * dpc - p.conj() * dp)).re
        })
        .collect();
    RealField::new(grid.clone(), values, psi.t())
}

/// `∫ rho p_B dx`.
pub fn global_momentum(psi: &WaveField, units: Units) -> Result<f64> {
    crate::field::integrate(&field_momentum_density(psi, units)?)
}

/// Why a trajectory ended before the trace did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopReason {
    /// The interpolation stencil touched a masked point.
    Node { t: f64, x: f64 },
    /// The position entered the guard band at the domain edge.
    Edge { t: f64, x: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub seed: f64,
    /// `(t, x)`, one per trace snapshot reached.
    pub samples: Vec<(f64, f64)>,
    pub dt: f64,
    pub stop: Option<StopReason>,
}

impl Trajectory {
    pub fn position_at(&self, k: usize) -> Option<f64> {
        self.samples.get(k).map(|s| s.1)
    }

    pub fn final_position(&self) -> f64 {
        self.samples.last().map_or(self.seed, |s| s.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryOptions {
    pub rho_floor: f64,
    /// Width of the edge band, as a fraction of the domain length.
    pub guard_fraction: f64,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        TrajectoryOptions {
            rho_floor: crate::solver::DEFAULT_RHO_FLOOR,
            guard_fraction: 0.05,
        }
    }
}

/// Velocity fields of every snapshot, with cubic interpolation in space and
/// linear interpolation in time.
pub(crate) struct VelocityTable {
    x_min: f64,
    dx: f64,
    t0: f64,
    h: f64,
    lo: f64,
    hi: f64,
    fields: Vec<(Vec<f64>, Vec<bool>)>,
}

pub(crate) enum Sample {
    Value(f64),
    Masked,
    Edge,
}

impl VelocityTable {
    /// `fields[k][j]` is `f(snapshot k)` at grid point `j`.
    pub(crate) fn new(
        trace: &EvolutionTrace,
        guard_fraction: f64,
        field: impl Fn(&WaveField) -> Result<(Vec<f64>, Vec<bool>)> + Sync + Send,
    ) -> Result<Self> {
        if !(0.0..0.5).contains(&guard_fraction) {
            return Err(Error::InvalidParameter {
                name: "guard_fraction",
                reason: format!("must lie in [0, 0.5), got {guard_fraction}"),
            });
        }
        let grid = trace.grid();
        let fields = par::map_slice(trace.snapshots(), &field)
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        // The cubic stencil needs one point below and two above.
        let guard = (guard_fraction * grid.length()).max(3.0 * grid.dx());
        Ok(VelocityTable {
            x_min: grid.x_min(),
            dx: grid.dx(),
            t0: trace.t0(),
            h: trace.dt(),
            lo: grid.x_min() + guard,
            hi: grid.x_max() - guard,
            fields,
        })
    }

    pub(crate) fn snapshots(&self) -> usize {
        self.fields.len()
    }

    pub(crate) fn in_domain(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    fn spatial(&self, k: usize, x: f64) -> Option<f64> {
        let (v, ok) = &self.fields[k];
        let u = (x - self.x_min) / self.dx;
        let i = u.floor() as usize;
        let f = u - i as f64;
        let idx = [i - 1, i, i + 1, i + 2];
        if idx.iter().any(|&m| !ok[m]) {
            return None;
        }
        // Cubic Lagrange through nodes -1, 0, 1, 2.
        let w = [
            -f * (f - 1.0) * (f - 2.0) / 6.0,
            (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0,
            -(f + 1.0) * f * (f - 2.0) / 2.0,
            (f + 1.0) * f * (f - 1.0) / 6.0,
        ];
        Some(idx.iter().zip(w).map(|(&m, w)| w * v[m]).sum())
    }

    pub(crate) fn sample(&self, t: f64, x: f64) -> Sample {
        if !self.in_domain(x) || !x.is_finite() {
            return Sample::Edge;
        }
        let last = self.fields.len() - 1;
        let s = ((t - self.t0) / self.h).clamp(0.0, last as f64);
        let k = (s.floor() as usize).min(last.saturating_sub(1));
        let a = s - k as f64;
        let v0 = self.spatial(k, x);
        if last == 0 {
            return v0.map_or(Sample::Masked, Sample::Value);
        }
        let v1 = if a > 0.0 { self.spatial(k + 1, x) } else { v0 };
        match (v0, v1) {
            (Some(v0), Some(v1)) => Sample::Value((1.0 - a) * v0 + a * v1),
            _ => Sample::Masked,
        }
    }

    pub(crate) fn masked_at(&self, k: usize, x: f64) -> bool {
        self.spatial(k, x).is_none()
    }
}

/// Integrates `dx/dt = p_B / m` from every seed with classical RK4 at the
/// trace spacing.
pub fn integrate_trajectories(
    trace: &EvolutionTrace,
    seeds: &[f64],
    units: Units,
    options: TrajectoryOptions,
) -> Result<Vec<Trajectory>> {
    units.validate()?;
    let table = VelocityTable::new(trace, options.guard_fraction, |psi| {
        let p = local_momentum(psi, units, MomentumMethod::WeakValue, options.rho_floor)?;
        let mask = p.mask().map(<[bool]>::to_vec).unwrap_or_else(|| vec![true; p.values().len()]);
        let v = p.values().iter().map(|p| if p.is_finite() { p / units.mass } else { 0.0 }).collect();
        Ok((v, mask))
    })?;
    let grid = trace.grid();
    for &x in seeds {
        if !table.in_domain(x) {
            return Err(Error::OutOfDomain {
                x,
                lo: grid.x_min(),
                hi: grid.x_max(),
            });
        }
        if table.masked_at(0, x) {
            return Err(Error::MaskedPoint { x });
        }
    }
    let h = trace.dt();
    Ok(par::map_slice(seeds, |&seed| {
        let mut samples = Vec::with_capacity(table.snapshots());
        samples.push((trace.t0(), seed));
        let mut x = seed;
        let mut stop = None;
        for k in 1..table.snapshots() {
            let t = trace.time(k - 1);
            let f = |t: f64, x: f64| match table.sample(t, x) {
                Sample::Value(v) => Ok(v),
                Sample::Masked => Err(StopReason::Node { t, x }),
                Sample::Edge => Err(StopReason::Edge { t, x }),
            };
            let step = (|| {
                let k1 = f(t, x)?;
                let k2 = f(t + h / 2.0, x + h / 2.0 * k1)?;
                let k3 = f(t + h / 2.0, x + h / 2.0 * k2)?;
                let k4 = f(t + h, x + h * k3)?;
                let next = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                f(t + h, next)?;
                Ok(next)
            })();
            match step {
                Ok(next) => {
                    x = next;
                    samples.push((trace.time(k), x));
                }
                Err(reason) => {
                    stop = Some(reason);
                    break;
                }
            }
        }
        Trajectory {
            seed,
            samples,
            dt: h,
            stop,
        }
    }))
}

/// Whether every pair of trajectories keeps its initial order at each sample
/// index both have reached.
pub fn ordering_preserved(trajectories: &[Trajectory]) -> bool {
    let mut order: Vec<&Trajectory> = trajectories.iter().collect();
    order.sort_by(|a, b| a.seed.total_cmp(&b.seed));
    let len = order.iter().map(|t| t.samples.len()).max().unwrap_or(0);
    (0..len).all(|k| {
        let alive: Vec<f64> = order.iter().filter_map(|t| t.position_at(k)).collect();
        // Trajectories stop only at the end of their sample list, so the
        // survivors at index k are still in seed order.
        alive.windows(2).all(|w| w[0] <= w[1])
    })
}

/// Seeds at the `n` mid-quantiles `(i + 1/2)/n` of `|psi|^2`.
pub fn quantile_seeds(psi: &WaveField, n: usize) -> Result<Vec<f64>> {
    let cdf = DensityCdf::new(&psi.density())?;
    Ok((0..n).map(|i| cdf.quantile((i as f64 + 0.5) / n as f64)).collect())
}

/// 1-Wasserstein distance between the transported seed distribution and
/// `|psi(t_k)|^2` for each snapshot `k`. Seeds sit at equal-mass quantiles,
/// so the transport is compared quantile by quantile.
pub fn equivariance_w1(trace: &EvolutionTrace, n_seeds: usize, units: Units, options: TrajectoryOptions) -> Result<Vec<f64>> {
    let seeds = quantile_seeds(&trace.snapshots()[0], n_seeds)?;
    let trajectories = integrate_trajectories(trace, &seeds, units, options)?;
    (0..trace.len())
        .map(|k| {
            let cdf = DensityCdf::new(&trace.snapshots()[k].density())?;
            let mut total = 0.0;
            for (i, tr) in trajectories.iter().enumerate() {
                let x = tr.position_at(k).ok_or(Error::InsufficientSamples {
                    count: tr.samples.len(),
                    needed: k + 1,
                })?;
                total += (x - cdf.quantile((i as f64 + 0.5) / n_seeds as f64)).abs();
            }
            Ok(total / n_seeds as f64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{evolve_trace, PotentialSpec, DEFAULT_RHO_FLOOR};
    use crate::Grid1D;

    fn packet(g: &Grid1D, sigma: f64, x0: f64, k0: f64) -> WaveField {
        WaveField::from_fn(g, 0.0, |x| {
            Complex64::from_polar((-(x - x0).powi(2) / (4.0 * sigma * sigma)).exp(), k0 * x)
        })
        .unwrap()
        .normalized()
        .unwrap()
    }

    fn max_masked_diff(a: &RealField, b: &RealField) -> f64 {
        (0..a.values().len())
            .filter_map(|j| Some((a.get(j)? - b.get(j)?).abs()))
            .fold(0.0, f64::max)
    }

    #[test]
    fn fornberg_weights_reproduce_centred_differences() {
        let w = first_derivative_weights(0.0, &[-1.0, 0.0, 1.0]);
        assert!((w[0] + 0.5).abs() < 1e-15 && w[1].abs() < 1e-15 && (w[2] - 0.5).abs() < 1e-15);
        let w = first_derivative_weights(0.0, &[0.0, 1.0, 2.0]);
        assert!((w[0] + 1.5).abs() < 1e-14 && (w[1] - 2.0).abs() < 1e-14 && (w[2] + 0.5).abs() < 1e-14);
        // Exact on polynomials up to the stencil degree.
        let nodes: Vec<f64> = (0..9).map(|m| m as f64 - 2.0).collect();
        let w = first_derivative_weights(0.0, &nodes);
        let d: f64 = w.iter().zip(&nodes).map(|(w, x)| w * x.powi(7)).sum();
        assert!(d.abs() < 1e-9);
        let d: f64 = w.iter().zip(&nodes).map(|(w, x)| w * (3.0 * x)).sum();
        assert!((d - 3.0).abs() < 1e-12);
    }

    #[test]
    fn plane_wave_momentum() {
        let g = Grid1D::new(0.0, 2.0 * std::f64::consts::PI, 64).unwrap();
        let u = Units::new(1.0, 0.7).unwrap();
        let psi = WaveField::from_fn(&g, 0.0, |x| Complex64::from_polar(1.0, 3.0 * x)).unwrap().normalized().unwrap();
        for m in [MomentumMethod::PhaseGradient, MomentumMethod::WeakValue] {
            let p = local_momentum(&psi, u, m, DEFAULT_RHO_FLOOR).unwrap();
            assert!(p.values().iter().all(|v| (v - 2.1).abs() < 1e-10), "{m:?}");
        }
        let moyal = moyal_mean_momentum(&psi, u, DEFAULT_RHO_FLOOR).unwrap();
        assert!(moyal.values().iter().all(|v| (v - 2.1).abs() < 1e-10));
        let t = field_momentum_density(&psi, u).unwrap();
        let rho = 1.0 / (2.0 * std::f64::consts::PI);
        assert!(t.values().iter().all(|v| (v - rho * 2.1).abs() < 1e-10));
    }

    #[test]
    fn real_gaussian_has_no_momentum() {
        let g = Grid1D::symmetric(10.0, 256).unwrap();
        let psi = packet(&g, 1.0, 0.0, 0.0);
        let u = Units::default();
        let pg = local_momentum(&psi, u, MomentumMethod::PhaseGradient, DEFAULT_RHO_FLOOR).unwrap();
        assert!((0..256).filter_map(|j| pg.get(j)).all(|v| v == 0.0));
        // Roundoff in psi' relative to psi ~ 1e-6 in the tails.
        let wv = local_momentum(&psi, u, MomentumMethod::WeakValue, DEFAULT_RHO_FLOOR).unwrap();
        assert!((0..256).filter_map(|j| wv.get(j)).all(|v| v.abs() < 1e-8));
        assert!(field_momentum_density(&psi, u).unwrap().values().iter().all(|v| v.abs() < 1e-14));
        assert!(global_momentum(&psi, u).unwrap().abs() < 1e-12);
    }

    #[test]
    fn opposed_plane_waves_have_zero_mean_momentum() {
        let g = Grid1D::new(0.0, 2.0 * std::f64::consts::PI, 128).unwrap();
        let psi = WaveField::from_fn(&g, 0.0, |x| Complex64::new(2.0 * (4.0 * x).cos(), 0.0)).unwrap();
        let p = moyal_mean_momentum(&psi, Units::default(), 1e-6).unwrap();
        assert!(p.valid_count() < 128);
        assert!((0..128).filter_map(|j| p.get(j)).all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn free_gaussian_local_momentum_matches_spreading() {
        let g = Grid1D::symmetric(30.0, 1024).unwrap();
        let u = Units::default();
        let psi = evolve_trace(&packet(&g, 1.0, 0.0, 0.0), &PotentialSpec::free(), 1e-3, 1000, 1000)
            .unwrap()
            .last()
            .clone();
        // sigma(t) = sqrt(1 + t^2/4); p_B = m x sigma'/sigma = x t / (4 + t^2).
        let p = local_momentum(&psi, u, MomentumMethod::WeakValue, DEFAULT_RHO_FLOOR).unwrap();
        let ph = local_momentum(&psi, u, MomentumMethod::PhaseGradient, DEFAULT_RHO_FLOOR).unwrap();
        let mut worst: f64 = 0.0;
        for j in 0..g.len() {
            if let Some(v) = p.get(j) {
                worst = worst.max((v - g.x(j) / 5.0).abs());
            }
        }
        assert!(worst < 1e-6, "{worst:e}");
        // Near rho ~ 1e-12 both routes inherit ~5e-8 of propagation roundoff
        // from psi itself.
        assert!(max_masked_diff(&p, &ph) < 1e-7);
        let p = local_momentum(&psi, u, MomentumMethod::WeakValue, 1e-10).unwrap();
        let ph = local_momentum(&psi, u, MomentumMethod::PhaseGradient, 1e-10).unwrap();
        assert!(max_masked_diff(&p, &ph) < 1e-8);
    }

    #[test]
    fn three_routes_agree_on_a_superposition() {
        let g = Grid1D::symmetric(20.0, 512).unwrap();
        let u = Units::new(1.5, 0.8).unwrap();
        let a = packet(&g, 1.0, -1.5, 1.0);
        let b = packet(&g, 1.2, 2.0, -0.5);
        let psi = WaveField::new(
            g.clone(),
            a.values().iter().zip(b.values()).map(|(a, b)| a + 0.6 * b).collect(),
            0.0,
        )
        .unwrap()
        .normalized()
        .unwrap();
        let floor = DEFAULT_RHO_FLOOR;
        let pg = local_momentum(&psi, u, MomentumMethod::PhaseGradient, floor).unwrap();
        let wv = local_momentum(&psi, u, MomentumMethod::WeakValue, floor).unwrap();
        let my = moyal_mean_momentum(&psi, u, floor).unwrap();
        assert!(max_masked_diff(&pg, &wv) < 1e-8, "{:e}", max_masked_diff(&pg, &wv));
        assert!(max_masked_diff(&my, &wv) < 1e-8);
        let t = field_momentum_density(&psi, u).unwrap();
        let rho = psi.density();
        for j in 0..g.len() {
            if let Some(p) = wv.get(j) {
                assert!((t.values()[j] - rho.values()[j] * p).abs() < 1e-10);
            }
        }
        let spectral = psi.momentum_expectation(u.hbar);
        assert!((global_momentum(&psi, u).unwrap() - spectral).abs() < 1e-8);
    }

    #[test]
    fn boosted_gaussian_global_momentum() {
        let g = Grid1D::symmetric(20.0, 512).unwrap();
        let psi = packet(&g, 1.0, 0.0, 5.0);
        let p = global_momentum(&psi, Units::default()).unwrap();
        assert!((p - 5.0).abs() < 1e-8);
        assert!((p - psi.momentum_expectation(1.0)).abs() < 1e-8);
    }

    #[test]
    fn plane_wave_trajectories_are_straight() {
        let g = Grid1D::new(0.0, 2.0 * std::f64::consts::PI, 64).unwrap();
        let psi = WaveField::from_fn(&g, 0.0, |x| Complex64::from_polar(1.0, 2.0 * x)).unwrap().normalized().unwrap();
        let trace = evolve_trace(&psi, &PotentialSpec::free(), 1e-3, 1000, 10).unwrap();
        let trs = integrate_trajectories(&trace, &[1.0, 2.0], Units::default(), TrajectoryOptions::default()).unwrap();
        for tr in &trs {
            assert!(tr.stop.is_none());
            for &(t, x) in &tr.samples {
                assert!((x - (tr.seed + 2.0 * t)).abs() < 1e-9);
            }
        }
        assert!(ordering_preserved(&trs));
    }

    #[test]
    fn seeds_are_validated() {
        let g = Grid1D::symmetric(10.0, 128).unwrap();
        let psi = packet(&g, 0.5, 0.0, 0.0);
        let trace = evolve_trace(&psi, &PotentialSpec::free(), 1e-3, 20, 10).unwrap();
        let opts = TrajectoryOptions::default();
        assert!(matches!(
            integrate_trajectories(&trace, &[9.9], Units::default(), opts),
            Err(Error::OutOfDomain { .. })
        ));
        // |psi|^2 ~ exp(-2 x^2 / 0.5) underflows the floor at x = 6.
        assert!(matches!(
            integrate_trajectories(&trace, &[6.0], Units::default(), opts),
            Err(Error::MaskedPoint { .. })
        ));
    }

    #[test]
    fn ordering_detects_a_swap() {
        let mk = |seed: f64, xs: &[f64]| Trajectory {
            seed,
            samples: xs.iter().enumerate().map(|(k, &x)| (k as f64, x)).collect(),
            dt: 1.0,
            stop: None,
        };
        assert!(ordering_preserved(&[mk(0.0, &[0.0, 1.0]), mk(1.0, &[1.0, 2.0])]));
        assert!(!ordering_preserved(&[mk(0.0, &[0.0, 3.0]), mk(1.0, &[1.0, 2.0])]));
    }
}
