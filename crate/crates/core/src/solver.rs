//! Split-step Schrödinger evolution and the polar (R, S) decomposition.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{RealField, WaveField};
use crate::grid::Grid1D;
use crate::par;

/// Density below which a point counts as a node.
pub const DEFAULT_RHO_FLOOR: f64 = 1e-12;

/// Mass and reduced Planck constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Units {
    pub mass: f64,
    pub hbar: f64,
}

impl Default for Units {
    fn default() -> Self {
        Units {
            mass: 1.0,
            hbar: 1.0,
        }
    }
}

impl Units {
    pub fn new(mass: f64, hbar: f64) -> Result<Self> {
        let u = Units { mass, hbar };
        u.validate()?;
        Ok(u)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "mass",
                reason: format!("must be positive, got {}", self.mass),
            });
        }
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "hbar",
                reason: format!("must be positive, got {}", self.hbar),
            });
        }
        Ok(())
    }
}

/// A screen that is opaque except for two openings centred at
/// `±separation / 2`, with `tanh` edges of length `edge`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlitGeometry {
    pub separation: f64,
    pub width: f64,
    pub height: f64,
    pub edge: f64,
}

impl SlitGeometry {
    fn opening(&self, x: f64) -> f64 {
        let window = |c: f64| {
            let a = c - self.width / 2.0;
            let b = c + self.width / 2.0;
            0.5 * (((x - a) / self.edge).tanh() - ((x - b) / self.edge).tanh())
        };
        window(-self.separation / 2.0) + window(self.separation / 2.0)
    }

    pub fn value(&self, x: f64) -> f64 {
        self.height * (1.0 - self.opening(x)).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialKind {
    Free,
    Harmonic { omega: f64 },
    BarrierSlits(SlitGeometry),
    Tabulated(Vec<f64>),
}

/// Static potential `V(x)` together with the units it is used with.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub units: Units,
}

impl PotentialSpec {
    pub fn free() -> Self {
        PotentialSpec {
            kind: PotentialKind::Free,
            units: Units::default(),
        }
    }

    pub fn harmonic(omega: f64) -> Self {
        PotentialSpec {
            kind: PotentialKind::Harmonic { omega },
            units: Units::default(),
        }
    }

    pub fn with_units(mut self, units: Units) -> Self {
        self.units = units;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.units.validate()?;
        match &self.kind {
            PotentialKind::Free => Ok(()),
            PotentialKind::Harmonic { omega } => {
                if *omega > 0.0 && omega.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter {
                        name: "omega",
                        reason: format!("must be positive, got {omega}"),
                    })
                }
            }
            PotentialKind::BarrierSlits(s) => {
                let ok = [s.separation, s.width, s.edge]
                    .iter()
                    .all(|v| *v > 0.0 && v.is_finite())
                    && s.height.is_finite();
                if ok {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter {
                        name: "slits",
                        reason: "separation, width and edge must be positive".into(),
                    })
                }
            }
            PotentialKind::Tabulated(v) => crate::grid::check_finite_real(v, "tabulated potential"),
        }
    }

    /// Potential sampled on `grid`.
    pub fn values_on(&self, grid: &Grid1D) -> Result<Vec<f64>> {
        self.validate()?;
        let m = self.units.mass;
        Ok(match &self.kind {
            PotentialKind::Free => vec![0.0; grid.len()],
            PotentialKind::Harmonic { omega } => grid
                .points()
                .iter()
                .map(|x| 0.5 * m * omega * omega * x * x)
                .collect(),
            PotentialKind::BarrierSlits(s) => grid.points().iter().map(|&x| s.value(x)).collect(),
            PotentialKind::Tabulated(v) => {
                grid.check_len(v.len())?;
                v.clone()
            }
        })
    }

    /// Analytic continuation `V(q)` for complex `q`, when `V` is an entire
    /// function. `None` for screens and tabulated data.
    pub fn analytic_value(&self, q: Complex64) -> Option<Complex64> {
        match &self.kind {
            PotentialKind::Free => Some(Complex64::new(0.0, 0.0)),
            PotentialKind::Harmonic { omega } => Some(0.5 * self.units.mass * omega * omega * q * q),
            _ => None,
        }
    }

    pub fn omega(&self) -> Option<f64> {
        match self.kind {
            PotentialKind::Harmonic { omega } => Some(omega),
            _ => None,
        }
    }
}

/// Precomputed Strang factors for a fixed grid, potential and step.
#[derive(Debug, Clone)]
pub struct SplitStepper {
    grid: Grid1D,
    half_potential: Vec<Complex64>,
    kinetic: Vec<Complex64>,
    dt: f64,
}

impl SplitStepper {
    pub fn new(grid: &Grid1D, potential: &PotentialSpec, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::NonPositiveStep(dt));
        }
        let Units { mass, hbar } = potential.units;
        let v = potential.values_on(grid)?;
        let half_potential = v
            .iter()
            .map(|&vx| Complex64::from_polar(1.0, -vx * dt / (2.0 * hbar)))
            .collect();
        let kinetic = grid
            .wavenumbers()
            .iter()
            .map(|&k| Complex64::from_polar(1.0, -hbar * k * k * dt / (2.0 * mass)))
            .collect();
        Ok(SplitStepper {
            grid: grid.clone(),
            half_potential,
            kinetic,
            dt,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// One step `exp(-iV dt/2ħ) exp(-iT dt/ħ) exp(-iV dt/2ħ)` in place.
    pub fn step(&self, psi: &mut [Complex64]) {
        for (p, h) in psi.iter_mut().zip(&self.half_potential) {
            *p *= h;
        }
        self.grid.fft(psi);
        for (p, k) in psi.iter_mut().zip(&self.kinetic) {
            *p *= k;
        }
        self.grid.ifft(psi);
        for (p, h) in psi.iter_mut().zip(&self.half_potential) {
            *p *= h;
        }
    }

    pub fn advance(&self, psi: &WaveField, steps: usize) -> Result<WaveField> {
        if psi.grid() != &self.grid {
            return Err(Error::GridMismatch("field and stepper grids differ".into()));
        }
        let mut values = psi.values().to_vec();
        for _ in 0..steps {
            self.step(&mut values);
        }
        Ok(WaveField::from_parts(
            self.grid.clone(),
            values,
            psi.t() + steps as f64 * self.dt,
        ))
    }
}

/// Advances `psi` by one Strang split step of length `dt`.
pub fn split_step_evolve(psi: &WaveField, potential: &PotentialSpec, dt: f64) -> Result<WaveField> {
    SplitStepper::new(psi.grid(), potential, dt)?.advance(psi, 1)
}

/// Time-ordered snapshots with uniform spacing `dt`.
#[derive(Debug, Clone)]
pub struct EvolutionTrace {
    snapshots: Vec<WaveField>,
    dt: f64,
}

impl EvolutionTrace {
    pub fn new(snapshots: Vec<WaveField>, dt: f64) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(Error::TraceTooShort { needed: 1, have: 0 });
        }
        if !(dt > 0.0) {
            return Err(Error::NonPositiveStep(dt));
        }
        let grid = snapshots[0].grid();
        for (k, s) in snapshots.iter().enumerate() {
            if s.grid() != grid {
                return Err(Error::GridMismatch(format!("snapshot {k} on a different grid")));
            }
            let expected = snapshots[0].t() + k as f64 * dt;
            if (s.t() - expected).abs() > 1e-9 * dt.max(expected.abs()) {
                return Err(Error::InvalidParameter {
                    name: "snapshots",
                    reason: format!("snapshot {k} at t = {} but expected {expected}", s.t()),
                });
            }
        }
        Ok(EvolutionTrace { snapshots, dt })
    }

    pub fn snapshots(&self) -> &[WaveField] {
        &self.snapshots
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    /// Spacing between stored snapshots.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Grid1D {
        self.snapshots[0].grid()
    }

    pub fn t0(&self) -> f64 {
        self.snapshots[0].t()
    }

    pub fn t_end(&self) -> f64 {
        self.snapshots[self.snapshots.len() - 1].t()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.snapshots[k].t()
    }

    pub fn last(&self) -> &WaveField {
        &self.snapshots[self.snapshots.len() - 1]
    }

    /// Every `factor`-th snapshot, starting with the first.
    pub fn decimated(&self, factor: usize) -> Result<EvolutionTrace> {
        if factor == 0 {
            return Err(Error::InvalidParameter {
                name: "factor",
                reason: "decimation factor must be positive".into(),
            });
        }
        let snapshots = self.snapshots.iter().step_by(factor).cloned().collect();
        EvolutionTrace::new(snapshots, self.dt * factor as f64)
    }

    /// Snapshot index nearest to `t`, if `t` lies on the trace within 1e-9 dt.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let f = (t - self.t0()) / self.dt;
        let k = f.round();
        if k < 0.0 || k as usize >= self.len() || (f - k).abs() > 1e-6 {
            return None;
        }
        Some(k as usize)
    }
}

/// Repeated split steps of size `dt`, keeping every `stride`-th state.
/// `n_steps` must be a multiple of `stride`.
pub fn evolve_trace(
    psi0: &WaveField,
    potential: &PotentialSpec,
    dt: f64,
    n_steps: usize,
    stride: usize,
) -> Result<EvolutionTrace> {
    if stride == 0 || !n_steps.is_multiple_of(stride) {
        return Err(Error::InvalidParameter {
            name: "stride",
            reason: format!("stride {stride} must be positive and divide n_steps {n_steps}"),
        });
    }
    let stepper = SplitStepper::new(psi0.grid(), potential, dt)?;
    let mut values = psi0.values().to_vec();
    let mut snapshots = Vec::with_capacity(n_steps / stride + 1);
    snapshots.push(psi0.clone());
    for i in 1..=n_steps {
        stepper.step(&mut values);
        if i % stride == 0 {
            snapshots.push(WaveField::from_parts(
                psi0.grid().clone(),
                values.clone(),
                psi0.t() + i as f64 * dt,
            ));
        }
    }
    EvolutionTrace::new(snapshots, dt * stride as f64)
}

/// `<H>` with `H = P^2/2m + V`, kinetic part evaluated spectrally.
pub fn energy_expectation(psi: &WaveField, potential: &PotentialSpec) -> Result<f64> {
    let grid = psi.grid();
    let Units { mass, hbar } = potential.units;
    let mut buf = psi.values().to_vec();
    grid.fft(&mut buf);
    let kinetic: f64 = buf
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let k = grid.wavenumber(j);
            hbar * hbar * k * k / (2.0 * mass) * c.norm_sqr()
        })
        .sum::<f64>()
        * grid.dx()
        / grid.len() as f64;
    let v = potential.values_on(grid)?;
    let pot: f64 = psi
        .values()
        .iter()
        .zip(&v)
        .map(|(p, vx)| p.norm_sqr() * vx)
        .sum::<f64>()
        * grid.dx();
    Ok(kinetic + pot)
}

/// Polar form `psi = R exp(iS/ħ)`.
#[derive(Debug, Clone)]
pub struct PolarField {
    /// `R = |psi|`, defined everywhere.
    pub amplitude: RealField,
    /// Unwrapped `S`, masked at nodes.
    pub phase: RealField,
    pub units: Units,
    pub rho_floor: f64,
}

impl PolarField {
    pub fn node_mask(&self) -> &[bool] {
        self.phase.mask().expect("phase always carries a mask")
    }

    /// `R exp(iS/ħ)` at defined points and zero elsewhere.
    pub fn reconstruct(&self) -> WaveField {
        let hbar = self.units.hbar;
        let values = (0..self.amplitude.values().len())
            .map(|j| match self.phase.get(j) {
                Some(s) => Complex64::from_polar(self.amplitude.values()[j], s / hbar),
                None => Complex64::new(0.0, 0.0),
            })
            .collect();
        WaveField::from_parts(self.amplitude.grid().clone(), values, self.amplitude.t())
    }
}

/// Folds a phase difference into `(-pi, pi]`.
pub fn fold_phase(d: f64) -> f64 {
    let r = (d + PI).rem_euclid(2.0 * PI) - PI;
    if r <= -PI {
        PI
    } else {
        r
    }
}

/// Splits `psi` into amplitude and unwrapped phase action.
///
/// Unwrapping starts at the first global maximum of `R`, where `S` takes the
/// principal value `ħ arg psi`, and proceeds outward by folded phase
/// differences between consecutive defined points.
/// Points with `|psi|^2 < rho_floor` are masked and skipped.
pub fn polar_decompose(psi: &WaveField, units: Units, rho_floor: f64) -> Result<PolarField> {
    units.validate()?;
    if !(rho_floor > 0.0) {
        return Err(Error::InvalidParameter {
            name: "rho_floor",
            reason: format!("must be positive, got {rho_floor}"),
        });
    }
    let grid = psi.grid().clone();
    let values = psi.values();
    let n = values.len();
    let r: Vec<f64> = values.iter().map(|v| v.norm()).collect();
    let mask: Vec<bool> = values.iter().map(|v| v.norm_sqr() >= rho_floor).collect();
    if !mask.iter().any(|&m| m) {
        return Err(Error::DegenerateField { floor: rho_floor });
    }
    let anchor = r
        .iter()
        .enumerate()
        .fold(0, |best, (j, &v)| if v > r[best] { j } else { best });
    let arg: Vec<f64> = values.iter().map(|v| v.arg()).collect();

    let mut s = vec![f64::NAN; n];
    s[anchor] = units.hbar * arg[anchor];
    let mut walk = |range: &mut dyn Iterator<Item = usize>| {
        let mut prev = anchor;
        for j in range {
            if !mask[j] {
                continue;
            }
            s[j] = s[prev] + units.hbar * fold_phase(arg[j] - arg[prev]);
            prev = j;
        }
    };
    walk(&mut (anchor + 1..n));
    walk(&mut (0..anchor).rev());

    let t = psi.t();
    Ok(PolarField {
        amplitude: RealField::new(grid.clone(), r, t)?,
        phase: RealField::masked(grid, s, t, mask)?,
        units,
        rho_floor,
    })
}

/// `Q = -(ħ^2 / 2m) R'' / R` at defined points; `R''` is spectral.
pub fn quantum_potential(polar: &PolarField) -> Result<RealField> {
    let Units { mass, hbar } = polar.units;
    let r = polar.amplitude.values();
    let r2 = polar.amplitude.derivative(2)?;
    let q: Vec<f64> = r
        .iter()
        .zip(r2.values())
        .map(|(r, d2)| -hbar * hbar / (2.0 * mass) * d2 / r)
        .collect();
    RealField::masked(
        polar.amplitude.grid().clone(),
        q,
        polar.amplitude.t(),
        polar.node_mask().to_vec(),
    )
}

/// `ħ Im(psi'/psi)` where `|psi|^2 >= rho_floor`; zero elsewhere.
pub(crate) fn weak_momentum(psi: &WaveField, hbar: f64, rho_floor: f64) -> Result<(Vec<f64>, Vec<bool>)> {
    let d = psi.grid().derivative(psi.values(), 1)?;
    let mut mask = Vec::with_capacity(d.len());
    let p = psi
        .values()
        .iter()
        .zip(&d)
        .map(|(v, dv)| {
            let ok = v.norm_sqr() >= rho_floor;
            mask.push(ok);
            if ok {
                hbar * (dv / v).im
            } else {
                0.0
            }
        })
        .collect();
    Ok((p, mask))
}

/// `max_k || d rho/dt + d(rho v)/dx ||_inf` over interior snapshots, with the
/// time derivative by centred differences and the flux divergence spectral.
/// `velocity` maps a snapshot to its velocity field.
pub fn liouville_residual<F>(trace: &EvolutionTrace, velocity: F) -> Result<f64>
where
    F: Fn(&WaveField) -> Result<Vec<f64>> + Sync + Send,
{
    if trace.len() < 3 {
        return Err(Error::TraceTooShort {
            needed: 3,
            have: trace.len(),
        });
    }
    let snaps = trace.snapshots();
    let h = trace.dt();
    let grid = trace.grid();
    let per_step = par::map_range(trace.len() - 2, |i| -> Result<f64> {
        let k = i + 1;
        let rho = snaps[k].density();
        let v = velocity(&snaps[k])?;
        let flux: Vec<f64> = rho.values().iter().zip(&v).map(|(r, v)| r * v).collect();
        let div = grid.derivative_real(&flux, 1)?;
        let prev = snaps[k - 1].values();
        let next = snaps[k + 1].values();
        Ok((0..grid.len())
            .map(|j| {
                let drho = (next[j].norm_sqr() - prev[j].norm_sqr()) / (2.0 * h);
                (drho + div[j]).abs()
            })
            .fold(0.0, f64::max))
    });
    per_step
        .into_iter()
        .try_fold(0.0, |acc, r| r.map(|v| f64::max(acc, v)))
}

/// Continuity-equation residual with `v = (dS/dx) / m`.
pub fn continuity_residual(trace: &EvolutionTrace, units: Units) -> Result<f64> {
    units.validate()?;
    liouville_residual(trace, |psi| bohm_velocity(psi, units))
}

/// `p_B / m`, zero below a vanishing density (where `rho v` vanishes anyway).
pub fn bohm_velocity(psi: &WaveField, units: Units) -> Result<Vec<f64>> {
    let (p, _) = weak_momentum(psi, units.hbar, f64::MIN_POSITIVE)?;
    Ok(p.into_iter().map(|p| p / units.mass).collect())
}

/// Quantum Hamilton-Jacobi residual
/// `dS/dt + (dS/dx)^2 / 2m + Q + V` at points whose density clears
/// `rho_floor` in all three snapshots of the centred stencil.
///
/// `dS/dt` comes from the folded phase difference between neighbouring
/// snapshots, so it does not depend on where each snapshot's phase is anchored.
pub fn qhj_residual(trace: &EvolutionTrace, potential: &PotentialSpec, rho_floor: f64) -> Result<f64> {
    if trace.len() < 3 {
        return Err(Error::TraceTooShort {
            needed: 3,
            have: trace.len(),
        });
    }
    let units = potential.units;
    let snaps = trace.snapshots();
    let h = trace.dt();
    let grid = trace.grid();
    let v = potential.values_on(grid)?;
    let per_step = par::map_range(trace.len() - 2, |i| -> Result<f64> {
        let k = i + 1;
        let polar = polar_decompose(&snaps[k], units, rho_floor)?;
        let q = quantum_potential(&polar)?;
        let (p, mask) = weak_momentum(&snaps[k], units.hbar, rho_floor)?;
        let prev = snaps[k - 1].values();
        let next = snaps[k + 1].values();
        let mut worst: f64 = 0.0;
        for j in 0..grid.len() {
            if !mask[j] || prev[j].norm_sqr() < rho_floor || next[j].norm_sqr() < rho_floor {
                continue;
            }
            let ds_dt = units.hbar * fold_phase((next[j] * prev[j].conj()).arg()) / (2.0 * h);
            let r = ds_dt + p[j] * p[j] / (2.0 * units.mass) + q.values()[j] + v[j];
            worst = worst.max(r.abs());
        }
        Ok(worst)
    });
    per_step
        .into_iter()
        .try_fold(0.0, |acc, r| r.map(|v| f64::max(acc, v)))
}
