//! Generating functions, Green's functions and time-sliced kernel composition.
//!
//! The analytic kernels are the 1D free-particle and harmonic-oscillator
//! propagators. [`compose_sliced`] builds a propagator from short-time
//! kernels `sqrt(m / 2πiħε) exp(i[S_ε - εV(mid)]/ħ)` chained by quadrature
//! over every intermediate point.
//!
//! The chained integrals are oscillatory and do not decay, so truncating them
//! to a finite real interval leaves an edge error that shrinks only like
//! `1/L`. For potentials that continue analytically into the complex plane the
//! intermediate integrals are instead taken along a contour through the two
//! endpoints, rotated by an angle `θ`: `q_i = x + (x' - x) i/N + e^{iθ} s_i`.
//! The integrand is entire, so the value is unchanged while the integrand now
//! decays like a Gaussian in every `s_i`. [`Contour::Real`] keeps the plain
//! real-axis matrix chain for tabulated data.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::WaveField;
use crate::grid::Grid1D;
use crate::par;
use crate::solver::{PotentialSpec, Units};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Relative size of `sin(ω Δt)` below which the oscillator kernels refuse to
/// evaluate.
pub const CAUSTIC_TOLERANCE: f64 = 1e-12;

fn check_interval(t_to: f64, t_from: f64) -> Result<f64> {
    let dt = t_to - t_from;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::NonPositiveInterval(dt));
    }
    Ok(dt)
}

/// `S_ε(q', q) = m (q' - q)^2 / 2ε`.
pub fn short_time_action(q_to: f64, q_from: f64, eps: f64, mass: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::NonPositiveStep(eps));
    }
    Ok(mass * (q_to - q_from).powi(2) / (2.0 * eps))
}

/// Free-particle generating function `m (r' - r)^2 / 2(t' - t)`.
pub fn free_action_w(r_to: f64, r_from: f64, t_to: f64, t_from: f64, mass: f64) -> Result<f64> {
    let dt = check_interval(t_to, t_from)?;
    Ok(mass * (r_to - r_from).powi(2) / (2.0 * dt))
}

fn free_prefactor(dt: f64, units: Units) -> Complex64 {
    (Complex64::new(units.mass / (2.0 * PI * units.hbar * dt), 0.0) / I).sqrt()
}

/// `(m / 2πiħ(t' - t))^{1/2} exp(iW/ħ)`, principal square root.
pub fn free_kernel_g(r_to: f64, r_from: f64, t_to: f64, t_from: f64, units: Units) -> Result<Complex64> {
    let dt = check_interval(t_to, t_from)?;
    let w = free_action_w(r_to, r_from, t_to, t_from, units.mass)?;
    Ok(free_prefactor(dt, units) * Complex64::from_polar(1.0, w / units.hbar))
}

/// Free kernel continued to complex endpoints.
pub fn free_kernel_complex(q_to: Complex64, q_from: Complex64, dt: f64, units: Units) -> Result<Complex64> {
    if !(dt > 0.0) {
        return Err(Error::NonPositiveInterval(dt));
    }
    let w = units.mass * (q_to - q_from).powi(2) / (2.0 * dt);
    Ok(free_prefactor(dt, units) * (I * w / units.hbar).exp())
}

fn ho_sin(dt: f64, omega: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::InvalidParameter {
            name: "omega",
            reason: format!("must be positive, got {omega}"),
        });
    }
    let phase = omega * dt;
    let s = phase.sin();
    if s.abs() < CAUSTIC_TOLERANCE * phase.max(1.0) {
        return Err(Error::Caustic { phase, sin: s });
    }
    Ok(s)
}

/// Oscillator generating function
/// `(mω / 2 sin ωΔt) ((x'^2 + x^2) cos ωΔt - 2x'x)`.
pub fn ho_action_w(x_to: f64, x_from: f64, t_to: f64, t_from: f64, mass: f64, omega: f64) -> Result<f64> {
    let dt = check_interval(t_to, t_from)?;
    let s = ho_sin(dt, omega)?;
    let c = (omega * dt).cos();
    Ok(mass * omega / (2.0 * s) * ((x_to * x_to + x_from * x_from) * c - 2.0 * x_to * x_from))
}

/// `sqrt(mω / 2πiħ sin ωΔt) exp(iW/ħ)` on the principal branch. Past the first
/// caustic no Maslov phase is added.
pub fn ho_kernel_g(
    x_to: f64,
    x_from: f64,
    t_to: f64,
    t_from: f64,
    units: Units,
    omega: f64,
) -> Result<Complex64> {
    let dt = check_interval(t_to, t_from)?;
    let s = ho_sin(dt, omega)?;
    let w = ho_action_w(x_to, x_from, t_to, t_from, units.mass, omega)?;
    let pref = (Complex64::new(units.mass * omega / (2.0 * PI * units.hbar * s), 0.0) / I).sqrt();
    Ok(pref * Complex64::from_polar(1.0, w / units.hbar))
}

/// One-sided momenta around the midpoint `Q` of a short hop `q -> Q -> q'`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumSpray {
    /// `m (Q - q) / ε`
    pub backward: f64,
    /// `m (q' - Q) / ε`
    pub forward: f64,
    pub mean: f64,
}

pub fn momentum_spray(q: f64, q_next: f64, mid: f64, eps: f64, mass: f64) -> Result<MomentumSpray> {
    if !(eps > 0.0) {
        return Err(Error::NonPositiveStep(eps));
    }
    let backward = mass * (mid - q) / eps;
    let forward = mass * (q_next - mid) / eps;
    Ok(MomentumSpray {
        backward,
        forward,
        mean: 0.5 * (backward + forward),
    })
}

/// Integration path for the intermediate points of a sliced composition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Contour {
    /// Rotated contour for analytic potentials, real axis otherwise.
    Auto,
    /// Real-axis quadrature on the kernel's own grid.
    Real,
    /// Straight line between the endpoints plus `e^{iθ} s`, with `s` sampled at
    /// `points` nodes on `[-half_width, half_width]`.
    Rotated {
        angle: f64,
        half_width: f64,
        points: usize,
    },
}

impl Contour {
    /// Rotation by π/4 with a fluctuation grid of spacing `0.5 sqrt(ħε/m)`
    /// spanning `±4 sqrt(ħT/m)`.
    pub fn rotated_default(units: Units, total_time: f64, n_slices: usize) -> Contour {
        let eps = total_time / n_slices as f64;
        let ds = 0.5 * (units.hbar * eps / units.mass).sqrt();
        let half_width = 4.0 * (units.hbar * total_time / units.mass).sqrt();
        let half_points = (half_width / ds).ceil() as usize;
        Contour::Rotated {
            angle: FRAC_PI_4,
            half_width,
            points: 2 * half_points + 1,
        }
    }
}

/// Number of slices and the interval they cover.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceScheme {
    pub n_slices: usize,
    pub t_from: f64,
    pub t_to: f64,
    pub contour: Contour,
}

impl SliceScheme {
    pub fn new(n_slices: usize, t_from: f64, t_to: f64) -> Result<Self> {
        if n_slices == 0 {
            return Err(Error::InvalidParameter {
                name: "n_slices",
                reason: "need at least one slice".into(),
            });
        }
        check_interval(t_to, t_from)?;
        Ok(SliceScheme {
            n_slices,
            t_from,
            t_to,
            contour: Contour::Auto,
        })
    }

    pub fn with_contour(mut self, contour: Contour) -> Self {
        self.contour = contour;
        self
    }

    pub fn epsilon(&self) -> f64 {
        (self.t_to - self.t_from) / self.n_slices as f64
    }
}

/// How a composed kernel was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompositionReport {
    pub contour: Contour,
    /// `ε max|V| / ħ` over the grid.
    pub slice_phase_ratio: f64,
}

impl CompositionReport {
    /// Short-time validity heuristic `ε E_max / ħ < 0.5`.
    pub fn slices_short_enough(&self) -> bool {
        self.slice_phase_ratio < 0.5
    }
}

/// Propagator samples `G(x_i, x_j; t_to, t_from)`, row `i` = destination.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    grid: Grid1D,
    t_from: f64,
    t_to: f64,
    entries: Vec<Complex64>,
    report: Option<CompositionReport>,
}

impl KernelMatrix {
    pub fn from_fn<F>(grid: &Grid1D, t_from: f64, t_to: f64, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> Result<Complex64> + Sync + Send,
    {
        check_interval(t_to, t_from)?;
        let n = grid.len();
        let rows = par::map_range(n, |i| -> Result<Vec<Complex64>> {
            (0..n).map(|j| f(grid.x(i), grid.x(j))).collect()
        });
        let mut entries = Vec::with_capacity(n * n);
        for r in rows {
            entries.extend(r?);
        }
        Ok(KernelMatrix {
            grid: grid.clone(),
            t_from,
            t_to,
            entries,
            report: None,
        })
    }

    /// Analytic free-particle kernel on `grid`.
    pub fn free(grid: &Grid1D, t_from: f64, t_to: f64, units: Units) -> Result<Self> {
        Self::from_fn(grid, t_from, t_to, |a, b| free_kernel_g(a, b, t_to, t_from, units))
    }

    /// Analytic oscillator kernel on `grid`.
    pub fn harmonic(grid: &Grid1D, t_from: f64, t_to: f64, units: Units, omega: f64) -> Result<Self> {
        Self::from_fn(grid, t_from, t_to, |a, b| ho_kernel_g(a, b, t_to, t_from, units, omega))
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn t_from(&self) -> f64 {
        self.t_from
    }

    pub fn t_to(&self) -> f64 {
        self.t_to
    }

    pub fn report(&self) -> Option<&CompositionReport> {
        self.report.as_ref()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.grid.len() + j]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// `psi'(x_i) = sum_j G(x_i, x_j) psi(x_j) dx`.
    pub fn apply(&self, psi: &WaveField) -> Result<WaveField> {
        if psi.grid() != &self.grid {
            return Err(Error::GridMismatch("kernel and field grids differ".into()));
        }
        let n = self.grid.len();
        let dx = self.grid.dx();
        let src = psi.values();
        let out = par::map_range(n, |i| {
            let row = &self.entries[i * n..(i + 1) * n];
            row.iter().zip(src).map(|(g, p)| g * p).sum::<Complex64>() * dx
        });
        WaveField::new(self.grid.clone(), out, psi.t() + (self.t_to - self.t_from))
    }

    /// `| ||G psi||^2 - ||psi||^2 |`, the quadrature unitarity defect.
    pub fn norm_defect(&self, psi: &WaveField) -> Result<f64> {
        Ok((self.apply(psi)?.norm_sq() - psi.norm_sq()).abs())
    }

    /// Largest `|G - G_ref| / |G_ref|` over pairs with `region(x_i, x_j)`.
    pub fn max_relative_error<F>(&self, reference: &KernelMatrix, region: F) -> Result<f64>
    where
        F: Fn(f64, f64) -> bool,
    {
        if self.grid != reference.grid {
            return Err(Error::GridMismatch("kernels on different grids".into()));
        }
        let n = self.grid.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                if region(self.grid.x(i), self.grid.x(j)) {
                    let r = reference.get(i, j);
                    worst = worst.max((self.get(i, j) - r).norm() / r.norm());
                }
            }
        }
        Ok(worst)
    }
}

/// Short-time kernel between (possibly complex) points.
struct SliceKernel {
    pref: Complex64,
    kinetic: f64,
    eps: f64,
    hbar: f64,
}

impl SliceKernel {
    fn new(eps: f64, units: Units) -> Self {
        SliceKernel {
            pref: free_prefactor(eps, units),
            kinetic: units.mass / (2.0 * eps),
            eps,
            hbar: units.hbar,
        }
    }

    fn eval(&self, q_to: Complex64, q_from: Complex64, v_mid: Complex64) -> Complex64 {
        let d = q_to - q_from;
        self.pref * (I * (self.kinetic * d * d - self.eps * v_mid) / self.hbar).exp()
    }
}

/// Composes `scheme.n_slices` short-time kernels into a propagator on `grid`.
pub fn compose_sliced(potential: &PotentialSpec, scheme: &SliceScheme, grid: &Grid1D) -> Result<KernelMatrix> {
    potential.validate()?;
    if scheme.n_slices == 0 {
        return Err(Error::InvalidParameter {
            name: "n_slices",
            reason: "need at least one slice".into(),
        });
    }
    let total = check_interval(scheme.t_to, scheme.t_from)?;
    let units = potential.units;
    let analytic = potential.analytic_value(Complex64::new(0.0, 0.0)).is_some();
    let contour = match scheme.contour {
        Contour::Auto if analytic => Contour::rotated_default(units, total, scheme.n_slices),
        Contour::Auto => Contour::Real,
        Contour::Rotated { .. } if !analytic => {
            return Err(Error::InvalidParameter {
                name: "contour",
                reason: "a rotated contour needs a potential with an analytic continuation".into(),
            })
        }
        c => c,
    };
    let v_grid = potential.values_on(grid)?;
    let eps = scheme.epsilon();
    let report = CompositionReport {
        contour,
        slice_phase_ratio: eps * v_grid.iter().fold(0.0f64, |m, v| m.max(v.abs())) / units.hbar,
    };
    let mut kernel = match contour {
        Contour::Rotated {
            angle,
            half_width,
            points,
        } => compose_rotated(potential, scheme, grid, angle, half_width, points)?,
        _ => compose_real(potential, scheme, grid, &v_grid)?,
    };
    kernel.report = Some(report);
    Ok(kernel)
}

fn midpoint_potential_real(potential: &PotentialSpec, grid: &Grid1D, v_grid: &[f64], i: usize, j: usize) -> f64 {
    match potential.analytic_value(Complex64::new(0.0, 0.0)) {
        Some(_) => {
            let mid = 0.5 * (grid.x(i) + grid.x(j));
            potential
                .analytic_value(Complex64::new(mid, 0.0))
                .map_or(0.0, |v| v.re)
        }
        // Midpoint of two grid nodes: exact node when i + j is even, otherwise
        // the average of the two bracketing nodes.
        None => {
            let s = i + j;
            if s.is_multiple_of(2) {
                v_grid[s / 2]
            } else {
                0.5 * (v_grid[s / 2] + v_grid[s / 2 + 1])
            }
        }
    }
}

fn compose_real(potential: &PotentialSpec, scheme: &SliceScheme, grid: &Grid1D, v_grid: &[f64]) -> Result<KernelMatrix> {
    let n = grid.len();
    let eps = scheme.epsilon();
    let k = SliceKernel::new(eps, potential.units);
    let one = KernelMatrix::from_fn(grid, scheme.t_from, scheme.t_to, |_, _| Ok(Complex64::new(0.0, 0.0)))?;
    let mut slice = one.entries.clone();
    par::for_each_chunk_mut(&mut slice, n, |i, row| {
        for (j, e) in row.iter_mut().enumerate() {
            let v = midpoint_potential_real(potential, grid, v_grid, i, j);
            *e = k.eval(
                Complex64::new(grid.x(i), 0.0),
                Complex64::new(grid.x(j), 0.0),
                Complex64::new(v, 0.0),
            );
        }
    });
    // G_N = K (dx K)^{N-1}, by binary powering of A = dx K.
    let dx = grid.dx();
    let a: Vec<Complex64> = slice.iter().map(|e| e * dx).collect();
    let mut result = slice;
    let mut base = a;
    let mut e = scheme.n_slices - 1;
    while e > 0 {
        if e & 1 == 1 {
            result = matmul(&result, &base, n);
        }
        e >>= 1;
        if e > 0 {
            base = matmul(&base, &base, n);
        }
    }
    Ok(KernelMatrix {
        grid: grid.clone(),
        t_from: scheme.t_from,
        t_to: scheme.t_to,
        entries: result,
        report: None,
    })
}

fn matmul(a: &[Complex64], b: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    par::for_each_chunk_mut(&mut out, n, |i, row| {
        let arow = &a[i * n..(i + 1) * n];
        for (k, aik) in arow.iter().enumerate() {
            let brow = &b[k * n..(k + 1) * n];
            for (o, bkj) in row.iter_mut().zip(brow) {
                *o += aik * bkj;
            }
        }
    });
    out
}

fn compose_rotated(
    potential: &PotentialSpec,
    scheme: &SliceScheme,
    grid: &Grid1D,
    angle: f64,
    half_width: f64,
    points: usize,
) -> Result<KernelMatrix> {
    if points < 3 || !(half_width > 0.0) {
        return Err(Error::InvalidParameter {
            name: "contour",
            reason: format!("need >= 3 points and a positive half width, got {points}, {half_width}"),
        });
    }
    let n = grid.len();
    let n_slices = scheme.n_slices;
    let units = potential.units;
    let k = SliceKernel::new(scheme.epsilon(), units);
    let ds = 2.0 * half_width / (points - 1) as f64;
    let s: Vec<f64> = (0..points).map(|a| -half_width + a as f64 * ds).collect();
    let rot = Complex64::from_polar(1.0, angle);
    let weight = rot * ds;
    let v = |q: Complex64| potential.analytic_value(q).expect("checked analytic");

    let entry = |x_to: f64, x_from: f64| -> Complex64 {
        let xt = Complex64::new(x_to, 0.0);
        let xf = Complex64::new(x_from, 0.0);
        if n_slices == 1 {
            return k.eval(xt, xf, v(0.5 * (xt + xf)));
        }
        let step = (x_to - x_from) / n_slices as f64;
        let line = |i: usize| x_from + step * i as f64;
        let node = |i: usize, a: usize| Complex64::new(line(i), 0.0) + rot * s[a];

        let mut cur: Vec<Complex64> = (0..points)
            .map(|a| {
                let q = node(1, a);
                k.eval(q, xf, v(0.5 * (q + xf))) * weight
            })
            .collect();

        if n_slices > 2 {
            // Kinetic factor depends on a - b only; the midpoint potential on
            // a + b only.
            let lag: Vec<Complex64> = (0..2 * points - 1)
                .map(|d| {
                    let dq = Complex64::new(step, 0.0) + rot * ((d as f64 - (points - 1) as f64) * ds);
                    (I * k.kinetic * dq * dq / k.hbar).exp()
                })
                .collect();
            let mut pot = vec![Complex64::new(0.0, 0.0); 2 * points - 1];
            let mut next = vec![Complex64::new(0.0, 0.0); points];
            let scale = k.pref * weight;
            for i in 1..n_slices - 1 {
                let centre = Complex64::new(0.5 * (line(i) + line(i + 1)), 0.0);
                for (sigma, p) in pot.iter_mut().enumerate() {
                    let mid = centre + rot * (0.5 * (2.0 * s[0] + sigma as f64 * ds));
                    *p = (-I * k.eps * v(mid) / k.hbar).exp();
                }
                for (a, out) in next.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (b, c) in cur.iter().enumerate() {
                        acc += lag[a + points - 1 - b] * pot[a + b] * c;
                    }
                    *out = acc * scale;
                }
                std::mem::swap(&mut cur, &mut next);
            }
        }

        cur.iter()
            .enumerate()
            .map(|(b, c)| {
                let q = node(n_slices - 1, b);
                k.eval(xt, q, v(0.5 * (xt + q))) * c
            })
            .sum()
    };

    let entries = par::map_range(n * n, |idx| entry(grid.x(idx / n), grid.x(idx % n)));
    Ok(KernelMatrix {
        grid: grid.clone(),
        t_from: scheme.t_from,
        t_to: scheme.t_to,
        entries,
        report: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn short_time_action_values() {
        assert_eq!(short_time_action(1.0, 0.0, 1.0, 1.0).unwrap(), 0.5);
        assert_eq!(short_time_action(0.3, 0.3, 0.1, 2.0).unwrap(), 0.0);
        assert_eq!(short_time_action(2.0, 0.0, 0.5, 2.0).unwrap(), 8.0);
        assert_eq!(short_time_action(1.0, 0.0, 0.0, 1.0), Err(Error::NonPositiveStep(0.0)));
    }

    #[test]
    fn free_action_values() {
        assert_eq!(free_action_w(1.0, 0.0, 1.0, 0.0, 1.0).unwrap(), 0.5);
        assert_eq!(free_action_w(2.0, 2.0, 3.0, 1.0, 1.0).unwrap(), 0.0);
        assert_eq!(
            free_action_w(2.0, 0.0, 1.5, 1.0, 2.0).unwrap(),
            short_time_action(2.0, 0.0, 0.5, 2.0).unwrap()
        );
        assert!(free_action_w(1.0, 0.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn free_kernel_modulus_and_phase() {
        let u = Units::default();
        for (a, b) in [(0.0, 0.0), (1.0, -2.0), (3.5, 0.2)] {
            let g = free_kernel_g(a, b, 1.0, 0.0, u).unwrap();
            assert_relative_eq!(g.norm(), 1.0 / (2.0 * PI).sqrt(), max_relative = 1e-14);
        }
        let g = free_kernel_g(0.7, 0.7, 2.0, 0.0, u).unwrap();
        // exp(iW/ħ) = 1 at r' = r, leaving the prefactor's -π/4.
        assert_relative_eq!(g.arg(), -FRAC_PI_4, epsilon = 1e-15);
        assert!(free_kernel_g(0.0, 0.0, 0.0, 0.0, u).is_err());
    }

    #[test]
    fn ho_action_values() {
        assert_eq!(ho_action_w(0.0, 0.0, 1.0, 0.0, 1.0, 1.0).unwrap(), 0.0);
        let w = ho_action_w(1.0, 0.0, PI / 2.0, 0.0, 1.0, 1.0).unwrap();
        assert!(w.abs() < 1e-16);
        let caustic = ho_action_w(1.0, 0.5, PI, 0.0, 1.0, 1.0).unwrap_err();
        assert!(matches!(caustic, Error::Caustic { .. }));
        assert!(matches!(
            ho_kernel_g(1.0, 0.5, 2.0 * PI, 0.0, Units::default(), 1.0),
            Err(Error::Caustic { .. })
        ));
    }

    #[test]
    fn ho_reduces_to_free_as_omega_vanishes() {
        let u = Units::new(1.3, 0.9).unwrap();
        for (a, b, t) in [(1.0, -0.5, 1.0), (2.0, 0.3, 0.4), (-3.0, 1.0, 2.5)] {
            let wf = free_action_w(a, b, t, 0.0, u.mass).unwrap();
            let wh = ho_action_w(a, b, t, 0.0, u.mass, 1e-6).unwrap();
            assert_relative_eq!(wh, wf, max_relative = 1e-6);
            let gf = free_kernel_g(a, b, t, 0.0, u).unwrap();
            let gh = ho_kernel_g(a, b, t, 0.0, u, 1e-6).unwrap();
            assert!((gh - gf).norm() / gf.norm() < 1e-6);
        }
    }

    #[test]
    fn ho_kernel_modulus_at_quarter_period() {
        let g = ho_kernel_g(0.4, -1.1, PI / 2.0, 0.0, Units::default(), 1.0).unwrap();
        assert_relative_eq!(g.norm(), (1.0 / (2.0 * PI)).sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn generating_function_momenta() {
        // p' = dW/dq', p = -dW/dq, both m(q'-q)/(t'-t).
        let h = 1e-5;
        let (m, t) = (1.7, 0.8);
        for (qt, qf) in [(1.0, 0.0), (-2.0, 0.5), (3.3, 3.0)] {
            let w = |a: f64, b: f64| free_action_w(a, b, t, 0.0, m).unwrap();
            let expect = m * (qt - qf) / t;
            let dq_to = (w(qt + h, qf) - w(qt - h, qf)) / (2.0 * h);
            let dq_from = (w(qt, qf + h) - w(qt, qf - h)) / (2.0 * h);
            assert!((dq_to - expect).abs() < 1e-8);
            assert!((-dq_from - expect).abs() < 1e-8);
        }
    }

    #[test]
    fn ho_action_solves_hamilton_jacobi() {
        let (m, omega) = (1.2, 0.9);
        let h = 1e-5;
        for (xt, xf, t) in [(1.0, 0.5, 1.0), (-0.7, 2.0, 0.6), (2.2, -1.0, 2.0)] {
            let w = |a: f64, tt: f64| ho_action_w(a, xf, tt, 0.0, m, omega).unwrap();
            let wt = (w(xt, t + h) - w(xt, t - h)) / (2.0 * h);
            let wx = (w(xt + h, t) - w(xt - h, t)) / (2.0 * h);
            let r = wt + wx * wx / (2.0 * m) + 0.5 * m * omega * omega * xt * xt;
            assert!(r.abs() < 1e-6, "HJ residual {r:e}");
        }
    }

    #[test]
    fn momentum_spray_values() {
        let s = momentum_spray(0.0, 2.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!((s.backward, s.forward, s.mean), (1.0, 1.0, 1.0));
        let s = momentum_spray(0.0, 3.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!((s.backward, s.forward, s.mean), (1.0, 2.0, 1.5));
        let s = momentum_spray(0.4, 0.4, 0.4, 0.1, 3.0).unwrap();
        assert_eq!((s.backward, s.forward, s.mean), (0.0, 0.0, 0.0));
        assert!(momentum_spray(0.0, 1.0, 0.5, -0.1, 1.0).is_err());
    }

    #[test]
    fn single_slice_is_the_short_time_kernel() {
        let g = Grid1D::symmetric(4.0, 16).unwrap();
        let u = Units::default();
        for contour in [Contour::Auto, Contour::Real] {
            let scheme = SliceScheme::new(1, 0.0, 0.3).unwrap().with_contour(contour);
            let k = compose_sliced(&PotentialSpec::free(), &scheme, &g).unwrap();
            for i in 0..16 {
                for j in 0..16 {
                    let expect = free_kernel_g(g.x(i), g.x(j), 0.3, 0.0, u).unwrap();
                    assert!((k.get(i, j) - expect).norm() < 1e-14 * expect.norm());
                }
            }
        }
    }

    #[test]
    fn semigroup_on_rotated_contour() {
        // ∫ G(x'', x'; 1.0, 0.4) G(x', x; 0.4, 0) dx' over x' = line + e^{iπ/4}s.
        let u = Units::default();
        let rot = Complex64::from_polar(1.0, FRAC_PI_4);
        let ds = 0.01;
        for (xt, xf) in [(2.0, -1.0), (-3.0, 4.0), (0.5, 0.5)] {
            let mid = xf + (xt - xf) * 0.4;
            let integral: Complex64 = (-800..=800)
                .map(|a| {
                    let q = Complex64::new(mid, 0.0) + rot * (a as f64 * ds);
                    free_kernel_complex(Complex64::new(xt, 0.0), q, 0.6, u).unwrap()
                        * free_kernel_complex(q, Complex64::new(xf, 0.0), 0.4, u).unwrap()
                })
                .sum::<Complex64>()
                * rot
                * ds;
            let direct = free_kernel_g(xt, xf, 1.0, 0.0, u).unwrap();
            assert!((integral - direct).norm() < 1e-4 * direct.norm());
        }
    }

    #[test]
    fn semigroup_applied_to_a_packet() {
        let g = Grid1D::symmetric(16.0, 1024).unwrap();
        let u = Units::default();
        let psi = WaveField::from_fn(&g, 0.0, |x| Complex64::new((-x * x / 2.0).exp(), 0.0))
            .unwrap()
            .normalized()
            .unwrap();
        let k1 = KernelMatrix::free(&g, 0.0, 0.3, u).unwrap();
        let k2 = KernelMatrix::free(&g, 0.3, 0.8, u).unwrap();
        let k12 = KernelMatrix::free(&g, 0.0, 0.8, u).unwrap();
        let two = k2.apply(&k1.apply(&psi).unwrap()).unwrap();
        let one = k12.apply(&psi).unwrap();
        // Past |x| ~ 10 the kernel chirp outruns the grid spacing.
        let worst = (0..g.len())
            .filter(|&i| g.x(i).abs() < 8.0)
            .map(|i| (two.values()[i] - one.values()[i]).norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-4, "{worst:e}");
        assert!(k12.norm_defect(&psi).unwrap() < 1e-6);
    }

    #[test]
    fn rotated_contour_rejects_tabulated_potential() {
        let g = Grid1D::symmetric(4.0, 16).unwrap();
        let pot = PotentialSpec {
            kind: crate::solver::PotentialKind::Tabulated(vec![0.0; 16]),
            units: Units::default(),
        };
        let scheme = SliceScheme::new(4, 0.0, 1.0)
            .unwrap()
            .with_contour(Contour::rotated_default(Units::default(), 1.0, 4));
        assert!(compose_sliced(&pot, &scheme, &g).is_err());
        let auto = compose_sliced(&pot, &SliceScheme::new(4, 0.0, 1.0).unwrap(), &g).unwrap();
        assert_eq!(auto.report().unwrap().contour, Contour::Real);
        assert!(SliceScheme::new(0, 0.0, 1.0).is_err());
        assert!(SliceScheme::new(2, 1.0, 1.0).is_err());
    }

    #[test]
    fn real_contour_matches_rotated_for_a_short_chain() {
        // Two slices over a short interval: the single intermediate integral
        // is well resolved on a fine real grid.
        let g = Grid1D::symmetric(12.0, 1024).unwrap();
        let pot = PotentialSpec::harmonic(0.8);
        let real = compose_sliced(
            &pot,
            &SliceScheme::new(2, 0.0, 0.5).unwrap().with_contour(Contour::Real),
            &g,
        )
        .unwrap();
        let rot = compose_sliced(&pot, &SliceScheme::new(2, 0.0, 0.5).unwrap(), &g).unwrap();
        let mut worst: f64 = 0.0;
        for i in (448..576).step_by(16) {
            for j in (448..576).step_by(16) {
                worst = worst.max((real.get(i, j) - rot.get(i, j)).norm() / rot.get(i, j).norm());
            }
        }
        assert!(worst < 5e-2, "{worst:e}");
    }
}
