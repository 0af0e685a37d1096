//! Uniform periodic 1D grid with FFT-based differentiation.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform periodic lattice `x_j = x_min + j * dx`, `j = 0..n`, with `x_max`
/// identified with `x_min`.
///
/// The FFT plans are built once and shared between clones.
#[derive(Clone)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n: usize,
    dx: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid1D")
            .field("x_min", &self.x_min)
            .field("x_max", &self.x_max)
            .field("n", &self.n)
            .finish()
    }
}

impl PartialEq for Grid1D {
    fn eq(&self, other: &Self) -> bool {
        self.x_min == other.x_min && self.x_max == other.x_max && self.n == other.n
    }
}

impl Grid1D {
    /// Builds a grid; `n` must be a power of two and at least 8.
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidGrid("bounds must be finite".into()));
        }
        if x_max <= x_min {
            return Err(Error::InvalidGrid(format!(
                "x_max ({x_max}) must exceed x_min ({x_min})"
            )));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n must be a power of two >= 8, got {n}"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Grid1D {
            x_min,
            x_max,
            n,
            dx: (x_max - x_min) / n as f64,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    /// Grid on `[-half_width, half_width)`; contains `x = 0` at index `n / 2`.
    pub fn symmetric(half_width: f64, n: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    /// Fractional grid index of `x` (no wrapping).
    pub fn position_index(&self, x: f64) -> f64 {
        (x - self.x_min) / self.dx
    }

    /// Angular wavenumber of FFT bin `j` in standard FFT order. The Nyquist bin
    /// carries `-pi / dx`.
    pub fn wavenumber(&self, j: usize) -> f64 {
        let dk = 2.0 * PI / self.length();
        let m = if j < self.n / 2 {
            j as isize
        } else {
            j as isize - self.n as isize
        };
        m as f64 * dk
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.wavenumber(j)).collect()
    }

    /// Wavenumber used for odd derivatives: the Nyquist bin is zeroed so that
    /// real fields have real odd derivatives.
    pub fn odd_wavenumber(&self, j: usize) -> f64 {
        if j == self.n / 2 {
            0.0
        } else {
            self.wavenumber(j)
        }
    }

    /// In-place unnormalized forward transform.
    pub fn fft(&self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.n);
        self.forward.process(data);
    }

    /// In-place inverse transform including the `1/n` normalization.
    pub fn ifft(&self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.n);
        self.inverse.process(data);
        let scale = 1.0 / self.n as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }

    /// Spectral derivative of complex samples. `order` is 1 or 2.
    pub fn derivative(&self, values: &[Complex64], order: u32) -> Result<Vec<Complex64>> {
        self.check_len(values.len())?;
        check_finite_complex(values, "derivative input")?;
        let mut buf = values.to_vec();
        self.fft(&mut buf);
        match order {
            1 => {
                for (j, v) in buf.iter_mut().enumerate() {
                    *v *= Complex64::new(0.0, self.odd_wavenumber(j));
                }
            }
            2 => {
                for (j, v) in buf.iter_mut().enumerate() {
                    let k = self.wavenumber(j);
                    *v *= -k * k;
                }
            }
            _ => {
                return Err(Error::InvalidParameter {
                    name: "order",
                    reason: format!("derivative order must be 1 or 2, got {order}"),
                })
            }
        }
        self.ifft(&mut buf);
        Ok(buf)
    }

    /// Spectral derivative of real samples.
    pub fn derivative_real(&self, values: &[f64], order: u32) -> Result<Vec<f64>> {
        self.check_len(values.len())?;
        check_finite_real(values, "derivative input")?;
        let cx: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Ok(self.derivative(&cx, order)?.into_iter().map(|v| v.re).collect())
    }

    /// Periodic rectangle rule, `sum f_j dx`.
    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        self.check_len(values.len())?;
        check_finite_real(values, "integrand")?;
        Ok(values.iter().sum::<f64>() * self.dx)
    }

    /// `sum |psi_j|^2 dx` evaluated from the Fourier coefficients.
    pub fn spectral_norm_sq(&self, values: &[Complex64]) -> f64 {
        let mut buf = values.to_vec();
        self.fft(&mut buf);
        buf.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.dx / self.n as f64
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::GridMismatch(format!(
                "expected {} samples, got {len}",
                self.n
            )));
        }
        Ok(())
    }
}

pub(crate) fn check_finite_real(values: &[f64], what: &'static str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { what, index }),
        None => Ok(()),
    }
}

pub(crate) fn check_finite_complex(values: &[Complex64], what: &'static str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { what, index }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid1D::new(0.0, 1.0, 4).is_err());
        assert!(Grid1D::new(0.0, 1.0, 100).is_err());
        assert!(Grid1D::new(1.0, 1.0, 64).is_err());
        assert!(Grid1D::new(0.0, f64::NAN, 64).is_err());
        assert!(Grid1D::new(0.0, 1.0, 64).is_ok());
    }

    #[test]
    fn symmetric_grid_contains_origin() {
        let g = Grid1D::symmetric(10.0, 64).unwrap();
        assert_eq!(g.x(32), 0.0);
        assert_eq!(g.x(0), -10.0);
        assert!((g.x(40) + g.x(24)).abs() < 1e-15);
    }

    #[test]
    fn derivative_of_sine() {
        let l = 7.0;
        let g = Grid1D::new(0.0, l, 64).unwrap();
        let k = 2.0 * PI / l;
        let f: Vec<f64> = g.points().iter().map(|&x| (k * x).sin()).collect();
        let d = g.derivative_real(&f, 1).unwrap();
        for (j, v) in d.iter().enumerate() {
            assert!((v - k * (k * g.x(j)).cos()).abs() < 1e-10);
        }
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        let g = Grid1D::new(-3.0, 5.0, 32).unwrap();
        let d = g.derivative_real(&[2.5; 32], 1).unwrap();
        assert!(d.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn second_derivative_of_gaussian() {
        let g = Grid1D::symmetric(10.0, 256).unwrap();
        let f: Vec<f64> = g.points().iter().map(|&x| (-x * x / 2.0).exp()).collect();
        let d2 = g.derivative_real(&f, 2).unwrap();
        for (j, v) in d2.iter().enumerate() {
            let x = g.x(j);
            assert!((v - (x * x - 1.0) * (-x * x / 2.0).exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_non_finite_and_bad_order() {
        let g = Grid1D::new(0.0, 1.0, 8).unwrap();
        let mut f = vec![0.0; 8];
        f[3] = f64::INFINITY;
        assert_eq!(
            g.derivative_real(&f, 1),
            Err(Error::NonFinite {
                what: "derivative input",
                index: 3
            })
        );
        assert!(g.derivative_real(&[0.0; 8], 3).is_err());
        assert!(g.integrate(&[0.0; 7]).is_err());
    }

    #[test]
    fn integrate_constant_and_symmetric() {
        let g = Grid1D::new(0.0, 2.0 * PI, 64).unwrap();
        assert!((g.integrate(&[1.0; 64]).unwrap() - 2.0 * PI).abs() < 1e-14);

        let g = Grid1D::symmetric(12.0, 256).unwrap();
        let norm = (2.0 * PI).sqrt();
        let rho: Vec<f64> = g
            .points()
            .iter()
            .map(|&x| (-x * x / 2.0).exp() / norm)
            .collect();
        assert!((g.integrate(&rho).unwrap() - 1.0).abs() < 1e-12);
        let xrho: Vec<f64> = g.points().iter().zip(&rho).map(|(x, r)| x * r).collect();
        assert!(g.integrate(&xrho).unwrap().abs() < 1e-12);
    }

    fn smooth_field(g: &Grid1D, a: f64, c: f64, w: f64, k: f64) -> Vec<Complex64> {
        g.points()
            .iter()
            .map(|&x| {
                let env = a * (-(x - c).powi(2) / (2.0 * w * w)).exp();
                Complex64::from_polar(env, k * x)
            })
            .collect()
    }

    proptest! {
        #[test]
        fn parseval(a in 0.1f64..3.0, c in -2.0f64..2.0, w in 0.5f64..2.0, k in -4.0f64..4.0) {
            let g = Grid1D::symmetric(20.0, 256).unwrap();
            let psi = smooth_field(&g, a, c, w, k);
            let direct: f64 = psi.iter().map(|v| v.norm_sqr()).sum::<f64>() * g.dx();
            let spectral = g.spectral_norm_sq(&psi);
            prop_assert!((direct - spectral).abs() <= 1e-12 * direct.max(1.0));
        }

        #[test]
        fn first_derivative_twice_is_second(c in -2.0f64..2.0, w in 0.7f64..2.0, k in -3.0f64..3.0) {
            let g = Grid1D::symmetric(20.0, 256).unwrap();
            let psi = smooth_field(&g, 1.0, c, w, k);
            let d1 = g.derivative(&g.derivative(&psi, 1).unwrap(), 1).unwrap();
            let d2 = g.derivative(&psi, 2).unwrap();
            for (u, v) in d1.iter().zip(&d2) {
                prop_assert!((u - v).norm() < 1e-9);
            }
        }

        #[test]
        fn integrate_is_linear(a in -5.0f64..5.0, b in -5.0f64..5.0, c in -2.0f64..2.0) {
            let g = Grid1D::symmetric(10.0, 128).unwrap();
            let f: Vec<f64> = g.points().iter().map(|&x| (-(x - c).powi(2)).exp()).collect();
            let h: Vec<f64> = g.points().iter().map(|&x| x.sin() * (-x * x / 4.0).exp()).collect();
            let mix: Vec<f64> = f.iter().zip(&h).map(|(u, v)| a * u + b * v).collect();
            let lhs = g.integrate(&mix).unwrap();
            let rhs = a * g.integrate(&f).unwrap() + b * g.integrate(&h).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
