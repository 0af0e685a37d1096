//! Complex and real fields sampled on a [`Grid1D`].

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{check_finite_complex, check_finite_real, Grid1D};

/// Complex amplitudes `psi(x_j, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    grid: Grid1D,
    values: Vec<Complex64>,
    t: f64,
}

impl WaveField {
    pub fn new(grid: Grid1D, values: Vec<Complex64>, t: f64) -> Result<Self> {
        grid.check_len(values.len())?;
        check_finite_complex(&values, "wave field")?;
        Ok(WaveField { grid, values, t })
    }

    pub fn from_fn(grid: &Grid1D, t: f64, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = grid.points().into_iter().map(f).collect();
        Self::new(grid.clone(), values, t)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub(crate) fn from_parts(grid: Grid1D, values: Vec<Complex64>, t: f64) -> Self {
        WaveField { grid, values, t }
    }

    /// `sum |psi_j|^2 dx`.
    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm_sq();
        if !(n > 0.0) {
            return Err(Error::InvalidParameter {
                name: "psi",
                reason: "cannot normalize a zero field".into(),
            });
        }
        let s = 1.0 / n.sqrt();
        self.values.iter_mut().for_each(|v| *v *= s);
        Ok(self)
    }

    pub fn density(&self) -> RealField {
        RealField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.norm_sqr()).collect(),
            t: self.t,
            mask: None,
        }
    }

    pub fn derivative(&self, order: u32) -> Result<WaveField> {
        Ok(WaveField {
            grid: self.grid.clone(),
            values: self.grid.derivative(&self.values, order)?,
            t: self.t,
        })
    }

    /// Spectral `<psi| P |psi>` with `P = -i hbar d/dx`, for a normalized field.
    pub fn momentum_expectation(&self, hbar: f64) -> f64 {
        let n = self.grid.len();
        let mut buf = self.values.clone();
        self.grid.fft(&mut buf);
        let s: f64 = buf
            .iter()
            .enumerate()
            .map(|(j, c)| self.grid.odd_wavenumber(j) * c.norm_sqr())
            .sum();
        hbar * s * self.grid.dx() / n as f64
    }

    /// `<x>` for a normalized field.
    pub fn position_expectation(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(j, v)| self.grid.x(j) * v.norm_sqr())
            .sum::<f64>()
            * self.grid.dx()
    }

    /// Standard deviation of position for a normalized field.
    pub fn position_spread(&self) -> f64 {
        let mean = self.position_expectation();
        (self
            .values
            .iter()
            .enumerate()
            .map(|(j, v)| (self.grid.x(j) - mean).powi(2) * v.norm_sqr())
            .sum::<f64>()
            * self.grid.dx())
        .sqrt()
    }

    /// Fidelity `|<a|b>|^2` between two normalized fields on the same grid.
    pub fn fidelity(&self, other: &WaveField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("fidelity of fields on different grids".into()));
        }
        let overlap: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.grid.dx();
        Ok(overlap.norm_sqr())
    }
}

/// Real samples with an optional validity mask (`true` = defined). Masked
/// entries hold `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: Grid1D,
    values: Vec<f64>,
    t: f64,
    mask: Option<Vec<bool>>,
}

impl RealField {
    pub fn new(grid: Grid1D, values: Vec<f64>, t: f64) -> Result<Self> {
        grid.check_len(values.len())?;
        check_finite_real(&values, "real field")?;
        Ok(RealField {
            grid,
            values,
            t,
            mask: None,
        })
    }

    /// Field defined only where `mask[j]`; other entries are set to `NaN`.
    pub fn masked(grid: Grid1D, mut values: Vec<f64>, t: f64, mask: Vec<bool>) -> Result<Self> {
        grid.check_len(values.len())?;
        grid.check_len(mask.len())?;
        for (j, (v, &ok)) in values.iter_mut().zip(&mask).enumerate() {
            if ok {
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        what: "real field",
                        index: j,
                    });
                }
            } else {
                *v = f64::NAN;
            }
        }
        Ok(RealField {
            grid,
            values,
            t,
            mask: Some(mask),
        })
    }

    pub fn from_fn(grid: &Grid1D, t: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.points().into_iter().map(f).collect();
        Self::new(grid.clone(), values, t)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    pub fn is_valid(&self, j: usize) -> bool {
        self.mask.as_ref().is_none_or(|m| m[j])
    }

    /// Value at `j`, `None` when masked.
    pub fn get(&self, j: usize) -> Option<f64> {
        self.is_valid(j).then(|| self.values[j])
    }

    pub fn valid_count(&self) -> usize {
        (0..self.values.len()).filter(|&j| self.is_valid(j)).count()
    }

    /// Spectral derivative; rejects masked fields (their `NaN` entries).
    pub fn derivative(&self, order: u32) -> Result<RealField> {
        Ok(RealField {
            grid: self.grid.clone(),
            values: self.grid.derivative_real(&self.values, order)?,
            t: self.t,
            mask: None,
        })
    }

    /// Pointwise map over defined entries, keeping the mask.
    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> RealField {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                if self.is_valid(j) {
                    f(self.grid.x(j), v)
                } else {
                    f64::NAN
                }
            })
            .collect();
        RealField {
            grid: self.grid.clone(),
            values,
            t: self.t,
            mask: self.mask.clone(),
        }
    }

    /// Largest absolute pointwise difference over points defined in both.
    pub fn max_abs_diff(&self, other: &RealField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("comparing fields on different grids".into()));
        }
        Ok((0..self.values.len())
            .filter(|&j| self.is_valid(j) && other.is_valid(j))
            .map(|j| (self.values[j] - other.values[j]).abs())
            .fold(0.0, f64::max))
    }
}

/// A field kind that supports spectral differentiation.
pub trait SpectralField: Sized {
    fn spectral_derivative(&self, order: u32) -> Result<Self>;
}

impl SpectralField for WaveField {
    fn spectral_derivative(&self, order: u32) -> Result<Self> {
        self.derivative(order)
    }
}

impl SpectralField for RealField {
    fn spectral_derivative(&self, order: u32) -> Result<Self> {
        self.derivative(order)
    }
}

/// The `order`-th derivative (1 or 2) via the discrete Fourier transform.
pub fn spectral_derivative<F: SpectralField>(field: &F, order: u32) -> Result<F> {
    field.spectral_derivative(order)
}

/// `sum f_j dx` over the defined points of `f`.
pub fn integrate(f: &RealField) -> Result<f64> {
    let mut total = 0.0;
    for (j, &v) in f.values.iter().enumerate() {
        if !f.is_valid(j) {
            continue;
        }
        if !v.is_finite() {
            return Err(Error::NonFinite {
                what: "integrand",
                index: j,
            });
        }
        total += v;
    }
    Ok(total * f.grid.dx())
}
