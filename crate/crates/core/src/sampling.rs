//! Distribution helpers for grid densities.

use crate::error::{Error, Result};
use crate::field::RealField;

/// CDF of a grid density, read as constant on each cell
/// `[x_j - dx/2, x_j + dx/2)`, and renormalised to unit mass.
#[derive(Debug, Clone)]
pub struct DensityCdf {
    edges: Vec<f64>,
    cumulative: Vec<f64>,
}

impl DensityCdf {
    pub fn new(density: &RealField) -> Result<Self> {
        let grid = density.grid();
        let dx = grid.dx();
        let mut cumulative = Vec::with_capacity(grid.len() + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for (j, v) in density.values().iter().enumerate() {
            let v = if v.is_finite() && *v > 0.0 { *v } else { 0.0 };
            if density.values()[j] < 0.0 {
                return Err(Error::InvalidParameter {
                    name: "density",
                    reason: format!("negative value at index {j}"),
                });
            }
            acc += v * dx;
            cumulative.push(acc);
        }
        if !(acc > 0.0) {
            return Err(Error::NotNormalized { norm: acc });
        }
        for c in &mut cumulative {
            *c /= acc;
        }
        let edges = (0..=grid.len()).map(|j| grid.x_min() + (j as f64 - 0.5) * dx).collect();
        Ok(DensityCdf { edges, cumulative })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let e = &self.edges;
        if x <= e[0] {
            return 0.0;
        }
        if x >= e[e.len() - 1] {
            return 1.0;
        }
        let dx = e[1] - e[0];
        let j = (((x - e[0]) / dx).floor() as usize).min(e.len() - 2);
        let f = (x - e[j]) / dx;
        self.cumulative[j] + f * (self.cumulative[j + 1] - self.cumulative[j])
    }

    /// Inverse CDF, `u` in `[0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        let c = &self.cumulative;
        let u = u.clamp(0.0, 1.0);
        // First cell whose upper cumulative value reaches u.
        let j = c.partition_point(|&v| v < u).clamp(1, c.len() - 1) - 1;
        let width = c[j + 1] - c[j];
        let f = if width > 0.0 { (u - c[j]) / width } else { 0.0 };
        self.edges[j] + f * (self.edges[j + 1] - self.edges[j])
    }
}

/// Kolmogorov–Smirnov distance between `samples` and `cdf`.
pub fn ks_distance(samples: &[f64], cdf: &DensityCdf) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InsufficientSamples { count: 0, needed: 1 });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf.cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max))
}
