//! Finite matrix checks: Pauli kets and idempotents, and the position /
//! derivative commutator on the periodic grid.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid1D;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl SmallMatrix {
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::InvalidParameter {
                name: "entries",
                reason: format!("need {} entries for dimension {dim}, got {}", dim * dim, entries.len()),
            });
        }
        crate::grid::check_finite_complex(&entries, "matrix entries")?;
        Ok(SmallMatrix { dim, entries })
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        SmallMatrix {
            dim,
            entries: (0..dim * dim).map(|k| f(k / dim, k % dim)).collect(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { ONE } else { ZERO })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        Self::from_fn(values.len(), |i, j| if i == j { Complex64::new(values[i], 0.0) } else { ZERO })
    }

    /// `k l^†`.
    pub fn outer(k: &[Complex64], l: &[Complex64]) -> Self {
        Self::from_fn(k.len(), |i, j| k[i] * l[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.dim + j]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i).conj())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        SmallMatrix {
            dim: self.dim,
            entries: self.entries.iter().map(|e| e * c).collect(),
        }
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    pub fn max_abs_diff(&self, other: &SmallMatrix) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Mul for &SmallMatrix {
    type Output = SmallMatrix;

    fn mul(self, rhs: &SmallMatrix) -> SmallMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        SmallMatrix::from_fn(self.dim, |i, j| (0..self.dim).map(|k| self.get(i, k) * rhs.get(k, j)).sum())
    }
}

impl Add for &SmallMatrix {
    type Output = SmallMatrix;

    fn add(self, rhs: &SmallMatrix) -> SmallMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        SmallMatrix::from_fn(self.dim, |i, j| self.get(i, j) + rhs.get(i, j))
    }
}

impl Sub for &SmallMatrix {
    type Output = SmallMatrix;

    fn sub(self, rhs: &SmallMatrix) -> SmallMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        SmallMatrix::from_fn(self.dim, |i, j| self.get(i, j) - rhs.get(i, j))
    }
}

/// `[σ1, σ2, σ3]` with σ3 diagonal.
pub fn pauli_basis() -> [SmallMatrix; 3] {
    let i = Complex64::i();
    let m = |e: [Complex64; 4]| SmallMatrix { dim: 2, entries: e.to_vec() };
    [
        m([ZERO, ONE, ONE, ZERO]),
        m([ZERO, -i, i, ZERO]),
        m([ONE, ZERO, ZERO, -ONE]),
    ]
}

fn pauli(direction: usize) -> Result<SmallMatrix> {
    if !(1..=3).contains(&direction) {
        return Err(Error::InvalidParameter {
            name: "direction",
            reason: format!("must be 1, 2 or 3, got {direction}"),
        });
    }
    Ok(pauli_basis()[direction - 1].clone())
}

/// Normalised eigenvector of a 2x2 matrix for eigenvalue `lambda`, with the
/// first nonzero component real and positive.
fn eigenvector_2x2(m: &SmallMatrix, lambda: f64) -> Vec<Complex64> {
    let l = Complex64::new(lambda, 0.0);
    let a = [m.get(0, 1), l - m.get(0, 0)];
    let b = [l - m.get(1, 1), m.get(1, 0)];
    let norm = |v: &[Complex64; 2]| (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    let v = if norm(&a) >= norm(&b) { a } else { b };
    let n = norm(&v);
    let lead = if v[0].norm() > 1e-300 { v[0] } else { v[1] };
    let phase = lead.conj() / lead.norm();
    v.iter().map(|c| c * phase / n).collect()
}

/// `+1` eigenvector of `σ_direction`.
pub fn standard_ket(direction: usize) -> Result<Vec<Complex64>> {
    Ok(eigenvector_2x2(&pauli(direction)?, 1.0))
}

/// `k k^†` for a unit vector `k`.
pub fn idempotent_from_ket(k: &[Complex64]) -> Result<SmallMatrix> {
    let norm: f64 = k.iter().map(|c| c.norm_sqr()).sum();
    if k.is_empty() || (norm - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized { norm });
    }
    Ok(SmallMatrix::outer(k, k))
}

/// Unitary `U` with `U ε_from U^† = ε_to`, built from the eigenbases of the two
/// Pauli matrices.
pub fn conjugating_unitary(from: usize, to: usize) -> Result<SmallMatrix> {
    let (a, b) = (pauli(from)?, pauli(to)?);
    let up = SmallMatrix::outer(&eigenvector_2x2(&b, 1.0), &eigenvector_2x2(&a, 1.0));
    let down = SmallMatrix::outer(&eigenvector_2x2(&b, -1.0), &eigenvector_2x2(&a, -1.0));
    Ok(&up + &down)
}

/// Spectral first-derivative matrix on `n` periodic points over length `L`:
/// `D_jk = (π/L) (-1)^(j-k) cot(π (j-k) / n)`, zero on the diagonal.
pub fn differentiation_matrix(n: usize, length: f64) -> Result<SmallMatrix> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::InvalidGrid(format!("need an even point count, got {n}")));
    }
    if !(length > 0.0) {
        return Err(Error::InvalidGrid(format!("length must be positive, got {length}")));
    }
    Ok(SmallMatrix::from_fn(n, |j, k| {
        if j == k {
            return ZERO;
        }
        let d = j as i64 - k as i64;
        let sign = if d.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        Complex64::new(PI / length * sign / (PI * d as f64 / n as f64).tan(), 0.0)
    }))
}

/// Test functions used by [`heisenberg_commutator_defect`]: Gaussians of
/// width 0.8 centred at `0` and `±L/20`, times a low-order polynomial or a
/// slow oscillation. For `L >= 20` each one is below `1e-25` at the periodic
/// seam, i.e. effectively supported at least `L/8` away from it.
pub fn commutator_battery(grid: &Grid1D) -> Vec<Vec<Complex64>> {
    let mid = 0.5 * (grid.x_min() + grid.x_max());
    let offset = grid.length() / 20.0;
    let mut out = Vec::new();
    for c in [mid - offset, mid, mid + offset] {
        let envelope = |x: f64| (-(x - c).powi(2) / (2.0 * 0.64)).exp();
        out.push(grid.points().iter().map(|&x| Complex64::new(envelope(x), 0.0)).collect());
        out.push(grid.points().iter().map(|&x| Complex64::new((x - c) * envelope(x), 0.0)).collect());
        out.push(grid.points().iter().map(|&x| Complex64::from_polar(envelope(x), 1.5 * x)).collect());
    }
    out
}

/// `max |(DX - XD) f - f|` over the battery of [`commutator_battery`], with
/// `X` diagonal in the grid positions of `[-L/2, L/2)`.
pub fn heisenberg_commutator_defect(n: usize, length: f64) -> Result<f64> {
    let grid = Grid1D::symmetric(length / 2.0, n)?;
    let d = differentiation_matrix(n, length)?;
    let x = SmallMatrix::diagonal(&grid.points());
    let commutator = &(&d * &x) - &(&x * &d);
    Ok(commutator_battery(&grid)
        .iter()
        .map(|f| {
            commutator
                .apply(f)
                .iter()
                .zip(f)
                .map(|(g, f)| (g - f).norm())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn pauli_relations() {
        let [s1, s2, s3] = pauli_basis();
        assert_eq!(s3.get(0, 0), ONE);
        assert_eq!(s3.get(1, 1), -ONE);
        assert_eq!(s3.get(0, 1), ZERO);
        let id = SmallMatrix::identity(2);
        for s in [&s1, &s2, &s3] {
            assert_eq!(s * s, id);
            assert_eq!(s.adjoint(), *s);
        }
        assert_eq!(&s1 * &s2, s3.scale(Complex64::i()));
        assert_eq!(&s2 * &s3, s1.scale(Complex64::i()));
        assert_eq!(&s3 * &s1, s2.scale(Complex64::i()));
    }

    #[test]
    fn standard_kets() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let k1 = standard_ket(1).unwrap();
        assert!((k1[0] - c(h, 0.0)).norm() < 1e-15 && (k1[1] - c(h, 0.0)).norm() < 1e-15);
        assert_eq!(standard_ket(3).unwrap(), vec![ONE, ZERO]);
        let k2 = standard_ket(2).unwrap();
        assert!((k2[0] - c(h, 0.0)).norm() < 1e-15 && (k2[1] - c(0.0, h)).norm() < 1e-15);
        for d in 1..=3 {
            let k = standard_ket(d).unwrap();
            let sk = pauli_basis()[d - 1].apply(&k);
            assert!(sk.iter().zip(&k).all(|(a, b)| (a - b).norm() < 1e-15));
            assert!(k[0].im == 0.0 && k[0].re > 0.0);
        }
        assert!(standard_ket(0).is_err());
        assert!(standard_ket(4).is_err());
    }

    #[test]
    fn idempotents() {
        let e = idempotent_from_ket(&standard_ket(1).unwrap()).unwrap();
        let [s1, ..] = pauli_basis();
        let expect = (&SmallMatrix::identity(2) + &s1).scale(c(0.5, 0.0));
        assert!(e.max_abs_diff(&expect) < 1e-15);
        for i in 0..2 {
            for j in 0..2 {
                assert!((e.get(i, j) - c(0.5, 0.0)).norm() < 1e-15);
            }
        }
        for d in 1..=3 {
            let e = idempotent_from_ket(&standard_ket(d).unwrap()).unwrap();
            assert!((&e * &e).max_abs_diff(&e) < 1e-15);
            assert!(e.adjoint().max_abs_diff(&e) < 1e-15);
            assert!((e.trace() - ONE).norm() < 1e-15);
        }
        assert!(matches!(idempotent_from_ket(&[ONE, ONE]), Err(Error::NotNormalized { .. })));
        assert!(idempotent_from_ket(&[]).is_err());
    }

    #[test]
    fn idempotents_are_unitarily_conjugate() {
        for a in 1..=3 {
            for b in 1..=3 {
                let u = conjugating_unitary(a, b).unwrap();
                assert!((&u * &u.adjoint()).max_abs_diff(&SmallMatrix::identity(2)) < 1e-15);
                let ea = idempotent_from_ket(&standard_ket(a).unwrap()).unwrap();
                let eb = idempotent_from_ket(&standard_ket(b).unwrap()).unwrap();
                assert!((&(&u * &ea) * &u.adjoint()).max_abs_diff(&eb) < 1e-15, "{a}->{b}");
            }
        }
    }

    #[test]
    fn differentiation_matrix_matches_fft() {
        let g = Grid1D::symmetric(10.0, 64).unwrap();
        let d = differentiation_matrix(64, 20.0).unwrap();
        let f: Vec<Complex64> = g.points().iter().map(|&x| c((-x * x / 2.0).exp() * (0.7 * x).sin(), (0.3 * x).cos() * (-x * x / 3.0).exp())).collect();
        let a = d.apply(&f);
        let b = g.derivative(&f, 1).unwrap();
        assert!(a.iter().zip(&b).all(|(a, b)| (a - b).norm() < 1e-12));
        assert!(differentiation_matrix(7, 1.0).is_err());
    }

    #[test]
    fn commutator_is_the_identity_on_resolved_functions() {
        let defect = heisenberg_commutator_defect(64, 20.0).unwrap();
        assert!(defect < 1e-8, "{defect:e}");
        let ladder: Vec<f64> = [32, 64, 128, 256].iter().map(|&n| heisenberg_commutator_defect(n, 20.0).unwrap()).collect();
        let floor = 1e-12;
        assert!(ladder.windows(2).all(|w| w[1] <= w[0].max(floor)), "{ladder:?}");
    }

    #[test]
    fn constant_function_is_annihilated_by_d() {
        // X D 1 vanishes; D X 1 = D x sees the sawtooth at the seam, so the
        // constant only satisfies the identity away from it.
        let d = differentiation_matrix(32, 10.0).unwrap();
        let ones = vec![ONE; 32];
        assert!(d.apply(&ones).iter().all(|v| v.norm() < 1e-13));
    }
}
