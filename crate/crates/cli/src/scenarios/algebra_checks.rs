//! Finite matrix algebra: Pauli relations, idempotents and standard kets,
//! and the discrete Heisenberg commutator.

use std::f64::consts::FRAC_1_SQRT_2;

use anyhow::Result;
use bohmlab::algebra::{
    commutator_battery, conjugating_unitary, differentiation_matrix, heisenberg_commutator_defect,
    idempotent_from_ket, pauli_basis, standard_ket, SmallMatrix,
};
use bohmlab::Grid1D;
use num_complex::Complex64;

use super::*;
use crate::report::Oracle;

/// Below this the commutator defect is at the rounding floor.
const ROUNDING_FLOOR: f64 = 1e-13;

fn max_abs(m: &SmallMatrix) -> f64 {
    m.max_abs_diff(&SmallMatrix::from_fn(m.dim(), |_, _| Complex64::new(0.0, 0.0)))
}

fn vec_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn run(cfg: &ScenarioConfig, sink: &mut Sink, checks: &mut Vec<Check>) -> Result<()> {
    let one = SmallMatrix::identity(2);
    let i = Complex64::i();
    let s = pauli_basis();

    // σ_a σ_b = δ_ab + i ε_abc σ_c
    let mut rel = 0.0f64;
    for a in 0..3 {
        for b in 0..3 {
            let expect = if a == b {
                one.clone()
            } else {
                let c = 3 - a - b;
                let sign = if (b + 3 - a) % 3 == 1 { 1.0 } else { -1.0 };
                s[c].scale(i * sign)
            };
            rel = rel.max((&s[a] * &s[b]).max_abs_diff(&expect));
        }
    }
    checks.push(Check::below("pauli_product_relations", rel, 1e-15, Oracle::Analytic));

    let half = Complex64::new(0.5, 0.0);
    let eps1 = (&one + &s[0]).scale(half);
    checks.push(Check::below(
        "idempotent_sigma1_square",
        (&eps1 * &eps1).max_abs_diff(&eps1),
        1e-15,
        Oracle::Analytic,
    ));
    let r = FRAC_1_SQRT_2;
    let expected_kets = [
        vec![Complex64::new(r, 0.0), Complex64::new(r, 0.0)],
        vec![Complex64::new(r, 0.0), Complex64::new(0.0, r)],
        vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
    ];
    let mut ket_err = 0.0f64;
    let mut from_ket = 0.0f64;
    let mut complement = 0.0f64;
    for d in 1..=3 {
        let k = standard_ket(d)?;
        ket_err = ket_err.max(vec_diff(&k, &expected_kets[d - 1]));
        let eps = idempotent_from_ket(&k)?;
        from_ket = from_ket.max(eps.max_abs_diff(&(&one + &s[d - 1]).scale(half)));
        complement = complement.max(max_abs(&(&eps * &(&one - &eps))));
    }
    checks.push(Check::below("standard_kets", ket_err, 1e-15, Oracle::Analytic));
    checks.push(Check::below("idempotents_from_kets", from_ket, 1e-15, Oracle::Analytic));
    checks.push(Check::below("idempotent_complements_annihilate", complement, 1e-15, Oracle::Analytic));

    let mut conj = 0.0f64;
    let mut unitarity = 0.0f64;
    for a in 1..=3 {
        for b in 1..=3 {
            let u = conjugating_unitary(a, b)?;
            let ea = idempotent_from_ket(&standard_ket(a)?)?;
            let eb = idempotent_from_ket(&standard_ket(b)?)?;
            conj = conj.max((&(&u * &ea) * &u.adjoint()).max_abs_diff(&eb));
            unitarity = unitarity.max((&u * &u.adjoint()).max_abs_diff(&one));
        }
    }
    checks.push(Check::below("idempotents_conjugate", conj, 1e-14, Oracle::Invariant));
    checks.push(Check::below("conjugating_unitarity", unitarity, 1e-14, Oracle::Invariant));

    let n = cfg.algebra.n.unwrap_or(64);
    let length = cfg.algebra.length.unwrap_or(20.0);
    let grid = Grid1D::symmetric(length / 2.0, n)?;
    let d = differentiation_matrix(n, length)?;
    let mut fft_diff = 0.0f64;
    for f in commutator_battery(&grid) {
        let spectral = grid.derivative(&f, 1)?;
        fft_diff = fft_diff.max(vec_diff(&d.apply(&f), &spectral));
    }
    checks.push(Check::below("differentiation_matrix_vs_fft", fft_diff, 1e-12, Oracle::CrossCheck));
    checks.push(Check::below(
        "commutator_defect",
        heisenberg_commutator_defect(n, length)?,
        1e-8,
        Oracle::Analytic,
    ));

    let ladder: Vec<usize> = [n / 2, n, 2 * n, 4 * n].into_iter().filter(|&m| m >= 8).collect();
    let mut rows = Vec::new();
    for &m in &ladder {
        rows.push((m, heisenberg_commutator_defect(m, length)?));
    }
    let rises = rows
        .windows(2)
        .filter(|w| w[1].1 > w[0].1 && w[1].1 > ROUNDING_FLOOR)
        .count();
    checks.push(Check::at_most("commutator_ladder_rises", rises as f64, 0.0, Oracle::Convergence));
    sink.table("commutator_defect.csv", &["n", "defect"], &rows)?;
    Ok(())
}
