//! `A W + W B = C` for symmetric `A` (PSD) and `B` (PD).
//!
//! Both operands are diagonalized, `A = Ua Λa Uaᵀ` and `B = Ub Λb Ubᵀ`, which
//! turns the equation into the elementwise system
//! `(λa_i + λb_j) W̃_ij = (Uaᵀ C Ub)_ij`. This is the Bartels–Stewart scheme
//! with the triangular Schur factors collapsing to diagonals.

use super::{sym_eig, Matrix};
use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-9;
const MIN_EIGEN_SUM: f64 = 1e-12;

pub(crate) fn check_symmetric(op: &'static str, m: &Matrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::dim(op, format!("non-square {:?}", m.shape())));
    }
    let scale = m.as_slice().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let asym = m.asymmetry();
    if asym > SYMMETRY_TOL * (1.0 + scale) {
        return Err(Error::NotSymmetric { op, asymmetry: asym });
    }
    Ok(())
}

pub fn solve_sylvester(a: &Matrix, b: &Matrix, c: &Matrix) -> Result<Matrix> {
    check_symmetric("solve_sylvester(a)", a)?;
    check_symmetric("solve_sylvester(b)", b)?;
    if c.rows() != a.rows() || c.cols() != b.rows() {
        return Err(Error::dim(
            "solve_sylvester",
            format!(
                "a {:?}, b {:?} incompatible with c {:?}",
                a.shape(),
                b.shape(),
                c.shape()
            ),
        ));
    }

    let ea = sym_eig(a)?;
    let eb = sym_eig(b)?;
    if let (Some(&la), Some(&lb)) = (ea.values.first(), eb.values.first()) {
        let min_sum = la + lb;
        if min_sum <= MIN_EIGEN_SUM {
            return Err(Error::SingularPencil { min_sum });
        }
    }

    // C̃ = Uaᵀ C Ub
    let mut w = ea.vectors.transpose().matmul(c)?.matmul(&eb.vectors)?;
    for i in 0..w.rows() {
        let la = ea.values[i];
        for (j, v) in w.row_mut(i).iter_mut().enumerate() {
            *v /= la + eb.values[j];
        }
    }
    ea.vectors
        .matmul(&w)?
        .matmul_t(&eb.vectors)?
        .ensure_finite("solve_sylvester")
}

/// `A W + W B = C` with `A = scale · F Fᵀ` given only the tall factor `F` (d×r).
///
/// Equivalent to [`solve_sylvester`] on the explicit product but costs
/// O(d·r² + d·s²) instead of O(d³), which matters when the feature
/// dimension is far larger than the number of classes.
pub fn solve_sylvester_gram(factor: &Matrix, scale: f64, b: &Matrix, c: &Matrix) -> Result<Matrix> {
    check_symmetric("solve_sylvester_gram(b)", b)?;
    if scale < 0.0 || !scale.is_finite() {
        return Err(Error::Config(format!("gram scale must be non-negative, got {scale}")));
    }
    let d = factor.rows();
    if c.rows() != d || c.cols() != b.rows() {
        return Err(Error::dim(
            "solve_sylvester_gram",
            format!(
                "factor {:?}, b {:?} incompatible with c {:?}",
                factor.shape(),
                b.shape(),
                c.shape()
            ),
        ));
    }
    let eb = sym_eig(b)?;

    // Range of F: Fᵀ F = V Σ² Vᵀ, U = F V Σ⁻¹ for the non-negligible σ².
    let inner = sym_eig(&factor.transpose().matmul(factor)?)?;
    let top = inner.values.last().copied().unwrap_or(0.0).max(0.0);
    let keep: Vec<usize> = (0..inner.values.len())
        .filter(|&k| scale > 0.0 && inner.values[k] > 1e-12 * top && inner.values[k] > 0.0)
        .collect();
    let mut u = factor.matmul(&inner.vectors.select_cols(&keep))?;
    for (j, &k) in keep.iter().enumerate() {
        let inv = 1.0 / inner.values[k].sqrt();
        for i in 0..d {
            u[(i, j)] *= inv;
        }
    }
    let la: Vec<f64> = keep.iter().map(|&k| scale * inner.values[k]).collect();

    let min_b = eb.values.first().copied().unwrap_or(f64::INFINITY);
    // the complement of range(F) contributes eigenvalue 0 whenever r < d
    let min_a = if keep.len() < d { 0.0 } else { la.iter().copied().fold(f64::INFINITY, f64::min) };
    if d > 0 && min_a + min_b <= MIN_EIGEN_SUM {
        return Err(Error::SingularPencil { min_sum: min_a + min_b });
    }

    let cb = c.matmul(&eb.vectors)?; // C Ub
    let uc = u.transpose().matmul(&cb)?; // Uᵀ C Ub
    // complement part: (I − U Uᵀ) C Ub, each column scaled by 1/λb_j
    let mut rest = cb.sub(&u.matmul(&uc)?)?;
    for i in 0..d {
        for (j, v) in rest.row_mut(i).iter_mut().enumerate() {
            *v /= eb.values[j];
        }
    }
    let mut inner_w = uc;
    for (i, &l) in la.iter().enumerate() {
        for (j, v) in inner_w.row_mut(i).iter_mut().enumerate() {
            *v /= l + eb.values[j];
        }
    }
    u.matmul(&inner_w)?
        .add(&rest)?
        .matmul_t(&eb.vectors)?
        .ensure_finite("solve_sylvester_gram")
}
