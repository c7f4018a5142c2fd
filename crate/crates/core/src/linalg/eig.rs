use nalgebra::SymmetricEigen;

use super::Matrix;
use crate::error::{Error, Result};

/// Eigendecomposition `m = V diag(values) Vᵀ` of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEig {
    /// Ascending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, one per column, ordered like `values`.
    pub vectors: Matrix,
}

/// Symmetric eigendecomposition. The input is symmetrized as `(m + mᵀ)/2`
/// first so round-off asymmetry from products like `M Mᵀ` is absorbed.
pub fn sym_eig(m: &Matrix) -> Result<SymEig> {
    if !m.is_square() {
        return Err(Error::dim("sym_eig", format!("non-square {:?}", m.shape())));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite { op: "sym_eig input" });
    }
    let n = m.rows();
    if n == 0 {
        return Ok(SymEig {
            values: Vec::new(),
            vectors: Matrix::zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::new(m.symmetrized().to_nalgebra());

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = Matrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(SymEig { values, vectors })
}

impl SymEig {
    /// `V diag(values) Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.values.len();
        let scaled = Matrix::from_fn(n, n, |i, j| self.vectors[(i, j)] * self.values[j]);
        scaled
            .matmul_t(&self.vectors)
            .expect("square factors of equal size")
    }
}
