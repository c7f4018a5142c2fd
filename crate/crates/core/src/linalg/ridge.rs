use nalgebra::Cholesky;

use super::Matrix;
use crate::error::{Error, Result};

/// Minimizer of `‖T − W X‖²_F + λ‖W‖²_F`, i.e. `W = T Xᵀ (X Xᵀ + λI)⁻¹`.
///
/// `targets` is d×n, `inputs` is k×n (one column per sample); returns d×k.
pub fn ridge_solve(targets: &Matrix, inputs: &Matrix, lambda: f64) -> Result<Matrix> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Config(format!("ridge lambda must be positive, got {lambda}")));
    }
    if targets.cols() != inputs.cols() {
        return Err(Error::dim(
            "ridge_solve",
            format!(
                "targets {:?} and inputs {:?} disagree on sample count",
                targets.shape(),
                inputs.shape()
            ),
        ));
    }
    let gram = inputs.matmul_t(inputs)?.add_diag(lambda);
    let rhs = inputs.matmul_t(targets)?; // X Tᵀ, k×d
    let chol = Cholesky::new(gram.to_nalgebra()).ok_or(Error::NonFinite {
        op: "ridge_solve (Cholesky)",
    })?;
    // (XXᵀ + λI) Wᵀ = X Tᵀ
    let wt = chol.solve(&rhs.to_nalgebra());
    Matrix::from_nalgebra(&wt)
        .transpose()
        .ensure_finite("ridge_solve")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn objective(t: &Matrix, x: &Matrix, w: &Matrix, lambda: f64) -> f64 {
        let r = t.sub(&w.matmul(x).unwrap()).unwrap().frobenius_norm();
        r * r + lambda * w.frobenius_norm().powi(2)
    }

    #[test]
    fn identity_inputs() {
        let t = Matrix::from_rows(&[[1.0, -2.0, 3.0], [0.5, 0.0, 4.0]]).unwrap();
        let w = ridge_solve(&t, &Matrix::identity(3), 1e-12).unwrap();
        assert!(w.sub(&t).unwrap().frobenius_norm() < 1e-6);
    }

    #[test]
    fn exact_linear_relation() {
        let x = Matrix::from_rows(&[[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 4.0]]).unwrap();
        let w = ridge_solve(&x.scale(2.0), &x, 1e-10).unwrap();
        assert!(w.sub(&Matrix::identity(3).scale(2.0)).unwrap().frobenius_norm() < 1e-5);
    }

    #[test]
    fn local_optimality_probe() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = Matrix::from_fn(6, 40, |_, _| rng.random_range(-1.0..1.0));
        let t = Matrix::from_fn(3, 40, |_, _| rng.random_range(-1.0..1.0));
        let w = ridge_solve(&t, &x, 0.1).unwrap();
        let best = objective(&t, &x, &w, 0.1);
        for _ in 0..100 {
            let dir = Matrix::from_fn(3, 6, |_, _| rng.random_range(-1.0..1.0));
            let dir = dir.scale(1e-3 / dir.frobenius_norm());
            let p = w.add(&dir).unwrap();
            assert!(objective(&t, &x, &p, 0.1) >= best);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let x = Matrix::identity(2);
        assert!(ridge_solve(&x, &x, 0.0).is_err());
        assert!(ridge_solve(&Matrix::zeros(2, 3), &x, 1.0).is_err());
    }
}
