//! Attribute → Gaussian-parameter regression.
//!
//! Seen-class MLE means form the columns of `M` (D×S) and their log-variances
//! the columns of `R`. With `X` the regression inputs (the seen-class kernel
//! matrix `K`, or the raw attributes for the linear variant) the mean map
//! minimizes
//!
//! ```text
//! ‖M − W X‖² + λ_μ ‖W‖² + λ₁ ‖X − Wᵀ M‖²
//! ```
//!
//! whose stationarity condition is the Sylvester equation
//! `λ₁ M Mᵀ W + W (X Xᵀ + λ_μ I) = (1 + λ₁) M Xᵀ`. The log-variance map is
//! the same problem with `R`, `λ_σ²` and `λ₂`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{ClassGaussian, VARIANCE_FLOOR};
use crate::linalg::{kernel_matrix, kernel_vector, solve_sylvester_gram, KernelSpec, Matrix};

/// Upper clamp for predicted log-variances, keeps `exp` finite.
pub const MAX_LOG_VAR: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub lambda_mu: f64,
    pub lambda_1: f64,
    pub lambda_sigma: f64,
    pub lambda_2: f64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            lambda_mu: 0.1,
            lambda_1: 0.01,
            lambda_sigma: 0.1,
            lambda_2: 0.01,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        let nonneg = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be non-negative, got {v}")))
            }
        };
        pos("lambda_mu", self.lambda_mu)?;
        pos("lambda_sigma", self.lambda_sigma)?;
        nonneg("lambda_1", self.lambda_1)?;
        nonneg("lambda_2", self.lambda_2)
    }
}

/// What a class attribute vector is turned into before the weight maps apply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "basis", rename_all = "lowercase")]
pub enum Basis {
    /// Kernel similarities to the seen-class attributes (length S).
    Kernel { kernel: KernelSpec },
    /// The attribute vector itself (length K).
    Attributes,
}

/// Relative stationarity residuals of the two solved systems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResiduals {
    pub mean: f64,
    pub log_var: f64,
}

/// Learned weight maps plus the context needed to embed new attribute vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamMap {
    pub w_mu: Matrix,
    pub w_sigma: Matrix,
    pub seen_attrs: Matrix,
    pub basis: Basis,
    pub hyper: HyperParams,
    pub residuals: FitResiduals,
}

/// Kernel variant: inputs are `K = k(seen_attrs, seen_attrs)`.
pub fn fit_param_map(
    seen_gaussians: &[ClassGaussian],
    seen_attrs: &Matrix,
    kernel: KernelSpec,
    hyper: HyperParams,
) -> Result<ParamMap> {
    fit_with_basis(
        seen_gaussians,
        seen_attrs,
        Basis::Kernel { kernel },
        hyper,
    )
}

/// Linear variant: inputs are the attribute vectors themselves, so
/// `μ_c = W_μ a_c` with `W_μ` of size D×K.
pub fn fit_param_map_linear(
    seen_gaussians: &[ClassGaussian],
    seen_attrs: &Matrix,
    hyper: HyperParams,
) -> Result<ParamMap> {
    fit_with_basis(seen_gaussians, seen_attrs, Basis::Attributes, hyper)
}

fn fit_with_basis(
    seen: &[ClassGaussian],
    seen_attrs: &Matrix,
    basis: Basis,
    hyper: HyperParams,
) -> Result<ParamMap> {
    hyper.validate()?;
    let s = seen.len();
    if s < 2 {
        return Err(Error::Config(format!("need at least 2 seen classes, got {s}")));
    }
    if seen_attrs.rows() != s {
        return Err(Error::dim(
            "fit_param_map",
            format!("{s} gaussians but {} attribute rows", seen_attrs.rows()),
        ));
    }
    let d = seen[0].dim();
    if let Some(bad) = seen.iter().position(|g| g.dim() != d) {
        return Err(Error::dim(
            "fit_param_map",
            format!("class {bad} has dimension {}, expected {d}", seen[bad].dim()),
        ));
    }

    let means = Matrix::from_columns(&seen.iter().map(|g| g.mean.as_slice()).collect::<Vec<_>>())?;
    let log_vars =
        Matrix::from_columns(&seen.iter().map(|g| g.log_var.as_slice()).collect::<Vec<_>>())?;
    let inputs = match basis {
        Basis::Kernel { kernel } => kernel_matrix(seen_attrs, seen_attrs, kernel)?,
        Basis::Attributes => seen_attrs.transpose(),
    };

    let (w_mu, res_mu) = solve_map(&means, &inputs, hyper.lambda_mu, hyper.lambda_1)?;
    let (w_sigma, res_sigma) = solve_map(&log_vars, &inputs, hyper.lambda_sigma, hyper.lambda_2)?;

    Ok(ParamMap {
        w_mu,
        w_sigma,
        seen_attrs: seen_attrs.clone(),
        basis,
        hyper,
        residuals: FitResiduals {
            mean: res_mu,
            log_var: res_sigma,
        },
    })
}

/// Solves `λ_rec T Tᵀ W + W (X Xᵀ + λ I) = (1 + λ_rec) T Xᵀ`; returns the
/// weights and the relative residual of that equation.
fn solve_map(targets: &Matrix, inputs: &Matrix, lambda: f64, lambda_rec: f64) -> Result<(Matrix, f64)> {
    let b = inputs.matmul_t(inputs)?.add_diag(lambda);
    let c = targets.matmul_t(inputs)?.scale(1.0 + lambda_rec);
    let w = solve_sylvester_gram(targets, lambda_rec, &b, &c)?;
    let resid = stationarity_residual(targets, inputs, lambda, lambda_rec, &w)?;
    Ok((w, resid))
}

/// `‖λ_rec T Tᵀ W + W (X Xᵀ + λ I) − (1 + λ_rec) T Xᵀ‖ / (1 + ‖(1 + λ_rec) T Xᵀ‖)`.
pub fn stationarity_residual(
    targets: &Matrix,
    inputs: &Matrix,
    lambda: f64,
    lambda_rec: f64,
    w: &Matrix,
) -> Result<f64> {
    let c = targets.matmul_t(inputs)?.scale(1.0 + lambda_rec);
    let aw = targets.matmul(&targets.transpose().matmul(w)?)?.scale(lambda_rec);
    let wb = w.matmul(&inputs.matmul_t(inputs)?.add_diag(lambda))?;
    let r = aw.add(&wb)?.sub(&c)?.frobenius_norm();
    Ok(r / (1.0 + c.frobenius_norm()))
}

impl ParamMap {
    pub fn feature_dim(&self) -> usize {
        self.w_mu.rows()
    }

    pub fn attribute_dim(&self) -> usize {
        self.seen_attrs.cols()
    }

    /// The regression input for one class attribute vector.
    pub fn embed(&self, attrs: &[f64]) -> Result<Vec<f64>> {
        if attrs.len() != self.attribute_dim() {
            return Err(Error::dim(
                "ParamMap::embed",
                format!("attribute dim {} vs {}", attrs.len(), self.attribute_dim()),
            ));
        }
        match self.basis {
            Basis::Kernel { kernel } => kernel_vector(attrs, &self.seen_attrs, kernel),
            Basis::Attributes => Ok(attrs.to_vec()),
        }
    }

    pub fn predict_one(&self, attrs: &[f64]) -> Result<ClassGaussian> {
        let phi = self.embed(attrs)?;
        let mean = self.w_mu.matvec(&phi)?;
        let lo = VARIANCE_FLOOR.ln();
        let log_var = self
            .w_sigma
            .matvec(&phi)?
            .into_iter()
            .map(|v| v.clamp(lo, MAX_LOG_VAR))
            .collect();
        ClassGaussian::from_log_var(mean, log_var)
    }

    /// Reconstruction error `‖X − W_μᵀ M‖_F` on the seen classes.
    pub fn reconstruction_error(&self, seen: &[ClassGaussian]) -> Result<f64> {
        let inputs = match self.basis {
            Basis::Kernel { kernel } => kernel_matrix(&self.seen_attrs, &self.seen_attrs, kernel)?,
            Basis::Attributes => self.seen_attrs.transpose(),
        };
        let means =
            Matrix::from_columns(&seen.iter().map(|g| g.mean.as_slice()).collect::<Vec<_>>())?;
        Ok(inputs
            .sub(&self.w_mu.transpose().matmul(&means)?)?
            .frobenius_norm())
    }
}

/// Gaussian parameters for each row of `unseen_attrs`.
pub fn predict_unseen(map: &ParamMap, unseen_attrs: &Matrix) -> Result<Vec<ClassGaussian>> {
    if unseen_attrs.cols() != map.attribute_dim() {
        return Err(Error::dim(
            "predict_unseen",
            format!(
                "attribute dim {} vs map's {}",
                unseen_attrs.cols(),
                map.attribute_dim()
            ),
        ));
    }
    unseen_attrs.row_iter().map(|a| map.predict_one(a)).collect()
}
