use serde::{Deserialize, Serialize};

use super::{dot, squared_distance, Matrix};
use crate::error::{Error, Result};

/// Similarity function between attribute vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    /// `exp(−‖a − b‖² / (2 · bandwidth²))`
    Rbf { bandwidth: f64 },
    /// `a · b`
    Linear,
}

impl KernelSpec {
    pub fn rbf(bandwidth: f64) -> Result<Self> {
        let k = KernelSpec::Rbf { bandwidth };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Rbf { bandwidth } if !(bandwidth > 0.0 && bandwidth.is_finite()) => Err(
                Error::Config(format!("RBF bandwidth must be positive, got {bandwidth}")),
            ),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            KernelSpec::Rbf { bandwidth } => {
                (-squared_distance(a, b) / (2.0 * bandwidth * bandwidth)).exp()
            }
            KernelSpec::Linear => dot(a, b),
        }
    }
}

/// Pairwise kernel between the rows of two attribute matrices.
pub fn kernel_matrix(rows_attrs: &Matrix, cols_attrs: &Matrix, spec: KernelSpec) -> Result<Matrix> {
    spec.validate()?;
    if rows_attrs.cols() != cols_attrs.cols() {
        return Err(Error::dim(
            "kernel_matrix",
            format!(
                "attribute dims {} vs {}",
                rows_attrs.cols(),
                cols_attrs.cols()
            ),
        ));
    }
    Matrix::from_fn(rows_attrs.rows(), cols_attrs.rows(), |i, j| {
        spec.eval(rows_attrs.row(i), cols_attrs.row(j))
    })
    .ensure_finite("kernel_matrix")
}

/// Similarities of one attribute vector to every row of `attrs`.
pub fn kernel_vector(query: &[f64], attrs: &Matrix, spec: KernelSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    if query.len() != attrs.cols() {
        return Err(Error::dim(
            "kernel_vector",
            format!("query dim {} vs attribute dim {}", query.len(), attrs.cols()),
        ));
    }
    Ok(attrs.row_iter().map(|r| spec.eval(query, r)).collect())
}

/// Median of all pairwise Euclidean distances between rows.
pub fn median_bandwidth(attrs: &Matrix) -> Result<f64> {
    let n = attrs.rows();
    if n < 2 {
        return Err(Error::Config(format!(
            "median bandwidth needs at least 2 rows, got {n}"
        )));
    }
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            dists.push(squared_distance(attrs.row(i), attrs.row(j)).sqrt());
        }
    }
    dists.sort_by(f64::total_cmp);
    let mid = dists.len() / 2;
    let median = if dists.len() % 2 == 1 {
        dists[mid]
    } else {
        0.5 * (dists[mid - 1] + dists[mid])
    };
    if median > 0.0 {
        Ok(median)
    } else if dists.last().is_some_and(|&d| d > 0.0) {
        // more than half the pairs coincide; fall back to the mean of the non-zero distances
        let nz: Vec<f64> = dists.into_iter().filter(|&d| d > 0.0).collect();
        Ok(nz.iter().sum::<f64>() / nz.len() as f64)
    } else {
        Err(Error::DegenerateAttributes)
    }
}
