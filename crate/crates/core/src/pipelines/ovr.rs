use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linalg::{dot, ridge_solve, Matrix};

/// One-vs-rest linear scorer; row `c` of `weights` is `[w_c, b_c]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GzslClassifier {
    pub weights: Matrix,
    pub class_order: Vec<usize>,
}

fn with_bias(features: &Matrix) -> Matrix {
    let (n, d) = features.shape();
    Matrix::from_fn(d + 1, n, |i, j| if i < d { features[(j, i)] } else { 1.0 })
}

/// Regularized least-squares one-vs-rest: for each class, ridge regression of
/// ±1 targets on `[x, 1]`. `labels` are indices into `0..n_classes`.
pub fn train_linear_ovr(
    features: &Matrix,
    labels: &[usize],
    n_classes: usize,
    lambda: f64,
) -> Result<GzslClassifier> {
    if labels.len() != features.rows() {
        return Err(Error::dim(
            "train_linear_ovr",
            format!("{} labels for {} rows", labels.len(), features.rows()),
        ));
    }
    let mut present = vec![false; n_classes];
    for &l in labels {
        if l >= n_classes {
            return Err(Error::DataValidation(format!("label {l} >= {n_classes} classes")));
        }
        present[l] = true;
    }
    if let Some(missing) = present.iter().position(|p| !p) {
        return Err(Error::DataValidation(format!(
            "class {missing} has no training examples"
        )));
    }
    if n_classes < 2 {
        return Err(Error::DataValidation(
            "one-vs-rest needs at least two classes".into(),
        ));
    }
    let targets = Matrix::from_fn(n_classes, labels.len(), |c, i| {
        if labels[i] == c {
            1.0
        } else {
            -1.0
        }
    });
    let weights = ridge_solve(&targets, &with_bias(features), lambda)?;
    Ok(GzslClassifier {
        weights,
        class_order: (0..n_classes).collect(),
    })
}

impl GzslClassifier {
    pub fn with_class_order(mut self, class_order: Vec<usize>) -> Result<Self> {
        if class_order.len() != self.weights.rows() {
            return Err(Error::dim(
                "GzslClassifier::with_class_order",
                format!("{} ids for {} classes", class_order.len(), self.weights.rows()),
            ));
        }
        self.class_order = class_order;
        Ok(self)
    }

    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        let d = x.len();
        self.weights
            .row_iter()
            .map(|w| dot(&w[..d], x) + w[d])
            .collect()
    }

    /// Predicted class ids; ties go to the lowest class index.
    pub fn predict(&self, features: &Matrix) -> Result<Vec<usize>> {
        self.predict_with(features, Exec::default())
    }

    pub fn predict_with(&self, features: &Matrix, exec: Exec) -> Result<Vec<usize>> {
        if features.cols() + 1 != self.weights.cols() {
            return Err(Error::dim(
                "GzslClassifier::predict",
                format!("features have {} dims, classifier expects {}", features.cols(), self.weights.cols() - 1),
            ));
        }
        Ok(exec.map_indices(features.rows(), |i| {
            self.class_order[super::argmax_first(&self.scores(features.row(i)))]
        }))
    }
}
