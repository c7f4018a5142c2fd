//! Planted worlds: class means are an exact linear function of the
//! attributes, `μ_c = W a_c`, with isotropic noise around them.

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::gaussian::{ClassGaussian, NormalStream};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeScheme {
    /// Gaussian direction normalized to unit length.
    RandomUnit,
    /// Class `c` gets the `c`-th standard basis vector; needs `dim_k ≥ n_classes`.
    OneHot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticWorldSpec {
    pub n_classes: usize,
    pub dim_d: usize,
    pub dim_k: usize,
    pub w_true: Matrix,
    pub noise_scale: f64,
    pub examples_per_class: usize,
    pub attribute_scheme: AttributeScheme,
    pub seed: u64,
}

/// A D×K map with i.i.d. `N(0, scale²)` entries.
pub fn random_w_true(dim_d: usize, dim_k: usize, scale: f64, seed: u64) -> Matrix {
    let mut z = NormalStream::new(seed);
    Matrix::from_fn(dim_d, dim_k, |_, _| scale * z.next_normal())
}

// Independent streams for attributes and each class's samples.
fn stream_seed(seed: u64, stream: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(stream.wrapping_mul(0xBF58_476D_1CE4_E5B9))
}

impl SyntheticWorldSpec {
    pub fn validate(&self) -> Result<()> {
        if self.w_true.shape() != (self.dim_d, self.dim_k) {
            return Err(Error::Config(format!(
                "w_true is {:?}, expected {}x{}",
                self.w_true.shape(),
                self.dim_d,
                self.dim_k
            )));
        }
        if self.n_classes == 0 || self.examples_per_class == 0 {
            return Err(Error::Config("need at least one class and one example per class".into()));
        }
        if !(self.noise_scale > 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::Config(format!(
                "noise_scale must be positive, got {}",
                self.noise_scale
            )));
        }
        if self.attribute_scheme == AttributeScheme::OneHot && self.dim_k < self.n_classes {
            return Err(Error::Config(format!(
                "one_hot attributes need dim_k >= n_classes ({} < {})",
                self.dim_k, self.n_classes
            )));
        }
        if !self.w_true.is_finite() {
            return Err(Error::Config("w_true has non-finite entries".into()));
        }
        Ok(())
    }

    fn attributes(&self) -> Matrix {
        match self.attribute_scheme {
            AttributeScheme::OneHot => {
                Matrix::from_fn(self.n_classes, self.dim_k, |c, k| if c == k { 1.0 } else { 0.0 })
            }
            AttributeScheme::RandomUnit => {
                let mut z = NormalStream::new(stream_seed(self.seed, 0));
                let mut a = Matrix::zeros(self.n_classes, self.dim_k);
                for c in 0..self.n_classes {
                    // redraw the (measure-zero) all-zero direction
                    loop {
                        let v: Vec<f64> = (0..self.dim_k).map(|_| z.next_normal()).collect();
                        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                        if norm > 0.0 {
                            a.row_mut(c).iter_mut().zip(&v).for_each(|(o, x)| *o = x / norm);
                            break;
                        }
                    }
                }
                a
            }
        }
    }
}

/// Samples a dataset from the planted world; also returns the true class Gaussians.
/// Rows are grouped by class, `examples_per_class` rows each.
pub fn generate_synthetic(spec: &SyntheticWorldSpec) -> Result<(Dataset, Vec<ClassGaussian>)> {
    spec.validate()?;
    let attrs = spec.attributes();
    let var = vec![spec.noise_scale * spec.noise_scale; spec.dim_d];
    let truth: Vec<ClassGaussian> = (0..spec.n_classes)
        .map(|c| ClassGaussian::from_variance(spec.w_true.matvec(attrs.row(c))?, &var))
        .collect::<Result<_>>()?;

    let mut features = Matrix::zeros(0, spec.dim_d);
    let mut labels = Vec::with_capacity(spec.n_classes * spec.examples_per_class);
    for (c, g) in truth.iter().enumerate() {
        // drawn at the exact noise scale; only the returned Gaussians carry the variance floor
        let mut z = NormalStream::new(stream_seed(spec.seed, c as u64 + 1));
        let x = Matrix::from_fn(spec.examples_per_class, spec.dim_d, |_, d| {
            g.mean[d] + spec.noise_scale * z.next_normal()
        });
        features = features.vstack(&x)?;
        labels.extend(std::iter::repeat_n(c, spec.examples_per_class));
    }
    let mut ds = Dataset::new(features, labels, attrs)?;
    ds.metadata.insert("synthetic_seed".into(), spec.seed.to_string());
    Ok((ds, truth))
}
