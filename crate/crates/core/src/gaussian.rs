//! Diagonal Gaussian class models: MLE fitting, log-density scoring, seeded
//! sampling and the conjugate few-shot update.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Smallest per-dimension variance any estimate is allowed to take.
pub const VARIANCE_FLOOR: f64 = 1e-6;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// One class in feature space: per-dimension mean and log-variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassGaussian {
    pub mean: Vec<f64>,
    pub log_var: Vec<f64>,
}

impl ClassGaussian {
    /// Builds a Gaussian from mean and variances; variances are floored.
    pub fn from_variance(mean: Vec<f64>, variance: &[f64]) -> Result<Self> {
        if mean.len() != variance.len() {
            return Err(Error::dim(
                "ClassGaussian::from_variance",
                format!("mean {} vs variance {}", mean.len(), variance.len()),
            ));
        }
        let g = ClassGaussian {
            mean,
            log_var: variance.iter().map(|&v| v.max(VARIANCE_FLOOR).ln()).collect(),
        };
        g.check_finite("ClassGaussian::from_variance")?;
        Ok(g)
    }

    /// Builds a Gaussian from mean and log-variances, clamped to the floor.
    pub fn from_log_var(mean: Vec<f64>, log_var: Vec<f64>) -> Result<Self> {
        let floor = VARIANCE_FLOOR.ln();
        let variance: Vec<f64> = log_var.iter().map(|v| v.max(floor).exp()).collect();
        Self::from_variance(mean, &variance)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn variance(&self) -> Vec<f64> {
        self.log_var.iter().map(|v| v.exp()).collect()
    }

    fn check_finite(&self, op: &'static str) -> Result<()> {
        if self.mean.iter().chain(&self.log_var).all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite { op })
        }
    }
}

/// Biased (divide by N) maximum-likelihood fit of one class; rows are examples.
pub fn fit_mle(examples: &Matrix) -> Result<ClassGaussian> {
    let n = examples.rows();
    if n == 0 {
        return Err(Error::EmptyClass { class: 0 });
    }
    let d = examples.cols();
    let mut mean = vec![0.0; d];
    for row in examples.row_iter() {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let mut var = vec![0.0; d];
    for row in examples.row_iter() {
        for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    var.iter_mut().for_each(|v| *v /= n as f64);
    ClassGaussian::from_variance(mean, &var)
}

/// `log N(x | μ, diag(σ²))`.
pub fn log_density(x: &[f64], g: &ClassGaussian) -> Result<f64> {
    if x.len() != g.dim() {
        return Err(Error::dim(
            "log_density",
            format!("x has {} dims, gaussian has {}", x.len(), g.dim()),
        ));
    }
    let mut acc = 0.0;
    for ((&xd, &m), &lv) in x.iter().zip(&g.mean).zip(&g.log_var) {
        let diff = xd - m;
        acc -= HALF_LN_2PI + 0.5 * lv + diff * diff / (2.0 * lv.exp());
    }
    Ok(acc)
}

/// A Gaussian prepared for scoring many rows: `1/(2σ²)` and the normalizer
/// are computed once.
pub(crate) struct Scorer<'a> {
    mean: &'a [f64],
    half_precision: Vec<f64>,
    log_norm: f64,
}

impl<'a> Scorer<'a> {
    pub(crate) fn new(g: &'a ClassGaussian) -> Self {
        Scorer {
            mean: &g.mean,
            half_precision: g.log_var.iter().map(|lv| 0.5 * (-lv).exp()).collect(),
            log_norm: -g.log_var.iter().map(|lv| HALF_LN_2PI + 0.5 * lv).sum::<f64>(),
        }
    }

    /// Log-density of `x`; the caller guarantees matching dimension.
    pub(crate) fn log_density(&self, x: &[f64]) -> f64 {
        let mut q = 0.0;
        for ((&xd, &m), &h) in x.iter().zip(self.mean).zip(&self.half_precision) {
            let diff = xd - m;
            q += diff * diff * h;
        }
        self.log_norm - q
    }
}

/// Standard-normal stream from a seeded ChaCha8 generator via Box–Muller.
pub struct NormalStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NormalStream {
    pub fn new(seed: u64) -> Self {
        NormalStream {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u1 in (0, 1] keeps the log finite
        let u1 = 1.0 - self.rng.random::<f64>();
        let u2: f64 = self.rng.random();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }
}

/// Draws `n` i.i.d. rows from `g`. Identical `(g, n, seed)` gives identical output.
pub fn sample(g: &ClassGaussian, n: usize, seed: u64) -> Result<Matrix> {
    if n == 0 {
        return Err(Error::Config("sample count must be at least 1".into()));
    }
    let sd: Vec<f64> = g.log_var.iter().map(|lv| (0.5 * lv).exp()).collect();
    let mut z = NormalStream::new(seed);
    let d = g.dim();
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n {
        for (m, s) in g.mean.iter().zip(&sd) {
            data.push(m + s * z.next_normal());
        }
    }
    Matrix::new(n, d, data)
}

/// Conjugate update of a predicted class with `N` labeled examples.
///
/// Mean: `(μ + Σx) / (1 + N)`. Variance: `(1/σ² + N/σ²*)⁻¹` where `σ²*` is
/// the spread of the examples around the *prior* mean. Note the result is
/// the posterior variance of the mean, so class variance shrinks as `N`
/// grows.
pub fn few_shot_update(g: &ClassGaussian, new_examples: &Matrix) -> Result<ClassGaussian> {
    let n = new_examples.rows();
    if n == 0 {
        return Err(Error::Config(
            "few-shot update needs at least one example".into(),
        ));
    }
    if new_examples.cols() != g.dim() {
        return Err(Error::dim(
            "few_shot_update",
            format!("examples have {} dims, prior has {}", new_examples.cols(), g.dim()),
        ));
    }
    let nf = n as f64;
    let prior_var = g.variance();
    let mut sum = vec![0.0; g.dim()];
    let mut spread = vec![0.0; g.dim()];
    for row in new_examples.row_iter() {
        for (d, &x) in row.iter().enumerate() {
            sum[d] += x;
            spread[d] += (x - g.mean[d]).powi(2);
        }
    }
    let mean = g
        .mean
        .iter()
        .zip(&sum)
        .map(|(m, s)| (m + s) / (1.0 + nf))
        .collect();
    let var: Vec<f64> = spread
        .iter()
        .zip(&prior_var)
        .map(|(sp, pv)| {
            let empirical = (sp / nf).max(VARIANCE_FLOOR);
            1.0 / (1.0 / pv + nf / empirical)
        })
        .collect();
    ClassGaussian::from_variance(mean, &var)
}

/// Feature rows with one class label each.
#[derive(Debug, Clone)]
pub struct LabeledBatch {
    features: Matrix,
    labels: Vec<usize>,
    n_classes: usize,
}

impl LabeledBatch {
    pub fn new(features: Matrix, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if features.rows() == 0 {
            return Err(Error::DataValidation("labeled batch is empty".into()));
        }
        if labels.len() != features.rows() {
            return Err(Error::dim(
                "LabeledBatch::new",
                format!("{} labels for {} rows", labels.len(), features.rows()),
            ));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::DataValidation(format!(
                "label {bad} not below class count {n_classes}"
            )));
        }
        Ok(LabeledBatch {
            features,
            labels,
            n_classes,
        })
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Rows of class `c`.
    pub fn class_examples(&self, c: usize) -> Matrix {
        let idx: Vec<usize> = (0..self.labels.len())
            .filter(|&i| self.labels[i] == c)
            .collect();
        self.features.select_rows(&idx)
    }

    /// MLE Gaussian for every class, failing on the first empty one.
    pub fn fit_all(&self) -> Result<Vec<ClassGaussian>> {
        (0..self.n_classes)
            .map(|c| fit_mle(&self.class_examples(c)).map_err(|_| Error::EmptyClass { class: c }))
            .collect()
    }
}
