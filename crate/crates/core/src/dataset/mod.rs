//! Datasets, seen/unseen splits, file formats and planted synthetic worlds.

mod io;
mod splits;
mod synth;

pub use io::{
    decode_matrix, decode_param_map, encode_matrix, encode_param_map, load_dataset, read_attributes,
    read_labels, read_matrix, read_param_map, read_splits, save_dataset, write_attributes_csv,
    write_labels, write_matrix, write_param_map, write_splits, FORMAT_VERSION, MAGIC, PARAM_MAGIC,
};
pub use splits::{generate_splits, Split};
pub use synth::{generate_synthetic, random_w_true, AttributeScheme, SyntheticWorldSpec};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Features with one class label per row, plus one attribute row per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<usize>,
    attributes: Matrix,
    class_names: Option<Vec<String>>,
    pub metadata: BTreeMap<String, String>,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Vec<usize>, attributes: Matrix) -> Result<Self> {
        if labels.len() != features.rows() {
            return Err(Error::DataValidation(format!(
                "{} labels for {} feature rows",
                labels.len(),
                features.rows()
            )));
        }
        let n_classes = attributes.rows();
        if let Some((row, &bad)) = labels.iter().enumerate().find(|(_, &l)| l >= n_classes) {
            return Err(Error::DataValidation(format!(
                "row {row} has label {bad}, but only {n_classes} classes have attributes"
            )));
        }
        if !features.is_finite() || !attributes.is_finite() {
            return Err(Error::DataValidation("non-finite feature or attribute value".into()));
        }
        Ok(Dataset {
            features,
            labels,
            attributes,
            class_names: None,
            metadata: BTreeMap::new(),
        })
    }

    pub fn with_class_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_classes() {
            return Err(Error::DataValidation(format!(
                "{} class names for {} classes",
                names.len(),
                self.n_classes()
            )));
        }
        self.class_names = Some(names);
        Ok(self)
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn attributes(&self) -> &Matrix {
        &self.attributes
    }

    pub fn class_names(&self) -> Option<&[String]> {
        self.class_names.as_deref()
    }

    pub fn n_classes(&self) -> usize {
        self.attributes.rows()
    }

    pub fn n_examples(&self) -> usize {
        self.features.rows()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn attribute_dim(&self) -> usize {
        self.attributes.cols()
    }

    /// Row indices of class `c`, in file order.
    pub fn rows_of_class(&self, c: usize) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == c).collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// A dataset over the given rows; attributes and metadata are kept.
    pub fn subset_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(rows),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            attributes: self.attributes.clone(),
            class_names: self.class_names.clone(),
            metadata: self.metadata.clone(),
        }
    }

    /// Returns a copy whose feature rows have been replaced.
    pub fn with_features(&self, features: Matrix) -> Result<Dataset> {
        if features.shape() != self.features.shape() {
            return Err(Error::dim(
                "Dataset::with_features",
                format!("{:?} vs {:?}", features.shape(), self.features.shape()),
            ));
        }
        let mut d = Dataset::new(features, self.labels.clone(), self.attributes.clone())?;
        d.class_names = self.class_names.clone();
        d.metadata = self.metadata.clone();
        Ok(d)
    }

    /// Per-dimension z-scoring of the features. Zero-variance dimensions are
    /// only centered. Recorded in `metadata["standardized"]`.
    pub fn standardized(&self) -> Dataset {
        let (n, d) = self.features.shape();
        let mut mean = vec![0.0; d];
        for r in self.features.row_iter() {
            mean.iter_mut().zip(r).for_each(|(m, v)| *m += v / n as f64);
        }
        let mut sd = vec![0.0; d];
        for r in self.features.row_iter() {
            sd.iter_mut()
                .zip(r)
                .zip(&mean)
                .for_each(|((s, v), m)| *s += (v - m) * (v - m) / n as f64);
        }
        let sd: Vec<f64> = sd.iter().map(|v| if *v > 0.0 { v.sqrt() } else { 1.0 }).collect();
        let features = Matrix::from_fn(n, d, |i, j| (self.features[(i, j)] - mean[j]) / sd[j]);
        let mut out = self.clone();
        out.features = features;
        out.metadata.insert("standardized".into(), "true".into());
        out
    }
}
