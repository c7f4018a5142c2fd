//! Accuracy metrics, the GZSL harmonic mean, and multi-split reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean over classes of per-class accuracy. Classes with no truth examples are skipped.
pub fn mean_class_accuracy(predicted: &[usize], truth: &[usize], classes: &[usize]) -> Result<f64> {
    if classes.is_empty() {
        return Err(Error::Config("mean_class_accuracy: empty class list".into()));
    }
    if predicted.len() != truth.len() || truth.is_empty() {
        return Err(Error::dim(
            "mean_class_accuracy",
            format!("{} predictions for {} truth labels", predicted.len(), truth.len()),
        ));
    }
    let mut correct = BTreeMap::new();
    let mut total = BTreeMap::new();
    for &c in classes {
        correct.insert(c, 0usize);
        total.insert(c, 0usize);
    }
    for (&p, &t) in predicted.iter().zip(truth) {
        let Some(n) = total.get_mut(&t) else {
            return Err(Error::DataValidation(format!(
                "truth label {t} is not in the evaluated class list"
            )));
        };
        *n += 1;
        if p == t {
            *correct.get_mut(&t).unwrap() += 1;
        }
    }
    let (sum, present) = total
        .iter()
        .filter(|(_, &n)| n > 0)
        .fold((0.0, 0usize), |(s, k), (c, &n)| {
            (s + correct[c] as f64 / n as f64, k + 1)
        });
    Ok(sum / present as f64)
}

/// Fraction of correct predictions.
pub fn instance_accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() || truth.is_empty() {
        return Err(Error::dim(
            "instance_accuracy",
            format!("{} predictions for {} truth labels", predicted.len(), truth.len()),
        ));
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// `2su / (s + u)`, zero when both are zero.
pub fn harmonic_mean_gzsl(seen_acc: f64, unseen_acc: f64) -> f64 {
    if seen_acc + unseen_acc == 0.0 {
        0.0
    } else {
        2.0 * seen_acc * unseen_acc / (seen_acc + unseen_acc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotResult {
    pub shots: usize,
    pub unseen_acc: f64,
    pub unseen_acc_instance: f64,
}

/// Metrics from one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitResult {
    pub split_id: usize,
    pub seen_acc: Option<f64>,
    /// Per-class accuracy on unseen classes; for few-shot runs, the zero-shot starting point.
    pub unseen_acc: f64,
    pub harmonic_mean: Option<f64>,
    pub em_iterations: Option<usize>,
    pub seen_acc_instance: Option<f64>,
    pub unseen_acc_instance: f64,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub few_shot: Vec<ShotResult>,
}

impl SplitResult {
    pub fn zsl(split_id: usize, unseen_acc: f64, unseen_acc_instance: f64) -> Self {
        SplitResult {
            split_id,
            seen_acc: None,
            unseen_acc,
            harmonic_mean: None,
            em_iterations: None,
            seen_acc_instance: None,
            unseen_acc_instance,
            few_shot: Vec::new(),
        }
    }

    /// Named scalar metrics in a fixed order.
    pub fn metrics(&self) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        if let Some(v) = self.seen_acc {
            out.push(("seen_acc".to_string(), v));
        }
        out.push(("unseen_acc".to_string(), self.unseen_acc));
        if let Some(v) = self.harmonic_mean {
            out.push(("harmonic_mean".to_string(), v));
        }
        if let Some(v) = self.em_iterations {
            out.push(("em_iterations".to_string(), v as f64));
        }
        if let Some(v) = self.seen_acc_instance {
            out.push(("seen_acc_instance".to_string(), v));
        }
        out.push(("unseen_acc_instance".to_string(), self.unseen_acc_instance));
        for s in &self.few_shot {
            out.push((format!("few_shot_{}_acc", s.shots), s.unseen_acc));
            out.push((format!("few_shot_{}_acc_instance", s.shots), s.unseen_acc_instance));
        }
        out
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in self.metrics() {
            if name != "em_iterations" && !(0.0..=1.0).contains(&v) {
                return Err(Error::DataValidation(format!(
                    "split {}: {name} = {v} outside [0, 1]",
                    self.split_id
                )));
            }
        }
        if self.harmonic_mean.is_some() != (self.seen_acc.is_some()) {
            return Err(Error::DataValidation(format!(
                "split {}: harmonic mean requires both seen and unseen accuracy",
                self.split_id
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub regime: String,
    pub per_split: Vec<SplitResult>,
    pub aggregate: BTreeMap<String, MetricSummary>,
    pub config_echo: serde_json::Value,
    pub seed: u64,
}

impl ExperimentReport {
    pub fn single(
        regime: &str,
        result: SplitResult,
        config_echo: serde_json::Value,
        seed: u64,
    ) -> Result<Self> {
        build_report(regime.to_string(), vec![result], config_echo, seed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report values are finite")
    }

    /// `split_id,metric,value` rows for plotting.
    pub fn per_split_csv(&self) -> String {
        let mut out = String::from("split_id,metric,value\n");
        for s in &self.per_split {
            for (name, v) in s.metrics() {
                out.push_str(&format!("{},{name},{v:?}\n", s.split_id));
            }
        }
        out
    }
}

fn build_report(
    regime: String,
    per_split: Vec<SplitResult>,
    config_echo: serde_json::Value,
    seed: u64,
) -> Result<ExperimentReport> {
    let first = per_split
        .first()
        .ok_or_else(|| Error::Config("cannot aggregate zero splits".into()))?;
    let names: Vec<String> = first.metrics().into_iter().map(|(n, _)| n).collect();
    let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(per_split.len()); names.len()];
    for s in &per_split {
        s.validate()?;
        let m = s.metrics();
        if m.len() != names.len() || m.iter().zip(&names).any(|((a, _), b)| a != b) {
            return Err(Error::DataValidation(format!(
                "split {} reports a different metric set than split {}",
                s.split_id, first.split_id
            )));
        }
        for (col, (_, v)) in columns.iter_mut().zip(m) {
            col.push(v);
        }
    }
    let aggregate = names
        .into_iter()
        .zip(columns)
        .map(|(n, col)| (n, summarize(&col)))
        .collect();
    Ok(ExperimentReport {
        regime,
        per_split,
        aggregate,
        config_echo,
        seed,
    })
}

/// Mean and sample standard deviation (n − 1; zero for a single value).
pub fn summarize(values: &[f64]) -> MetricSummary {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    MetricSummary { mean, std }
}

/// Merges single- or multi-split reports into one, recomputing the aggregate.
/// Regime, config and seed are taken from the first report.
pub fn aggregate_reports(reports: &[ExperimentReport]) -> Result<ExperimentReport> {
    let first = reports
        .first()
        .ok_or_else(|| Error::Config("cannot aggregate zero reports".into()))?;
    let per_split = reports.iter().flat_map(|r| r.per_split.clone()).collect();
    build_report(
        first.regime.clone(),
        per_split,
        first.config_echo.clone(),
        first.seed,
    )
}
