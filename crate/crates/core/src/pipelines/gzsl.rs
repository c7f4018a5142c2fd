//! Generalized zero-shot: test rows may come from seen or unseen classes.
//!
//! Seen data is split 80/20 per class. Predicted (optionally EM-refined)
//! unseen Gaussians are sampled to produce labeled pseudo-examples, and a
//! one-vs-rest classifier is trained over seen-train plus pseudo data.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{train_linear_ovr, validate_split, KernelChoice, ZslTask};
use crate::dataset::{Dataset, Split};
use crate::em::{em_refine, EmConfig};
use crate::error::{Error, Result};
use crate::gaussian::{sample, LabeledBatch};
use crate::linalg::Matrix;
use crate::metrics::{harmonic_mean_gzsl, instance_accuracy, mean_class_accuracy, ExperimentReport, SplitResult};
use crate::regression::HyperParams;

/// Fraction of each seen class held out for testing.
pub const SEEN_TEST_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GzslMode {
    Inductive,
    #[default]
    Transductive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GzslConfig {
    pub synth_count: usize,
    pub classifier_lambda: f64,
    pub seed: u64,
    pub mode: GzslMode,
    pub em: EmConfig,
}

impl Default for GzslConfig {
    fn default() -> Self {
        GzslConfig {
            synth_count: 200,
            classifier_lambda: 1.0,
            seed: 0,
            mode: GzslMode::default(),
            em: EmConfig::default(),
        }
    }
}

/// Seen/unseen accuracies and their harmonic mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GzslScores {
    pub seen_acc: f64,
    pub unseen_acc: f64,
    pub harmonic_mean: f64,
    pub seen_acc_instance: f64,
    pub unseen_acc_instance: f64,
}

/// Scores the two test pools. Predictions are over the union of classes, so a
/// seen row predicted as an unseen class counts as wrong.
pub fn score_gzsl(
    seen_pred: &[usize],
    seen_truth: &[usize],
    unseen_pred: &[usize],
    unseen_truth: &[usize],
    seen_classes: &[usize],
    unseen_classes: &[usize],
) -> Result<GzslScores> {
    let seen_acc = mean_class_accuracy(seen_pred, seen_truth, seen_classes)?;
    let unseen_acc = mean_class_accuracy(unseen_pred, unseen_truth, unseen_classes)?;
    Ok(GzslScores {
        seen_acc,
        unseen_acc,
        harmonic_mean: harmonic_mean_gzsl(seen_acc, unseen_acc),
        seen_acc_instance: instance_accuracy(seen_pred, seen_truth)?,
        unseen_acc_instance: instance_accuracy(unseen_pred, unseen_truth)?,
    })
}

struct GzslData {
    task: ZslTask,
    seen_test: Matrix,
    seen_test_truth: Vec<usize>,
}

/// Per-class seeded 80/20 split of the seen rows; the task's seen batch holds the 80%.
fn prepare(ds: &Dataset, split: &Split, seed: u64) -> Result<GzslData> {
    validate_split(ds, split, 5)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_rows = Vec::new();
    let mut train_labels = Vec::new();
    let mut test_rows = Vec::new();
    let mut test_truth = Vec::new();
    for (s, &c) in split.seen.iter().enumerate() {
        let mut rows = ds.rows_of_class(c);
        rows.shuffle(&mut rng);
        let n_test = ((rows.len() as f64 * SEEN_TEST_FRACTION).round() as usize).clamp(1, rows.len() - 1);
        let (test, train) = rows.split_at(n_test);
        let mut test = test.to_vec();
        let mut train = train.to_vec();
        test.sort_unstable();
        train.sort_unstable();
        train_labels.extend(std::iter::repeat_n(s, train.len()));
        train_rows.extend(train);
        test_truth.extend(std::iter::repeat_n(s, test.len()));
        test_rows.extend(test);
    }
    let mut task = ZslTask::prepare(ds, split)?;
    task.seen = LabeledBatch::new(
        ds.features().select_rows(&train_rows),
        train_labels,
        split.seen.len(),
    )?;
    Ok(GzslData {
        task,
        seen_test: ds.features().select_rows(&test_rows),
        seen_test_truth: test_truth,
    })
}

fn derive_seed(seed: u64, stream: u64) -> u64 {
    seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn evaluate(
    data: &GzslData,
    features: &Matrix,
    labels: &[usize],
    n_classes: usize,
    lambda: f64,
) -> Result<GzslScores> {
    let s = data.task.split.seen.len();
    let u = data.task.n_unseen();
    let clf = train_linear_ovr(features, labels, n_classes, lambda)?;
    let seen_pred = clf.predict(&data.seen_test)?;
    let unseen_pred = clf.predict(&data.task.unseen_features)?;
    // unseen truth is local 0..U; shift into the joint index space S..S+U
    let unseen_truth: Vec<usize> = data
        .task
        .unseen_key
        .truth()
        .iter()
        .map(|&t| s + t)
        .collect();
    let seen_classes: Vec<usize> = (0..s).collect();
    let unseen_classes: Vec<usize> = (s..s + u).collect();
    score_gzsl(
        &seen_pred,
        &data.seen_test_truth,
        &unseen_pred,
        &unseen_truth,
        &seen_classes,
        &unseen_classes,
    )
}

fn to_result(split_id: usize, sc: GzslScores, em_iterations: Option<usize>) -> SplitResult {
    SplitResult {
        split_id,
        seen_acc: Some(sc.seen_acc),
        unseen_acc: sc.unseen_acc,
        harmonic_mean: Some(sc.harmonic_mean),
        em_iterations,
        seen_acc_instance: Some(sc.seen_acc_instance),
        unseen_acc_instance: sc.unseen_acc_instance,
        few_shot: Vec::new(),
    }
}

pub fn run_gzsl(
    ds: &Dataset,
    split: &Split,
    kernel: KernelChoice,
    hyper: HyperParams,
    cfg: &GzslConfig,
) -> Result<ExperimentReport> {
    if cfg.synth_count < 1 {
        return Err(Error::Config("synth_count must be at least 1".into()));
    }
    let data = prepare(ds, split, cfg.seed)?;
    let (_, mut unseen) = data.task.predict_unseen(kernel, hyper)?;
    let mut em_iterations = None;
    if cfg.mode == GzslMode::Transductive {
        let em = em_refine(&data.task.unseen_features, &unseen, &cfg.em)?;
        em_iterations = Some(em.iterations_run);
        unseen = em.gaussians;
    }

    let s = split.seen.len();
    let mut features = data.task.seen.features().clone();
    let mut labels = data.task.seen.labels().to_vec();
    for (u, g) in unseen.iter().enumerate() {
        let pseudo = sample(g, cfg.synth_count, derive_seed(cfg.seed, u as u64))?;
        features = features.vstack(&pseudo)?;
        labels.extend(std::iter::repeat_n(s + u, cfg.synth_count));
    }
    let scores = evaluate(&data, &features, &labels, s + unseen.len(), cfg.classifier_lambda)?;
    ExperimentReport::single(
        "gzsl",
        to_result(split.id, scores, em_iterations),
        serde_json::json!({ "kernel": kernel, "hyper": hyper, "gzsl": cfg }),
        cfg.seed,
    )
}

/// Same protocol with no pseudo-examples: the classifier only knows seen
/// classes, so no unseen row can be classified correctly.
pub fn run_gzsl_without_synthesis(ds: &Dataset, split: &Split, cfg: &GzslConfig) -> Result<ExperimentReport> {
    let data = prepare(ds, split, cfg.seed)?;
    let s = split.seen.len();
    let scores = evaluate(
        &data,
        data.task.seen.features(),
        data.task.seen.labels(),
        s,
        cfg.classifier_lambda,
    )?;
    ExperimentReport::single(
        "gzsl-no-synthesis",
        to_result(split.id, scores, None),
        serde_json::json!({ "gzsl": cfg }),
        cfg.seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn swapping_pools_swaps_accuracies() {
        let sp = [0, 1, 1, 0];
        let st = [0, 1, 0, 0];
        let up = [2, 3, 2];
        let ut = [2, 3, 3];
        let a = score_gzsl(&sp, &st, &up, &ut, &[0, 1], &[2, 3]).unwrap();
        let b = score_gzsl(&up, &ut, &sp, &st, &[2, 3], &[0, 1]).unwrap();
        assert_eq!(a.seen_acc, b.unseen_acc);
        assert_eq!(a.unseen_acc, b.seen_acc);
        assert_eq!(a.harmonic_mean, b.harmonic_mean);
        assert!((a.harmonic_mean - harmonic_mean_gzsl(a.seen_acc, a.unseen_acc)).abs() < 1e-12);
    }

    #[test]
    fn needs_five_per_seen_class() {
        let f = Matrix::from_fn(12, 1, |i, _| i as f64);
        let labels = vec![0, 0, 0, 0, 1, 1, 1, 1, 1, 2, 2, 2];
        let ds = Dataset::new(f, labels, Matrix::identity(3)).unwrap();
        let split = Split::new(0, vec![0, 1], vec![2], 0);
        assert!(matches!(
            run_gzsl(&ds, &split, KernelChoice::Linear, HyperParams::default(), &GzslConfig::default()),
            Err(Error::DataValidation(_))
        ));
        let cfg = GzslConfig { synth_count: 0, ..GzslConfig::default() };
        assert!(matches!(
            run_gzsl(&ds, &split, KernelChoice::Linear, HyperParams::default(), &cfg),
            Err(Error::Config(_))
        ));
    }
}
