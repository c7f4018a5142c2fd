//! End-to-end procedures: inductive and transductive zero-shot
//! classification, generalized zero-shot with synthesized pseudo-examples,
//! few-shot updates, and hyperparameter cross-validation.

mod cv;
mod few_shot;
mod gzsl;
mod ovr;

pub use cv::{cross_validate, cross_validate_with, validation_splits};
pub use few_shot::{run_few_shot, run_few_shot_sweep};
pub use gzsl::{run_gzsl, run_gzsl_without_synthesis, score_gzsl, GzslConfig, GzslMode, GzslScores};
pub use ovr::{train_linear_ovr, GzslClassifier};

use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Split};
use crate::em::{em_refine, EmConfig, EmResult};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::gaussian::{ClassGaussian, LabeledBatch, Scorer};
use crate::linalg::{median_bandwidth, KernelSpec, Matrix};
use crate::metrics::{instance_accuracy, mean_class_accuracy, ExperimentReport, SplitResult};
use crate::regression::{fit_param_map, fit_param_map_linear, predict_unseen, HyperParams, ParamMap};

/// How class attributes are fed to the parameter regression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelChoice {
    /// RBF with the median pairwise distance of the seen attributes as bandwidth.
    #[default]
    Auto,
    Rbf { bandwidth: f64 },
    Linear,
    /// Linear regression directly on the attribute vectors.
    Attributes,
}

impl KernelChoice {
    pub fn fit(&self, seen: &[ClassGaussian], seen_attrs: &Matrix, hyper: HyperParams) -> Result<ParamMap> {
        match *self {
            KernelChoice::Auto => {
                let bw = median_bandwidth(seen_attrs)?;
                fit_param_map(seen, seen_attrs, KernelSpec::rbf(bw)?, hyper)
            }
            KernelChoice::Rbf { bandwidth } => {
                fit_param_map(seen, seen_attrs, KernelSpec::rbf(bandwidth)?, hyper)
            }
            KernelChoice::Linear => fit_param_map(seen, seen_attrs, KernelSpec::Linear, hyper),
            KernelChoice::Attributes => fit_param_map_linear(seen, seen_attrs, hyper),
        }
    }
}

/// Ground-truth labels of an evaluation pool, readable only through scoring.
/// Every read is counted so tests can audit that labels are not consulted
/// before predictions exist.
#[derive(Debug)]
pub struct ScoringKey {
    truth: Vec<usize>,
    reads: AtomicUsize,
}

impl ScoringKey {
    fn new(truth: Vec<usize>) -> Self {
        ScoringKey {
            truth,
            reads: AtomicUsize::new(0),
        }
    }

    pub fn len(&self) -> usize {
        self.truth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.truth.is_empty()
    }

    pub fn reads(&self) -> usize {
        self.reads.load(Ordering::SeqCst)
    }

    fn truth(&self) -> &[usize] {
        self.reads.fetch_add(1, Ordering::SeqCst);
        &self.truth
    }

    /// `(per-class accuracy, per-instance accuracy)` over classes `0..n_classes`.
    pub fn score(&self, predicted: &[usize], n_classes: usize) -> Result<(f64, f64)> {
        let truth = self.truth();
        let classes: Vec<usize> = (0..n_classes).collect();
        Ok((
            mean_class_accuracy(predicted, truth, &classes)?,
            instance_accuracy(predicted, truth)?,
        ))
    }
}

/// Seen-class training data and the unlabeled unseen-class pool for one split.
/// Class indices are local: seen `0..S`, unseen `0..U`, in split order.
#[derive(Debug)]
pub struct ZslTask {
    pub split: Split,
    pub seen: LabeledBatch,
    pub seen_attrs: Matrix,
    pub unseen_attrs: Matrix,
    pub unseen_features: Matrix,
    pub unseen_key: ScoringKey,
    /// Dataset row of every unseen-pool row.
    pub unseen_rows: Vec<usize>,
}

fn local_index(classes: &[usize], n_classes: usize) -> Vec<Option<usize>> {
    let mut map = vec![None; n_classes];
    for (i, &c) in classes.iter().enumerate() {
        map[c] = Some(i);
    }
    map
}

/// Checks the split and that every seen class has at least `min_seen` examples.
pub(crate) fn validate_split(ds: &Dataset, split: &Split, min_seen: usize) -> Result<()> {
    split.validate(ds.n_classes())?;
    let counts = ds.class_counts();
    let short: Vec<String> = split
        .seen
        .iter()
        .filter(|&&c| counts[c] < min_seen)
        .map(|&c| format!("{c} ({} examples)", counts[c]))
        .collect();
    if !short.is_empty() {
        return Err(Error::DataValidation(format!(
            "seen classes need at least {min_seen} examples; offending: {}",
            short.join(", ")
        )));
    }
    let empty_unseen: Vec<String> = split
        .unseen
        .iter()
        .filter(|&&c| counts[c] == 0)
        .map(|c| c.to_string())
        .collect();
    if !empty_unseen.is_empty() {
        return Err(Error::DataValidation(format!(
            "unseen classes have no test examples: {}",
            empty_unseen.join(", ")
        )));
    }
    Ok(())
}

impl ZslTask {
    /// All seen-class rows train; all unseen-class rows form the test pool.
    pub fn prepare(ds: &Dataset, split: &Split) -> Result<Self> {
        validate_split(ds, split, 1)?;
        let seen_idx = local_index(&split.seen, ds.n_classes());
        let unseen_idx = local_index(&split.unseen, ds.n_classes());
        let mut seen_rows = Vec::new();
        let mut seen_labels = Vec::new();
        let mut unseen_rows = Vec::new();
        let mut unseen_truth = Vec::new();
        for (row, &label) in ds.labels().iter().enumerate() {
            if let Some(s) = seen_idx[label] {
                seen_rows.push(row);
                seen_labels.push(s);
            } else if let Some(u) = unseen_idx[label] {
                unseen_rows.push(row);
                unseen_truth.push(u);
            }
        }
        Ok(ZslTask {
            split: split.clone(),
            seen: LabeledBatch::new(
                ds.features().select_rows(&seen_rows),
                seen_labels,
                split.seen.len(),
            )?,
            seen_attrs: ds.attributes().select_rows(&split.seen),
            unseen_attrs: ds.attributes().select_rows(&split.unseen),
            unseen_features: ds.features().select_rows(&unseen_rows),
            unseen_key: ScoringKey::new(unseen_truth),
            unseen_rows,
        })
    }

    pub fn n_unseen(&self) -> usize {
        self.split.unseen.len()
    }

    /// Seen MLEs → parameter map → predicted unseen Gaussians.
    pub fn predict_unseen(&self, kernel: KernelChoice, hyper: HyperParams) -> Result<(ParamMap, Vec<ClassGaussian>)> {
        let seen = self.seen.fit_all().map_err(|e| match e {
            Error::EmptyClass { class } => Error::DataValidation(format!(
                "seen class {} has no examples",
                self.split.seen[class]
            )),
            other => other,
        })?;
        let map = kernel.fit(&seen, &self.seen_attrs, hyper)?;
        let unseen = predict_unseen(&map, &self.unseen_attrs)?;
        Ok((map, unseen))
    }

    fn score_unseen(&self, gaussians: &[ClassGaussian]) -> Result<(f64, f64)> {
        let local: Vec<usize> = (0..gaussians.len()).collect();
        let pred = zsl_classify(&self.unseen_features, gaussians, &local)?;
        self.unseen_key.score(&pred, self.n_unseen())
    }
}

pub(crate) fn argmax_first(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Assigns each row to the class of highest log-density; ties go to the lowest index.
pub fn zsl_classify(test_features: &Matrix, gaussians: &[ClassGaussian], class_ids: &[usize]) -> Result<Vec<usize>> {
    zsl_classify_with(test_features, gaussians, class_ids, Exec::default())
}

pub fn zsl_classify_with(
    test_features: &Matrix,
    gaussians: &[ClassGaussian],
    class_ids: &[usize],
    exec: Exec,
) -> Result<Vec<usize>> {
    if gaussians.is_empty() {
        return Err(Error::Config("zsl_classify: no classes".into()));
    }
    if class_ids.len() != gaussians.len() {
        return Err(Error::dim(
            "zsl_classify",
            format!("{} class ids for {} gaussians", class_ids.len(), gaussians.len()),
        ));
    }
    if let Some(bad) = gaussians.iter().position(|g| g.dim() != test_features.cols()) {
        return Err(Error::dim(
            "zsl_classify",
            format!("class {bad} has dim {}, features have {}", gaussians[bad].dim(), test_features.cols()),
        ));
    }
    let scorers: Vec<Scorer> = gaussians.iter().map(Scorer::new).collect();
    Ok(exec.map_indices(test_features.rows(), |i| {
        let x = test_features.row(i);
        let scores: Vec<f64> = scorers.iter().map(|s| s.log_density(x)).collect();
        class_ids[argmax_first(&scores)]
    }))
}

pub fn run_inductive(ds: &Dataset, split: &Split, kernel: KernelChoice, hyper: HyperParams) -> Result<ExperimentReport> {
    let task = ZslTask::prepare(ds, split)?;
    let result = inductive_on_task(&task, kernel, hyper)?;
    ExperimentReport::single(
        "zsl",
        result,
        serde_json::json!({ "kernel": kernel, "hyper": hyper }),
        split.seed,
    )
}

pub fn inductive_on_task(task: &ZslTask, kernel: KernelChoice, hyper: HyperParams) -> Result<SplitResult> {
    let (_, unseen) = task.predict_unseen(kernel, hyper)?;
    let (acc, inst) = task.score_unseen(&unseen)?;
    Ok(SplitResult::zsl(task.split.id, acc, inst))
}

/// Transductive outcome: the split metrics plus the EM trace.
#[derive(Debug, Clone)]
pub struct TransductiveOutcome {
    pub result: SplitResult,
    pub em: EmResult,
}

pub fn run_transductive(
    ds: &Dataset,
    split: &Split,
    kernel: KernelChoice,
    hyper: HyperParams,
    em_cfg: &EmConfig,
) -> Result<ExperimentReport> {
    let task = ZslTask::prepare(ds, split)?;
    let out = transductive_on_task(&task, kernel, hyper, em_cfg)?;
    ExperimentReport::single(
        "zsl-transductive",
        out.result,
        serde_json::json!({ "kernel": kernel, "hyper": hyper, "em": em_cfg }),
        split.seed,
    )
}

pub fn transductive_on_task(
    task: &ZslTask,
    kernel: KernelChoice,
    hyper: HyperParams,
    em_cfg: &EmConfig,
) -> Result<TransductiveOutcome> {
    let (_, init) = task.predict_unseen(kernel, hyper)?;
    let em = em_refine(&task.unseen_features, &init, em_cfg)?;
    let (acc, inst) = task.score_unseen(&em.gaussians)?;
    let mut result = SplitResult::zsl(task.split.id, acc, inst);
    result.em_iterations = Some(em.iterations_run);
    Ok(TransductiveOutcome { result, em })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(mean: Vec<f64>, var: f64) -> ClassGaussian {
        let d = mean.len();
        ClassGaussian::from_variance(mean, &vec![var; d]).unwrap()
    }

    #[test]
    fn classify_at_mean_and_ties() {
        let gs = [g(vec![0.0, 0.0], 1.0), g(vec![3.0, 1.0], 1.0), g(vec![-2.0, 5.0], 1.0)];
        let x = Matrix::from_rows(&[[3.0, 1.0], [-2.0, 5.0], [0.0, 0.0]]).unwrap();
        assert_eq!(zsl_classify(&x, &gs, &[10, 11, 12]).unwrap(), vec![11, 12, 10]);
        let same = [g(vec![1.0], 2.0), g(vec![1.0], 2.0)];
        assert_eq!(zsl_classify(&Matrix::from_rows(&[[0.3]]).unwrap(), &same, &[4, 9]).unwrap(), vec![4]);
        assert!(zsl_classify(&x, &[], &[]).is_err());
    }

    #[test]
    fn exec_strategies_agree() {
        let gs = [g(vec![0.0, 0.0], 1.0), g(vec![1.0, 1.0], 0.5)];
        let x = Matrix::from_fn(500, 2, |i, j| ((i * 7 + j * 3) % 11) as f64 / 5.0 - 1.0);
        assert_eq!(
            zsl_classify_with(&x, &gs, &[0, 1], Exec::Sequential).unwrap(),
            zsl_classify_with(&x, &gs, &[0, 1], Exec::Parallel).unwrap()
        );
    }

    #[test]
    fn empty_seen_class_is_reported() {
        let f = Matrix::from_rows(&[[0.0], [1.0], [2.0]]).unwrap();
        let ds = Dataset::new(f, vec![0, 0, 2], Matrix::identity(3)).unwrap();
        let split = Split::new(0, vec![0, 1], vec![2], 0);
        match ZslTask::prepare(&ds, &split) {
            Err(Error::DataValidation(msg)) => assert!(msg.contains("1 (0 examples)"), "{msg}"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn overlapping_split_rejected() {
        let f = Matrix::from_rows(&[[0.0], [1.0], [2.0]]).unwrap();
        let ds = Dataset::new(f, vec![0, 1, 2], Matrix::identity(3)).unwrap();
        assert!(ZslTask::prepare(&ds, &Split::new(0, vec![0, 1], vec![1, 2], 0)).is_err());
    }
}
