//! Few-shot recognition: predicted unseen Gaussians refined with a handful
//! of labeled examples per unseen class.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{validate_split, zsl_classify, KernelChoice, ZslTask};
use crate::dataset::{Dataset, Split};
use crate::error::{Error, Result};
use crate::gaussian::{few_shot_update, ClassGaussian};
use crate::metrics::{instance_accuracy, mean_class_accuracy, ExperimentReport, ShotResult, SplitResult};
use crate::regression::HyperParams;

pub fn run_few_shot(
    ds: &Dataset,
    split: &Split,
    kernel: KernelChoice,
    hyper: HyperParams,
    shots_per_class: usize,
    seed: u64,
) -> Result<ExperimentReport> {
    run_few_shot_sweep(ds, split, kernel, hyper, &[shots_per_class], seed)
}

/// Each unseen class is shuffled once; a run with `n` shots takes the first
/// `n` rows. The largest prefix is removed from the evaluation pool so every
/// shot count (and the zero-shot baseline) is scored on the same rows.
pub fn run_few_shot_sweep(
    ds: &Dataset,
    split: &Split,
    kernel: KernelChoice,
    hyper: HyperParams,
    shots: &[usize],
    seed: u64,
) -> Result<ExperimentReport> {
    let max_shots = shots.iter().copied().max().ok_or_else(|| Error::Config("no shot counts given".into()))?;
    if max_shots == 0 {
        return Err(Error::Config("shot counts must be at least 1".into()));
    }
    validate_split(ds, split, 1)?;
    let counts = ds.class_counts();
    let short: Vec<String> = split
        .unseen
        .iter()
        .filter(|&&c| counts[c] <= max_shots)
        .map(|&c| format!("{c} ({} examples)", counts[c]))
        .collect();
    if !short.is_empty() {
        return Err(Error::DataValidation(format!(
            "unseen classes need more than {max_shots} examples for {max_shots} shots plus a test pool; offending: {}",
            short.join(", ")
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shot_rows = Vec::with_capacity(split.unseen.len());
    let mut pool_rows = Vec::new();
    let mut pool_truth = Vec::new();
    for (u, &c) in split.unseen.iter().enumerate() {
        let mut rows = ds.rows_of_class(c);
        rows.shuffle(&mut rng);
        let mut rest = rows.split_off(max_shots);
        rest.sort_unstable();
        pool_truth.extend(std::iter::repeat_n(u, rest.len()));
        pool_rows.extend(rest);
        shot_rows.push(rows);
    }
    let pool = ds.features().select_rows(&pool_rows);
    let local: Vec<usize> = (0..split.unseen.len()).collect();
    let score = |gs: &[ClassGaussian]| -> Result<(f64, f64)> {
        let pred = zsl_classify(&pool, gs, &local)?;
        Ok((
            mean_class_accuracy(&pred, &pool_truth, &local)?,
            instance_accuracy(&pred, &pool_truth)?,
        ))
    };

    let task = ZslTask::prepare(ds, split)?;
    let (_, prior) = task.predict_unseen(kernel, hyper)?;
    let (zero_acc, zero_inst) = score(&prior)?;
    let mut result = SplitResult::zsl(split.id, zero_acc, zero_inst);
    for &n in shots {
        let updated = if n == 0 {
            prior.clone()
        } else {
            prior
                .iter()
                .zip(&shot_rows)
                .map(|(g, rows)| few_shot_update(g, &ds.features().select_rows(&rows[..n])))
                .collect::<Result<Vec<_>>>()?
        };
        let (acc, inst) = score(&updated)?;
        result.few_shot.push(ShotResult {
            shots: n,
            unseen_acc: acc,
            unseen_acc_instance: inst,
        });
    }
    ExperimentReport::single(
        "few-shot",
        result,
        serde_json::json!({ "kernel": kernel, "hyper": hyper, "shots": shots }),
        seed,
    )
}
