//! Hyperparameter selection by holding out a quarter of the seen classes.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{inductive_on_task, KernelChoice, ZslTask};
use crate::dataset::{Dataset, Split};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::regression::HyperParams;

/// Pseudo-splits of the seen classes: each trial holds out `⌈S/4⌉` of them.
pub fn validation_splits(split: &Split, n_trials: usize, seed: u64) -> Vec<Split> {
    let s = split.seen.len();
    let n_held = s.div_ceil(4);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_trials)
        .map(|t| {
            let mut classes = split.seen.clone();
            classes.shuffle(&mut rng);
            let held = classes.split_off(s - n_held);
            Split::new(t, classes, held, seed)
        })
        .collect()
}

pub fn cross_validate(
    ds: &Dataset,
    split: &Split,
    kernel: KernelChoice,
    grid: &[HyperParams],
    n_trials: usize,
    seed: u64,
) -> Result<HyperParams> {
    cross_validate_with(ds, split, kernel, grid, n_trials, seed, Exec::default())
}

/// Returns the grid point with the best mean validation accuracy; ties go to the earlier point.
pub fn cross_validate_with(
    ds: &Dataset,
    split: &Split,
    kernel: KernelChoice,
    grid: &[HyperParams],
    n_trials: usize,
    seed: u64,
    exec: Exec,
) -> Result<HyperParams> {
    if grid.is_empty() {
        return Err(Error::Config("cross-validation grid is empty".into()));
    }
    if split.seen.len() < 4 {
        return Err(Error::Config(format!(
            "cross-validation needs at least 4 seen classes, got {}",
            split.seen.len()
        )));
    }
    if n_trials == 0 {
        return Err(Error::Config("cross-validation needs at least one trial".into()));
    }
    split.validate(ds.n_classes())?;
    if grid.len() == 1 {
        return Ok(grid[0]);
    }
    let tasks = validation_splits(split, n_trials, seed)
        .iter()
        .map(|s| ZslTask::prepare(ds, s))
        .collect::<Result<Vec<_>>>()?;
    let scores = exec
        .map_indices(grid.len() * n_trials, |i| {
            let (g, t) = (i / n_trials, i % n_trials);
            inductive_on_task(&tasks[t], kernel, grid[g]).map(|r| r.unseen_acc)
        })
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    let mut best = (0, f64::NEG_INFINITY);
    for g in 0..grid.len() {
        let mean = scores[g * n_trials..(g + 1) * n_trials].iter().sum::<f64>() / n_trials as f64;
        if mean > best.1 {
            best = (g, mean);
        }
    }
    Ok(grid[best.0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partitions_are_deterministic_and_sized() {
        let split = Split::new(0, (0..10).collect(), vec![10, 11], 0);
        let a = validation_splits(&split, 5, 42);
        assert_eq!(a, validation_splits(&split, 5, 42));
        for s in &a {
            assert_eq!(s.unseen.len(), 3);
            assert_eq!(s.seen.len(), 7);
            assert!(s.unseen.iter().all(|c| !s.seen.contains(c)));
        }
    }
}
