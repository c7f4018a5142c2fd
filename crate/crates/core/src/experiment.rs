//! Multi-split evaluation driver.
//!
//! Splits are independent: each runs sequentially with seed `seed + split_id`,
//! splits may run concurrently, and results are aggregated in split order so
//! the report does not depend on scheduling.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Split};
use crate::em::EmConfig;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::metrics::{aggregate_reports, ExperimentReport};
use crate::pipelines::{
    cross_validate_with, run_few_shot_sweep, run_gzsl, run_inductive, run_transductive, GzslConfig, GzslMode,
    KernelChoice,
};
use crate::regression::HyperParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Zsl,
    ZslTransductive,
    Gzsl,
    FewShot,
}

impl Regime {
    pub const ALL: [Regime; 4] = [Regime::Zsl, Regime::ZslTransductive, Regime::Gzsl, Regime::FewShot];

    pub fn name(self) -> &'static str {
        match self {
            Regime::Zsl => "zsl",
            Regime::ZslTransductive => "zsl-transductive",
            Regime::Gzsl => "gzsl",
            Regime::FewShot => "few-shot",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Regime::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown regime {s:?}; expected zsl, zsl-transductive, gzsl or few-shot")))
    }
}

/// Fixed hyperparameters, or a grid resolved per split by cross-validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HyperSpec {
    Fixed(HyperParams),
    Grid(Vec<HyperParams>),
}

impl Default for HyperSpec {
    fn default() -> Self {
        HyperSpec::Fixed(HyperParams::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub kernel: KernelChoice,
    pub hyper: HyperSpec,
    pub em: EmConfig,
    pub synth_count: usize,
    pub classifier_lambda: f64,
    pub gzsl_mode: GzslMode,
    pub shots: Vec<usize>,
    pub n_splits: usize,
    /// Seen classes per generated split; `None` uses three quarters of the classes.
    pub n_seen: Option<usize>,
    pub cv_trials: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            kernel: KernelChoice::Auto,
            hyper: HyperSpec::default(),
            em: EmConfig::default(),
            synth_count: 200,
            classifier_lambda: 1.0,
            gzsl_mode: GzslMode::Transductive,
            shots: vec![2, 3, 4, 5],
            n_splits: 30,
            n_seen: None,
            cv_trials: 3,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        match &self.hyper {
            HyperSpec::Fixed(h) => h.validate()?,
            HyperSpec::Grid(g) if g.is_empty() => return Err(Error::Config("hyperparameter grid is empty".into())),
            HyperSpec::Grid(g) => g.iter().try_for_each(HyperParams::validate)?,
        }
        self.em.validate()?;
        if let KernelChoice::Rbf { bandwidth } = self.kernel {
            if !(bandwidth > 0.0 && bandwidth.is_finite()) {
                return Err(Error::Config(format!("rbf bandwidth must be positive, got {bandwidth}")));
            }
        }
        if self.synth_count < 1 {
            return Err(Error::Config("synth_count must be at least 1".into()));
        }
        if !(self.classifier_lambda > 0.0 && self.classifier_lambda.is_finite()) {
            return Err(Error::Config(format!(
                "classifier_lambda must be positive, got {}",
                self.classifier_lambda
            )));
        }
        if self.shots.is_empty() || self.shots.contains(&0) {
            return Err(Error::Config("shots must be a non-empty list of positive counts".into()));
        }
        if self.n_splits < 1 {
            return Err(Error::Config("n_splits must be at least 1".into()));
        }
        if self.cv_trials < 1 {
            return Err(Error::Config("cv_trials must be at least 1".into()));
        }
        Ok(())
    }

    /// Seen-class count for generated splits.
    pub fn seen_count(&self, n_classes: usize) -> usize {
        self.n_seen.unwrap_or_else(|| (n_classes * 3).div_ceil(4).min(n_classes.saturating_sub(1)))
    }

    pub fn split_seed(&self, split: &Split) -> u64 {
        self.seed.wrapping_add(split.id as u64)
    }
}

fn resolve_hyper(ds: &Dataset, split: &Split, cfg: &RunConfig, seed: u64) -> Result<HyperParams> {
    match &cfg.hyper {
        HyperSpec::Fixed(h) => Ok(*h),
        HyperSpec::Grid(grid) => {
            cross_validate_with(ds, split, cfg.kernel, grid, cfg.cv_trials, seed, Exec::Sequential)
        }
    }
}

/// One split under one regime.
pub fn run_split(ds: &Dataset, split: &Split, cfg: &RunConfig, regime: Regime) -> Result<ExperimentReport> {
    let seed = cfg.split_seed(split);
    let hyper = resolve_hyper(ds, split, cfg, seed)?;
    match regime {
        Regime::Zsl => run_inductive(ds, split, cfg.kernel, hyper),
        Regime::ZslTransductive => run_transductive(ds, split, cfg.kernel, hyper, &cfg.em),
        Regime::Gzsl => {
            let gz = GzslConfig {
                synth_count: cfg.synth_count,
                classifier_lambda: cfg.classifier_lambda,
                seed,
                mode: cfg.gzsl_mode,
                em: cfg.em,
            };
            run_gzsl(ds, split, cfg.kernel, hyper, &gz)
        }
        Regime::FewShot => run_few_shot_sweep(ds, split, cfg.kernel, hyper, &cfg.shots, seed),
    }
}

pub fn run_experiment(ds: &Dataset, splits: &[Split], cfg: &RunConfig, regime: Regime) -> Result<ExperimentReport> {
    run_experiment_with(ds, splits, cfg, regime, Exec::default())
}

/// Runs every split and aggregates; the report echoes the full config and regime.
/// On failure the error of the lowest-indexed failing split is returned.
pub fn run_experiment_with(
    ds: &Dataset,
    splits: &[Split],
    cfg: &RunConfig,
    regime: Regime,
    exec: Exec,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    if splits.is_empty() {
        return Err(Error::Config("no splits to evaluate".into()));
    }
    let reports = exec
        .map_slice(splits, |s| run_split(ds, s, cfg, regime))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut report = aggregate_reports(&reports)?;
    report.regime = regime.name().to_string();
    report.seed = cfg.seed;
    report.config_echo = serde_json::json!({
        "regime": regime,
        "config": cfg,
        "splits": splits,
    });
    Ok(report)
}
