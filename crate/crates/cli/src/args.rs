//! Command-line surface and config resolution.
//!
//! A JSON config file (if given) is read first; flags then override single fields.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use zsar_core::experiment::{HyperSpec, Regime, RunConfig};
use zsar_core::pipelines::{GzslMode, KernelChoice};
use zsar_core::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "zsar", version, about = "Attribute-to-Gaussian zero-shot recognition experiments")]
pub struct Cli {
    /// Print errors as a JSON object on stderr.
    #[arg(long, global = true)]
    pub error_json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the attribute-to-Gaussian map on seen classes and write it to disk.
    Fit(FitArgs),
    /// Evaluate a regime over many seen/unseen splits.
    Eval(EvalArgs),
    /// Write a planted synthetic dataset and its ground truth.
    SynthData(SynthArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Directory holding features.zsar, labels.csv and attributes.csv.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Attribute matrix, CSV or binary.
    #[arg(long)]
    pub attributes: Option<PathBuf>,
    /// Standardize every feature dimension to zero mean and unit variance.
    #[arg(long)]
    pub standardize: bool,
}

impl DataArgs {
    pub fn paths(&self) -> Result<[PathBuf; 3]> {
        let pick = |explicit: &Option<PathBuf>, default: &str, flag: &str| {
            explicit
                .clone()
                .or_else(|| self.data_dir.as_ref().map(|d| d.join(default)))
                .ok_or_else(|| Error::Config(format!("missing --{flag} (or --data-dir)")))
        };
        Ok([
            pick(&self.features, "features.zsar", "features")?,
            pick(&self.labels, "labels.csv", "labels")?,
            pick(&self.attributes, "attributes.csv", "attributes")?,
        ])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Auto,
    Rbf,
    Linear,
    Attributes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Inductive,
    Transductive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegimeArg {
    Zsl,
    ZslTransductive,
    Gzsl,
    FewShot,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Zsl => Regime::Zsl,
            RegimeArg::ZslTransductive => Regime::ZslTransductive,
            RegimeArg::Gzsl => Regime::Gzsl,
            RegimeArg::FewShot => Regime::FewShot,
        }
    }
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// JSON run config; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub kernel: Option<KernelArg>,
    /// RBF bandwidth; implies --kernel rbf.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long)]
    pub lambda_mu: Option<f64>,
    #[arg(long)]
    pub lambda_1: Option<f64>,
    #[arg(long)]
    pub lambda_sigma: Option<f64>,
    #[arg(long)]
    pub lambda_2: Option<f64>,
    #[arg(long)]
    pub em_max_iters: Option<usize>,
    #[arg(long)]
    pub em_rel_tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n_splits: Option<usize>,
    /// Seen classes per generated split.
    #[arg(long)]
    pub n_seen: Option<usize>,
    #[arg(long)]
    pub synth_count: Option<usize>,
    #[arg(long)]
    pub classifier_lambda: Option<f64>,
    /// Comma-separated shot counts, e.g. 2,3,4,5.
    #[arg(long, value_delimiter = ',')]
    pub shots: Option<Vec<usize>>,
    /// Source of unseen Gaussians for GZSL synthesis.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub cv_trials: Option<usize>,
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg: RunConfig = match &self.config {
            Some(p) => read_json(p)?,
            None => RunConfig::default(),
        };
        match (self.kernel, self.bandwidth) {
            (Some(KernelArg::Rbf) | None, Some(bandwidth)) => cfg.kernel = KernelChoice::Rbf { bandwidth },
            (Some(KernelArg::Rbf), None) => {
                return Err(Error::Config("--kernel rbf needs --bandwidth (or use --kernel auto)".into()))
            }
            (Some(k), Some(_)) => {
                return Err(Error::Config(format!("--bandwidth only applies to the rbf kernel, not {k:?}")))
            }
            (Some(KernelArg::Auto), None) => cfg.kernel = KernelChoice::Auto,
            (Some(KernelArg::Linear), None) => cfg.kernel = KernelChoice::Linear,
            (Some(KernelArg::Attributes), None) => cfg.kernel = KernelChoice::Attributes,
            (None, None) => {}
        }
        let lambdas = [self.lambda_mu, self.lambda_1, self.lambda_sigma, self.lambda_2];
        if lambdas.iter().any(Option::is_some) {
            let HyperSpec::Fixed(h) = &mut cfg.hyper else {
                return Err(Error::Config("lambda flags cannot override a hyperparameter grid".into()));
            };
            let fields = [&mut h.lambda_mu, &mut h.lambda_1, &mut h.lambda_sigma, &mut h.lambda_2];
            for (field, flag) in fields.into_iter().zip(lambdas) {
                if let Some(v) = flag {
                    *field = v;
                }
            }
        }
        set(&mut cfg.em.max_iters, self.em_max_iters);
        set(&mut cfg.em.rel_tol, self.em_rel_tol);
        set(&mut cfg.seed, self.seed);
        set(&mut cfg.n_splits, self.n_splits);
        if self.n_seen.is_some() {
            cfg.n_seen = self.n_seen;
        }
        set(&mut cfg.synth_count, self.synth_count);
        set(&mut cfg.classifier_lambda, self.classifier_lambda);
        set(&mut cfg.shots, self.shots.clone());
        set(&mut cfg.cv_trials, self.cv_trials);
        if let Some(m) = self.mode {
            cfg.gzsl_mode = match m {
                ModeArg::Inductive => GzslMode::Inductive,
                ModeArg::Transductive => GzslMode::Transductive,
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn set<T>(field: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *field = v;
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Comma-separated seen class ids; all classes when omitted.
    #[arg(long, value_delimiter = ',')]
    pub seen: Option<Vec<usize>>,
    /// Output parameter-map file.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the fit summary JSON here (it is always printed to stdout).
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, value_enum)]
    pub regime: RegimeArg,
    /// Splits CSV (split_id,class_id,role); generated from the config when omitted.
    #[arg(long)]
    pub splits: Option<PathBuf>,
    /// Report JSON path.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-split CSV path; defaults to the report path with a .csv extension.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Synthetic world JSON; built-in defaults when omitted.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}
