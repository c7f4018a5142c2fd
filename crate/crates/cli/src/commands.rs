//! Subcommand implementations.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;
use zsar_core::dataset::{
    generate_splits, generate_synthetic, load_dataset, random_w_true, read_splits, save_dataset, write_param_map,
    AttributeScheme, Dataset, SyntheticWorldSpec,
};
use zsar_core::experiment::{run_experiment, HyperSpec};
use zsar_core::gaussian::LabeledBatch;
use zsar_core::{Error, Matrix, Result};

use crate::args::{read_json, DataArgs, EvalArgs, FitArgs, SynthArgs};

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn pretty(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable values are finite");
    s.push('\n');
    s
}

fn load(data: &DataArgs) -> Result<(Dataset, serde_json::Value)> {
    let [f, l, a] = data.paths()?;
    let mut ds = load_dataset(&f, &l, &a)?;
    if data.standardize {
        ds = ds.standardized();
    }
    log::info!(
        "loaded {} rows, {} classes, D={}, K={}",
        ds.n_examples(),
        ds.n_classes(),
        ds.feature_dim(),
        ds.attribute_dim()
    );
    let echo = json!({
        "features": f,
        "labels": l,
        "attributes": a,
        "standardize": data.standardize,
    });
    Ok((ds, echo))
}

pub fn fit(args: &FitArgs) -> Result<()> {
    let cfg = args.config.resolve()?;
    let HyperSpec::Fixed(hyper) = cfg.hyper else {
        return Err(Error::Config("fit needs fixed hyperparameters; grids are resolved by eval".into()));
    };
    let (ds, data_echo) = load(&args.data)?;
    let seen: Vec<usize> = args.seen.clone().unwrap_or_else(|| (0..ds.n_classes()).collect());
    let mut local = vec![None; ds.n_classes()];
    for (i, &c) in seen.iter().enumerate() {
        if c >= ds.n_classes() {
            return Err(Error::Config(format!("seen class {c} out of range for {} classes", ds.n_classes())));
        }
        if local[c].replace(i).is_some() {
            return Err(Error::Config(format!("seen class {c} listed twice")));
        }
    }
    let rows: Vec<usize> = (0..ds.n_examples()).filter(|&r| local[ds.labels()[r]].is_some()).collect();
    let labels = rows.iter().map(|&r| local[ds.labels()[r]].unwrap()).collect();
    let batch = LabeledBatch::new(ds.features().select_rows(&rows), labels, seen.len())?;
    let gaussians = batch.fit_all().map_err(|e| match e {
        Error::EmptyClass { class } => Error::DataValidation(format!("seen class {} has no examples", seen[class])),
        other => other,
    })?;
    let seen_attrs = ds.attributes().select_rows(&seen);
    let map = cfg.kernel.fit(&gaussians, &seen_attrs, hyper)?;
    write_param_map(&args.out, &map)?;

    let summary = json!({
        "model": args.out,
        "seen_classes": seen,
        "basis": map.basis,
        "hyper": map.hyper,
        "residuals": map.residuals,
        "reconstruction_error": map.reconstruction_error(&gaussians)?,
        "feature_dim": map.feature_dim(),
        "attribute_dim": map.attribute_dim(),
        "config": cfg,
        "data": data_echo,
    });
    let text = pretty(&summary);
    if let Some(p) = &args.summary {
        write(p, &text)?;
    }
    print!("{text}");
    Ok(())
}

pub fn eval(args: &EvalArgs) -> Result<()> {
    let cfg = args.config.resolve()?;
    let (ds, data_echo) = load(&args.data)?;
    let splits = match &args.splits {
        Some(p) => {
            let s = read_splits(p)?;
            if s.is_empty() {
                return Err(Error::Config(format!("{}: no splits", p.display())));
            }
            s
        }
        None => generate_splits(ds.n_classes(), cfg.seen_count(ds.n_classes()), cfg.n_splits, cfg.seed)?,
    };
    let regime = args.regime.into();
    log::info!("evaluating {regime} over {} splits", splits.len());
    let mut report = run_experiment(&ds, &splits, &cfg, regime)?;
    report.config_echo["data"] = data_echo;
    write(&args.out, format!("{}\n", report.to_json()))?;
    let csv = args.csv.clone().unwrap_or_else(|| args.out.with_extension("csv"));
    write(&csv, report.per_split_csv())?;
    for (name, s) in &report.aggregate {
        println!("{name}\t{:.4} ± {:.4}", s.mean, s.std);
    }
    Ok(())
}

/// Synthetic-world description accepted by `synth-data`. Give either
/// `w_true` (D rows of K values) or `w_scale` (random N(0, w_scale²) entries).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub n_classes: usize,
    pub dim_d: usize,
    pub dim_k: usize,
    pub w_true: Option<Vec<Vec<f64>>>,
    pub w_scale: f64,
    pub noise_scale: f64,
    pub examples_per_class: usize,
    pub attribute_scheme: AttributeScheme,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_classes: 25,
            dim_d: 16,
            dim_k: 8,
            w_true: None,
            w_scale: 2.0,
            noise_scale: 1.0,
            examples_per_class: 100,
            attribute_scheme: AttributeScheme::RandomUnit,
            seed: 0,
        }
    }
}

impl SynthSpec {
    fn world(&self) -> Result<SyntheticWorldSpec> {
        let w_true = match &self.w_true {
            Some(rows) => Matrix::from_rows(rows)?,
            None => {
                if !(self.w_scale > 0.0 && self.w_scale.is_finite()) {
                    return Err(Error::Config(format!("w_scale must be positive, got {}", self.w_scale)));
                }
                random_w_true(self.dim_d, self.dim_k, self.w_scale, self.seed)
            }
        };
        let world = SyntheticWorldSpec {
            n_classes: self.n_classes,
            dim_d: self.dim_d,
            dim_k: self.dim_k,
            w_true,
            noise_scale: self.noise_scale,
            examples_per_class: self.examples_per_class,
            attribute_scheme: self.attribute_scheme,
            seed: self.seed,
        };
        world.validate()?;
        Ok(world)
    }
}

pub fn synth_data(args: &SynthArgs) -> Result<()> {
    let mut spec: SynthSpec = match &args.spec {
        Some(p) => read_json(p)?,
        None => SynthSpec::default(),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let world = spec.world()?;
    let (ds, truth) = generate_synthetic(&world)?;
    save_dataset(&args.out, &ds)?;
    let classes: Vec<_> = truth
        .iter()
        .enumerate()
        .map(|(c, g)| json!({ "class": c, "mean": g.mean, "variance": g.variance() }))
        .collect();
    let w_rows: Vec<&[f64]> = world.w_true.row_iter().collect();
    let ground_truth = json!({
        "spec": spec,
        "w_true": w_rows,
        "classes": classes,
    });
    write(&args.out.join("ground_truth.json"), pretty(&ground_truth))?;
    println!(
        "wrote {} rows, {} classes to {}",
        ds.n_examples(),
        ds.n_classes(),
        args.out.display()
    );
    Ok(())
}
