#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use zsar_core::dataset::{generate_synthetic, random_w_true, AttributeScheme, Dataset, Split, SyntheticWorldSpec};
use zsar_core::Matrix;

pub fn zsar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zsar")).args(args).output().expect("binary runs")
}

pub fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

/// 20 seen / 5 unseen, D=16, K=8, random unit attributes, unit noise,
/// W entries N(0, 4). Unseen features are shifted by `shift`.
pub fn planted(seed: u64, per_seen: usize, per_unseen: usize, shift: f64) -> (Dataset, Split) {
    let per = per_seen.max(per_unseen);
    let spec = SyntheticWorldSpec {
        n_classes: 25,
        dim_d: 16,
        dim_k: 8,
        w_true: random_w_true(16, 8, 2.0, seed),
        noise_scale: 1.0,
        examples_per_class: per,
        attribute_scheme: AttributeScheme::RandomUnit,
        seed,
    };
    let (ds, _) = generate_synthetic(&spec).unwrap();
    let rows: Vec<usize> = (0..25)
        .flat_map(|c| {
            let n = if c < 20 { per_seen } else { per_unseen };
            c * per..c * per + n
        })
        .collect();
    let ds = ds.subset_rows(&rows);
    let f = Matrix::from_fn(ds.n_examples(), 16, |i, j| {
        ds.features()[(i, j)] + if ds.labels()[i] >= 20 { shift } else { 0.0 }
    });
    (
        ds.with_features(f).unwrap(),
        Split::new(0, (0..20).collect(), (20..25).collect(), seed),
    )
}
