#![allow(dead_code)]

use zsar_core::dataset::{generate_synthetic, random_w_true, AttributeScheme, Dataset, Split, SyntheticWorldSpec};
use zsar_core::{ClassGaussian, Matrix};

pub struct World {
    pub ds: Dataset,
    pub split: Split,
    pub truth: Vec<ClassGaussian>,
}

/// 20 seen / 5 unseen, D=16, K=8, unit noise. Seen classes keep `per_seen`
/// rows, unseen classes `per_unseen`; unseen features are shifted by `shift`.
pub fn planted(seed: u64, per_seen: usize, per_unseen: usize, shift: f64) -> World {
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
    let (ds, truth) = generate_synthetic(&spec).unwrap();
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
    World {
        ds: ds.with_features(f).unwrap(),
        split: Split::new(0, (0..20).collect(), (20..25).collect(), seed),
        truth,
    }
}

pub fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    pred.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / pred.len() as f64
}
