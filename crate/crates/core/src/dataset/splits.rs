use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A seen/unseen partition of the class ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub id: usize,
    pub seen: Vec<usize>,
    pub unseen: Vec<usize>,
    pub seed: u64,
}

impl Split {
    pub fn new(id: usize, seen: Vec<usize>, unseen: Vec<usize>, seed: u64) -> Self {
        Split {
            id,
            seen,
            unseen,
            seed,
        }
    }

    /// Seen and unseen must be non-empty, disjoint, duplicate-free and below `n_classes`.
    pub fn validate(&self, n_classes: usize) -> Result<()> {
        if self.seen.is_empty() || self.unseen.is_empty() {
            return Err(Error::Config(format!(
                "split {}: needs at least one seen and one unseen class",
                self.id
            )));
        }
        let mut role = vec![None; n_classes];
        for (classes, name) in [(&self.seen, "seen"), (&self.unseen, "unseen")] {
            for &c in classes {
                if c >= n_classes {
                    return Err(Error::Config(format!(
                        "split {}: class {c} out of range for {n_classes} classes",
                        self.id
                    )));
                }
                if let Some(prev) = role[c] {
                    return Err(Error::Config(format!(
                        "split {}: class {c} listed as both {prev} and {name}",
                        self.id
                    )));
                }
                role[c] = Some(name);
            }
        }
        Ok(())
    }
}

/// `n_splits` uniform random seen/unseen partitions, each list sorted.
pub fn generate_splits(n_classes: usize, n_seen: usize, n_splits: usize, seed: u64) -> Result<Vec<Split>> {
    if n_seen == 0 || n_seen >= n_classes {
        return Err(Error::Config(format!(
            "n_seen must be in 1..{n_classes}, got {n_seen}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n_splits)
        .map(|id| {
            let mut classes: Vec<usize> = (0..n_classes).collect();
            classes.shuffle(&mut rng);
            let mut seen = classes[..n_seen].to_vec();
            let mut unseen = classes[n_seen..].to_vec();
            seen.sort_unstable();
            unseen.sort_unstable();
            Split::new(id, seen, unseen, seed.wrapping_add(id as u64))
        })
        .collect())
}
