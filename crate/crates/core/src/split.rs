//! Seeded inductive train/validation/test splits.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{In2vError, Result};
use crate::rng::{keyed_rng, tag};

/// Training fractions used by the standard protocol.
pub const DEFAULT_TRAIN_FRACTIONS: [f64; 5] = [0.1, 0.2, 0.4, 0.6, 0.8];

/// Disjoint node sets covering `0..n`, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitAssignment {
    pub seed: u64,
    pub train_fraction: f64,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitAssignment {
    /// Uniform random split: `floor(f * n)` training nodes, the rest halved
    /// between validation (rounded down) and test.
    pub fn generate(n: usize, train_fraction: f64, seed: u64) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(In2vError::validation(format!(
                "train fraction {train_fraction} outside (0, 1)"
            )));
        }
        if n < 3 {
            return Err(In2vError::validation(format!("cannot split {n} nodes")));
        }
        let n_train = (train_fraction * n as f64).floor() as usize;
        if n_train == 0 {
            return Err(In2vError::validation(format!(
                "train fraction {train_fraction} leaves no training nodes out of {n}"
            )));
        }
        let n_val = (n - n_train) / 2;
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut keyed_rng(seed, &[tag::SPLIT]));
        let sorted = |s: &[usize]| {
            let mut v = s.to_vec();
            v.sort_unstable();
            v
        };
        Ok(SplitAssignment {
            seed,
            train_fraction,
            train: sorted(&perm[..n_train]),
            val: sorted(&perm[n_train..n_train + n_val]),
            test: sorted(&perm[n_train + n_val..]),
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }

    pub fn train_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.num_nodes()];
        for &v in &self.train {
            mask[v] = true;
        }
        mask
    }

    /// Checks disjointness, coverage of `0..n`, and sortedness.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_nodes();
        let mut seen = vec![false; n];
        for (name, set) in [("train", &self.train), ("val", &self.val), ("test", &self.test)] {
            if set.windows(2).any(|w| w[0] >= w[1]) {
                return Err(In2vError::validation(format!("{name} indices not strictly sorted")));
            }
            for &v in set.iter() {
                if v >= n {
                    return Err(In2vError::validation(format!(
                        "{name} index {v} outside 0..{n}"
                    )));
                }
                if std::mem::replace(&mut seen[v], true) {
                    return Err(In2vError::validation(format!("node {v} assigned twice")));
                }
            }
        }
        if self.train.is_empty() {
            return Err(In2vError::validation("empty training set"));
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string(self).map_err(|source| In2vError::Json {
            context: path.display().to_string(),
            source,
        })?;
        fs::write(path, text).map_err(|e| In2vError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| In2vError::io(path, e))?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn from_json(text: &str, source: &str) -> Result<Self> {
        let split: SplitAssignment =
            serde_json::from_str(text).map_err(|e| In2vError::Parse {
                path: source.to_string(),
                line: e.line(),
                message: e.to_string(),
            })?;
        split.validate().map_err(|e| In2vError::Parse {
            path: source.to_string(),
            line: 0,
            message: e.to_string(),
        })?;
        Ok(split)
    }
}
