//! Embedding hyperparameter selection by logistic-regression validation
//! accuracy on a few search splits.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{accuracy, embedding_features, train_logreg};
use crate::data::LabelSource;
use crate::embedding::EmbeddingMatrix;
use crate::error::{In2vError, Result};
use crate::extend::{extend, ExtendConfig};
use crate::graph::Graph;
use crate::split::SplitAssignment;
use crate::train::{train, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub train: TrainConfig,
    pub extend: ExtendConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub best_index: usize,
    /// Mean validation accuracy per candidate; `-inf` marks a failed candidate.
    pub scores: Vec<f64>,
}

/// Trains on the split's training subgraph. The split seed is mixed into the
/// configured seed so each split gets its own initialization and walks.
pub fn train_on_split(
    g: &Graph,
    split: &SplitAssignment,
    cfg: &TrainConfig,
) -> Result<EmbeddingMatrix> {
    let (sub, _) = g.induced_subgraph(&split.train)?;
    let mut cfg = cfg.clone();
    cfg.seed = crate::rng::derive_seed(cfg.seed, &[split.seed]);
    Ok(train(&sub, &cfg)?.embedding)
}

/// Extends training-node embeddings to the graph without test nodes and
/// scores logistic regression on the validation rows.
pub fn validation_score(
    g: &Graph,
    labels: &impl LabelSource,
    split: &SplitAssignment,
    emb_train: &EmbeddingMatrix,
    ext: &ExtendConfig,
    l2: f64,
) -> Result<f64> {
    let visible: Vec<usize> = split.train.iter().chain(&split.val).copied().collect();
    let (g_vis, vis_map) = g.induced_subgraph(&visible)?;
    let train_in_vis: Vec<usize> = split
        .train
        .iter()
        .map(|&v| vis_map.to_sub(v).expect("train nodes are visible"))
        .collect();
    let (_, train_map) = g_vis.induced_subgraph(&train_in_vis)?;
    let (h, _) = extend(emb_train, &g_vis, &train_map, ext)?;
    if !h.is_finite() {
        return Err(In2vError::NumericalOverflow("extended embedding is not finite".into()));
    }
    let x = embedding_features(&h);
    let relabeled = Remapped {
        inner: labels,
        to_full: vis_map.sub_to_full(),
    };
    let val_idx: Vec<usize> = split
        .val
        .iter()
        .map(|&v| vis_map.to_sub(v).expect("val nodes are visible"))
        .collect();
    let model = train_logreg(x.view(), &relabeled, &train_in_vis, l2)?;
    accuracy(&model, x.view(), &relabeled, &val_idx)
}

/// Label view through a subgraph's node numbering.
struct Remapped<'a, L> {
    inner: &'a L,
    to_full: &'a [usize],
}

impl<L: LabelSource> LabelSource for Remapped<'_, L> {
    fn num_classes(&self) -> usize {
        self.inner.num_classes()
    }

    fn label(&self, node: usize) -> usize {
        self.inner.label(self.to_full[node])
    }
}

/// Scores every candidate by mean logreg validation accuracy over `splits`
/// and returns the best one; ties go to the earliest candidate. Candidates
/// with the same training config share their trained embeddings.
pub fn select_embedding_config(
    g: &Graph,
    labels: &impl LabelSource,
    splits: &[SplitAssignment],
    candidates: &[Candidate],
    l2: f64,
) -> Result<Selection> {
    if candidates.is_empty() {
        return Err(In2vError::validation("no embedding candidates to select from"));
    }
    let mut unique: Vec<&TrainConfig> = Vec::new();
    let mut train_key: HashMap<String, usize> = HashMap::new();
    let keys: Vec<usize> = candidates
        .iter()
        .map(|c| {
            let k = serde_json::to_string(&c.train).expect("config serializes");
            *train_key.entry(k).or_insert_with(|| {
                unique.push(&c.train);
                unique.len() - 1
            })
        })
        .collect();

    let jobs: Vec<(usize, usize)> = (0..unique.len())
        .flat_map(|t| (0..splits.len()).map(move |s| (t, s)))
        .collect();
    let trained: Vec<Option<EmbeddingMatrix>> = jobs
        .par_iter()
        .map(|&(t, s)| match train_on_split(g, &splits[s], unique[t]) {
            Ok(e) => Some(e),
            Err(e) => {
                log::warn!("candidate training failed on split {}: {e}", splits[s].seed);
                None
            }
        })
        .collect();

    let scores: Vec<f64> = candidates
        .par_iter()
        .zip(&keys)
        .map(|(c, &t)| {
            let mut total = 0.0;
            for (s, split) in splits.iter().enumerate() {
                let Some(emb) = &trained[t * splits.len() + s] else {
                    return f64::NEG_INFINITY;
                };
                match validation_score(g, labels, split, emb, &c.extend, l2) {
                    Ok(acc) => total += acc,
                    Err(e) => {
                        log::warn!("candidate evaluation failed: {e}");
                        return f64::NEG_INFINITY;
                    }
                }
            }
            total / splits.len().max(1) as f64
        })
        .collect();

    let mut best_index = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best_index] {
            best_index = i;
        }
    }
    Ok(Selection { best_index, scores })
}
