//! Node classification on embeddings: logistic regression for embedding model
//! selection and an MLP for final accuracy.

pub mod logreg;
pub mod mlp;
pub mod report;
pub mod select;

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::{FeatureMatrix, LabelSource};
use crate::embedding::EmbeddingMatrix;
use crate::error::{In2vError, Result};

pub use logreg::{train_logreg, LogReg};
pub use mlp::{train_mlp, Mlp};
pub use report::{mean_std, EvalReport, SeedResult};
pub use select::{select_embedding_config, Candidate, Selection};

/// Anything that maps feature rows to class scores.
pub trait Classifier {
    fn logits(&self, x: ArrayView2<f64>) -> Array2<f64>;

    fn predict(&self, x: ArrayView2<f64>) -> Vec<usize> {
        self.logits(x)
            .axis_iter(Axis(0))
            .map(|r| argmax(&r.to_vec()))
            .collect()
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Logreg,
    #[default]
    Mlp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub kind: ClassifierKind,
    /// Linear layers including the output layer.
    pub layers: usize,
    pub hidden: usize,
    pub learning_rate: f64,
    /// L2 penalty; the logistic regression uses it as its regularizer.
    pub weight_decay: f64,
    pub dropout: f64,
    pub jumping_knowledge: bool,
    pub max_epochs: usize,
    pub patience: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            kind: ClassifierKind::Mlp,
            layers: 2,
            hidden: 64,
            learning_rate: 0.01,
            weight_decay: 0.0,
            dropout: 0.5,
            jumping_knowledge: false,
            max_epochs: 300,
            patience: 50,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(In2vError::validation("an MLP needs at least one layer"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(In2vError::validation(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if self.layers > 1 && self.hidden == 0 {
            return Err(In2vError::validation("hidden size must be positive"));
        }
        if !(self.learning_rate >= 0.0 && self.weight_decay >= 0.0) {
            return Err(In2vError::validation("learning rate and weight decay must be non-negative"));
        }
        Ok(())
    }

    /// The complete downstream grid.
    pub fn full_grid() -> Vec<ClassifierConfig> {
        let mut out = Vec::new();
        for layers in 1..=5 {
            for hidden in [64, 512] {
                for learning_rate in [0.01, 0.001] {
                    for weight_decay in [0.0, 1e-4, 1e-2] {
                        for dropout in [0.2, 0.5, 0.8] {
                            for jumping_knowledge in [false, true] {
                                out.push(ClassifierConfig {
                                    layers,
                                    hidden,
                                    learning_rate,
                                    weight_decay,
                                    dropout,
                                    jumping_knowledge,
                                    ..ClassifierConfig::default()
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Reduced grid for desk-scale runs.
    pub fn desk_grid() -> Vec<ClassifierConfig> {
        let mut out = Vec::new();
        for layers in [2, 3] {
            for weight_decay in [0.0, 1e-4] {
                out.push(ClassifierConfig {
                    layers,
                    hidden: 64,
                    learning_rate: 0.01,
                    weight_decay,
                    dropout: 0.5,
                    ..ClassifierConfig::default()
                });
            }
        }
        out
    }
}

/// Embedding matrix as an ndarray.
pub fn embedding_features(emb: &EmbeddingMatrix) -> Array2<f64> {
    Array2::from_shape_vec((emb.rows(), emb.dim()), emb.values().to_vec())
        .expect("embedding shape is consistent")
}

/// Row-wise `[embedding | features]`.
pub fn concat_features(emb: &EmbeddingMatrix, feats: &FeatureMatrix) -> Result<Array2<f64>> {
    if emb.rows() != feats.rows() {
        return Err(In2vError::validation(format!(
            "{} embedding rows vs {} feature rows",
            emb.rows(),
            feats.rows()
        )));
    }
    let (d, f) = (emb.dim(), feats.dim());
    let mut out = Array2::zeros((emb.rows(), d + f));
    for (i, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
        let row = row.as_slice_mut().expect("standard layout");
        row[..d].copy_from_slice(emb.row(i));
        row[d..].copy_from_slice(feats.row(i));
    }
    Ok(out)
}

pub(crate) fn gather_rows(x: ArrayView2<f64>, idx: &[usize]) -> Array2<f64> {
    x.select(Axis(0), idx)
}

pub(crate) fn gather_labels(labels: &impl LabelSource, idx: &[usize]) -> Vec<usize> {
    idx.iter().map(|&i| labels.label(i)).collect()
}

/// Fraction of `idx` whose predicted class equals the label.
pub fn accuracy(
    model: &impl Classifier,
    x: ArrayView2<f64>,
    labels: &impl LabelSource,
    idx: &[usize],
) -> Result<f64> {
    if idx.is_empty() {
        return Err(In2vError::validation("accuracy over an empty index set"));
    }
    let pred = model.predict(gather_rows(x, idx).view());
    let hits = pred
        .iter()
        .zip(idx)
        .filter(|(&p, &i)| p == labels.label(i))
        .count();
    Ok(hits as f64 / idx.len() as f64)
}

/// Row-wise log-softmax.
pub(crate) fn log_softmax(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let max = row.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        let lse = max + row.iter().map(|&x| (x - max).exp()).sum::<f64>().ln();
        row.mapv_inplace(|x| x - lse);
    }
    out
}

/// Mean cross-entropy and its gradient with respect to the logits.
pub(crate) fn cross_entropy(logits: &Array2<f64>, y: &[usize]) -> (f64, Array2<f64>) {
    let n = y.len().max(1) as f64;
    let logp = log_softmax(logits);
    let mut loss = 0.0;
    let mut grad = logp.mapv(f64::exp);
    for (i, &c) in y.iter().enumerate() {
        loss -= logp[[i, c]];
        grad[[i, c]] -= 1.0;
    }
    grad /= n;
    (loss / n, grad)
}
