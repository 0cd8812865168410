//! Skip-gram embedding training on random walks, with optional closeness and
//! diversity losses and neighborhood-mean resampling.

pub mod loss;
pub mod optim;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingMatrix;
use crate::error::{In2vError, Result};
use crate::graph::Graph;
use crate::rng::{derive_seed, keyed_rng, tag, Rng};
use crate::walk::{epoch_walks, WalkParams};

pub use loss::{LossParts, RowGrads};
use loss::{combined_loss_and_grad, mean_rows_into};
use optim::SparseAdam;

/// Distribution negative samples are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum NegativeSampling {
    /// Uniform over training nodes.
    #[default]
    Uniform,
    /// Proportional to `degree^power` (word2vec uses 0.75).
    Unigram { power: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub walk: WalkParams,
    pub dim: usize,
    pub context_size: usize,
    pub negatives_per_positive: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Weight of the closeness loss.
    pub alpha: f64,
    /// Weight of the diversity loss.
    pub beta: f64,
    /// Per-epoch probability of replacing a row by its neighborhood mean.
    pub sample_rate: f64,
    pub patience: usize,
    pub max_epochs: usize,
    pub negative_sampling: NegativeSampling,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            walk: WalkParams::default(),
            dim: 64,
            context_size: 10,
            negatives_per_positive: 1,
            batch_size: 128,
            learning_rate: 0.01,
            alpha: 0.0,
            beta: 0.0,
            sample_rate: 0.0,
            patience: 50,
            max_epochs: 500,
            negative_sampling: NegativeSampling::Uniform,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.walk.validate()?;
        let bad = |msg: &str| Err(In2vError::validation(msg.to_string()));
        if self.dim == 0 {
            return bad("embedding dimension must be positive");
        }
        if self.context_size == 0 || self.batch_size == 0 {
            return bad("context_size and batch_size must be positive");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be finite and non-negative");
        }
        if !(self.alpha >= 0.0 && self.beta >= 0.0) {
            return bad("loss weights must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.sample_rate) {
            return bad("sample rate must lie in [0, 1]");
        }
        if let NegativeSampling::Unigram { power } = self.negative_sampling {
            if !power.is_finite() {
                return bad("unigram power must be finite");
            }
        }
        Ok(())
    }

    fn uses_aux_losses(&self) -> bool {
        self.alpha > 0.0 || self.beta > 0.0
    }
}

/// Every `(walk[i], walk[j])` with `0 < |i - j| <= window`.
pub fn context_pairs(walk: &[usize], window: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    push_context_pairs(walk, window, &mut out);
    out
}

fn push_context_pairs(walk: &[usize], window: usize, out: &mut Vec<(usize, usize)>) {
    for (i, &center) in walk.iter().enumerate() {
        let lo = i.saturating_sub(window);
        let hi = (i + window).min(walk.len() - 1);
        for (j, &ctx) in walk.iter().enumerate().take(hi + 1).skip(lo) {
            if j != i {
                out.push((center, ctx));
            }
        }
    }
}

/// Replaces each non-isolated row by its neighborhood mean with probability
/// `r`. Means are taken over the matrix as it was before any replacement.
/// Returns the number of replaced rows.
pub fn apply_sampling_mod(emb: &mut EmbeddingMatrix, g: &Graph, r: f64, rng: &mut Rng) -> usize {
    if r <= 0.0 {
        return 0;
    }
    let chosen: Vec<usize> = (0..g.num_nodes())
        .filter(|&v| g.degree(v) > 0 && rng.random::<f64>() < r)
        .collect();
    let snapshot = emb.clone();
    let mut mean = vec![0.0; emb.dim()];
    for &v in &chosen {
        mean_rows_into(&snapshot, g.neighbors(v), &mut mean);
        emb.row_mut(v).copy_from_slice(&mean);
    }
    chosen.len()
}

/// One optimizer step worth of skip-gram pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SgnsBatch {
    pub positives: Vec<(usize, usize)>,
    pub negatives: Vec<(usize, usize)>,
}

/// All steps of one epoch. `aux_chunks[k]` is processed together with
/// `batches[k]` when auxiliary losses are enabled.
#[derive(Debug, Clone)]
pub struct EpochPlan {
    pub batches: Vec<SgnsBatch>,
    pub aux_chunks: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub steps: usize,
    pub aux_evaluations: usize,
    pub replaced: usize,
}

enum NegativeTable {
    Uniform(usize),
    Cumulative(Vec<f64>),
}

impl NegativeTable {
    fn new(g: &Graph, kind: NegativeSampling) -> Self {
        match kind {
            NegativeSampling::Uniform => NegativeTable::Uniform(g.num_nodes()),
            NegativeSampling::Unigram { power } => {
                let mut acc = 0.0;
                let cdf = (0..g.num_nodes())
                    .map(|v| {
                        acc += (g.degree(v) as f64).powf(power);
                        acc
                    })
                    .collect();
                NegativeTable::Cumulative(cdf)
            }
        }
    }

    fn sample(&self, rng: &mut Rng) -> usize {
        match self {
            NegativeTable::Uniform(n) => rng.random_range(0..*n),
            NegativeTable::Cumulative(cdf) => {
                let total = *cdf.last().expect("non-empty graph");
                if total <= 0.0 {
                    return rng.random_range(0..cdf.len());
                }
                let x = rng.random::<f64>() * total;
                cdf.partition_point(|&c| c <= x).min(cdf.len() - 1)
            }
        }
    }
}

/// Embedding training state over one (training) graph.
pub struct Trainer<'g> {
    graph: &'g Graph,
    config: TrainConfig,
    embedding: EmbeddingMatrix,
    optimizer: SparseAdam,
    grads: RowGrads,
    negatives: NegativeTable,
    epoch: usize,
}

impl<'g> Trainer<'g> {
    pub fn new(graph: &'g Graph, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        if graph.num_nodes() == 0 {
            return Err(In2vError::validation("cannot train on an empty graph"));
        }
        let n = graph.num_nodes();
        let embedding = EmbeddingMatrix::init(n, config.dim, config.seed);
        Ok(Trainer {
            graph,
            optimizer: SparseAdam::new(n, config.dim, config.learning_rate),
            grads: RowGrads::new(n, config.dim),
            negatives: NegativeTable::new(graph, config.negative_sampling),
            embedding,
            config,
            epoch: 0,
        })
    }

    pub fn embedding(&self) -> &EmbeddingMatrix {
        &self.embedding
    }

    pub fn embedding_mut(&mut self) -> &mut EmbeddingMatrix {
        &mut self.embedding
    }

    pub fn into_embedding(self) -> EmbeddingMatrix {
        self.embedding
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    /// Walks, shuffled skip-gram batches with negatives, and the auxiliary
    /// node order for the current epoch. Depends only on the seed and epoch.
    pub fn plan_epoch(&self) -> EpochPlan {
        let cfg = &self.config;
        let e = self.epoch as u64;
        let walks = epoch_walks(self.graph, &cfg.walk, derive_seed(cfg.seed, &[tag::WALK, e]));
        let mut pairs = Vec::new();
        for w in &walks.walks {
            push_context_pairs(w, cfg.context_size, &mut pairs);
        }
        let mut rng = keyed_rng(cfg.seed, &[tag::NEGATIVE, e]);
        pairs.shuffle(&mut rng);
        let batches: Vec<SgnsBatch> = pairs
            .chunks(cfg.batch_size)
            .map(|chunk| {
                let negatives = chunk
                    .iter()
                    .flat_map(|&(u, _)| std::iter::repeat_n(u, cfg.negatives_per_positive))
                    .map(|u| (u, self.negatives.sample(&mut rng)))
                    .collect();
                SgnsBatch {
                    positives: chunk.to_vec(),
                    negatives,
                }
            })
            .collect();

        let aux_chunks = if cfg.uses_aux_losses() {
            let mut order: Vec<usize> = (0..self.graph.num_nodes()).collect();
            order.shuffle(&mut keyed_rng(cfg.seed, &[tag::AUX_ORDER, e]));
            let steps = batches.len().max(1);
            let per = order.len().div_ceil(steps);
            let mut chunks: Vec<Vec<usize>> = order.chunks(per).map(<[usize]>::to_vec).collect();
            chunks.resize(steps, Vec::new());
            chunks
        } else {
            Vec::new()
        };
        EpochPlan {
            batches,
            aux_chunks,
        }
    }

    /// One optimizer step. The returned loss is evaluated before the update.
    pub fn step(&mut self, batch: &SgnsBatch, aux_nodes: &[usize]) -> Result<LossParts> {
        self.grads.clear();
        let parts = combined_loss_and_grad(
            &self.embedding,
            self.graph,
            &batch.positives,
            &batch.negatives,
            aux_nodes,
            self.config.alpha,
            self.config.beta,
            &mut self.grads,
        )?;
        self.optimizer.step(&mut self.embedding, &self.grads);
        Ok(parts)
    }

    /// Resampling, then every planned step in order.
    pub fn train_epoch(&mut self) -> Result<EpochStats> {
        let mut stats = EpochStats {
            epoch: self.epoch,
            ..EpochStats::default()
        };
        if self.config.sample_rate > 0.0 {
            let mut rng = keyed_rng(self.config.seed, &[tag::SAMPLING_MOD, self.epoch as u64]);
            stats.replaced =
                apply_sampling_mod(&mut self.embedding, self.graph, self.config.sample_rate, &mut rng);
        }
        let plan = self.plan_epoch();
        let empty = SgnsBatch {
            positives: Vec::new(),
            negatives: Vec::new(),
        };
        let steps = plan.batches.len().max(plan.aux_chunks.len());
        for k in 0..steps {
            let batch = plan.batches.get(k).unwrap_or(&empty);
            let aux = plan.aux_chunks.get(k).map_or(&[][..], Vec::as_slice);
            if batch.positives.is_empty() && aux.is_empty() {
                continue;
            }
            let parts = self.step(batch, aux)?;
            stats.loss += parts.total;
            stats.steps += 1;
            stats.aux_evaluations += aux.len();
        }
        if !self.embedding.is_finite() {
            return Err(In2vError::NumericalOverflow(
                "embeddings diverged; lower the learning rate".into(),
            ));
        }
        self.epoch += 1;
        Ok(stats)
    }
}

/// Patience-based stopping on a loss that should decrease.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: Option<usize>,
    since_best: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping {
            patience,
            best: f64::INFINITY,
            best_epoch: None,
            since_best: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, loss: f64) -> StopDecision {
        if loss < self.best || self.best_epoch.is_none() {
            self.best = loss;
            self.best_epoch = Some(epoch);
            self.since_best = 0;
            StopDecision::Improved
        } else {
            self.since_best += 1;
            if self.since_best >= self.patience {
                StopDecision::Stop
            } else {
                StopDecision::Continue
            }
        }
    }

    pub fn best_epoch(&self) -> Option<usize> {
        self.best_epoch
    }

    pub fn best(&self) -> f64 {
        self.best
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Snapshot taken at the epoch with the lowest training loss.
    pub embedding: EmbeddingMatrix,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub losses: Vec<f64>,
}

/// Full training run with early stopping on the epoch loss.
pub fn train(g: &Graph, config: &TrainConfig) -> Result<TrainOutcome> {
    let mut trainer = Trainer::new(g, config.clone())?;
    let mut best = trainer.embedding().clone();
    let mut losses = Vec::new();
    let mut stopper = EarlyStopping::new(config.patience.max(1));
    for _ in 0..config.max_epochs.max(1) {
        let stats = trainer.train_epoch()?;
        log::debug!("epoch {} loss {:.6}", stats.epoch, stats.loss);
        losses.push(stats.loss);
        match stopper.observe(stats.epoch, stats.loss) {
            StopDecision::Improved => best.clone_from(trainer.embedding()),
            StopDecision::Continue => {}
            StopDecision::Stop => break,
        }
    }
    Ok(TrainOutcome {
        embedding: best,
        epochs_run: losses.len(),
        best_epoch: stopper.best_epoch().unwrap_or(0),
        losses,
    })
}
