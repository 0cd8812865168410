//! Extending embeddings trained on a subgraph to every node of the full graph.
//!
//! Three methods share the zero-padded starting point (trained rows copied
//! in, zeros elsewhere):
//!
//! * [`in2v_extend`]: synchronous neighborhood averaging restricted to nodes
//!   that already hold an embedding, mixing a node's own row with weight
//!   `lambda` once it has one.
//! * [`feature_propagation`]: diffusion with `D^-1/2 A D^-1/2`, training
//!   rows clamped after every iteration.
//! * [`matmul_extend`]: repeated multiplication by a (normalized) adjacency
//!   matrix with no clamping.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingMatrix;
use crate::error::{In2vError, Result};
use crate::graph::{Graph, SubgraphMapping, UNREACHABLE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtendMethod {
    In2v,
    FeaturePropagation,
    Matmul,
}

impl ExtendMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            ExtendMethod::In2v => "in2v",
            ExtendMethod::FeaturePropagation => "feature_propagation",
            ExtendMethod::Matmul => "matmul",
        }
    }
}

impl std::str::FromStr for ExtendMethod {
    type Err = In2vError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "in2v" => Ok(ExtendMethod::In2v),
            "feature_propagation" | "fp" => Ok(ExtendMethod::FeaturePropagation),
            "matmul" => Ok(ExtendMethod::Matmul),
            other => Err(In2vError::validation(format!("unknown extension method {other:?}"))),
        }
    }
}

/// Adjacency normalization for the MatMul baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjacencyNorm {
    Raw,
    /// `D^-1 A`
    #[default]
    Row,
    /// `D^-1/2 A D^-1/2`
    Sym,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtendConfig {
    pub method: ExtendMethod,
    pub lambda: f64,
    pub delay: usize,
    pub fp_iterations: usize,
    pub matmul_iterations: usize,
    pub matmul_norm: AdjacencyNorm,
    /// Spread each iteration over the rayon pool. Output is identical either way.
    #[serde(skip)]
    pub parallel: bool,
}

impl Default for ExtendConfig {
    fn default() -> Self {
        ExtendConfig {
            method: ExtendMethod::In2v,
            lambda: 1.0,
            delay: 0,
            fp_iterations: 40,
            matmul_iterations: 10,
            matmul_norm: AdjacencyNorm::Row,
            parallel: true,
        }
    }
}

impl ExtendConfig {
    pub fn in2v(lambda: f64, delay: usize) -> Self {
        ExtendConfig {
            lambda,
            delay,
            ..Self::default()
        }
    }

    pub fn feature_propagation(iterations: usize) -> Self {
        ExtendConfig {
            method: ExtendMethod::FeaturePropagation,
            fp_iterations: iterations,
            ..Self::default()
        }
    }

    pub fn matmul(iterations: usize, norm: AdjacencyNorm) -> Self {
        ExtendConfig {
            method: ExtendMethod::Matmul,
            matmul_iterations: iterations,
            matmul_norm: norm,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(In2vError::validation(format!(
                "lambda {} outside [0, 1]",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// Default post-hoc search grid for `lambda`.
pub const DEFAULT_LAMBDAS: [f64; 4] = [0.5, 0.75, 0.9, 1.0];
/// Default post-hoc search grid for `delay`.
pub const DEFAULT_DELAYS: [usize; 5] = [0, 1, 2, 5, 10];
/// Feature Propagation iteration grid.
pub const DEFAULT_FP_ITERATIONS: [usize; 4] = [10, 20, 40, 60];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendReport {
    pub method: ExtendMethod,
    pub lambda: f64,
    pub delay: usize,
    pub iterations_run: usize,
    pub nodes_covered: usize,
    pub nodes_unreachable: usize,
}

/// Full-graph matrix holding the trained rows, zeros elsewhere, plus the
/// training-node mask.
pub fn zero_padded(
    emb_train: &EmbeddingMatrix,
    g_full: &Graph,
    mapping: &SubgraphMapping,
) -> Result<(EmbeddingMatrix, Vec<bool>)> {
    if mapping.full_len() != g_full.num_nodes() {
        return Err(In2vError::validation(format!(
            "mapping covers {} nodes but the graph has {}",
            mapping.full_len(),
            g_full.num_nodes()
        )));
    }
    if emb_train.rows() != mapping.len() {
        return Err(In2vError::validation(format!(
            "{} embedding rows for {} training nodes",
            emb_train.rows(),
            mapping.len()
        )));
    }
    let mut h = EmbeddingMatrix::zeros(g_full.num_nodes(), emb_train.dim());
    for (sub, &full) in mapping.sub_to_full().iter().enumerate() {
        h.row_mut(full).copy_from_slice(emb_train.row(sub));
    }
    Ok((h, mapping.mask()))
}

fn for_each_row(
    out: &mut EmbeddingMatrix,
    parallel: bool,
    f: impl Fn(usize, &mut [f64]) + Sync + Send,
) {
    let d = out.dim().max(1);
    if parallel {
        out.values_mut()
            .par_chunks_mut(d)
            .enumerate()
            .for_each(|(v, row)| f(v, row));
    } else {
        out.values_mut()
            .chunks_mut(d)
            .enumerate()
            .for_each(|(v, row)| f(v, row));
    }
}

/// One synchronous post-hoc iteration from `(h, s)` into `next`.
/// Returns the updated lookup vector.
pub fn in2v_step(
    g: &Graph,
    h: &EmbeddingMatrix,
    s: &[bool],
    lambda: f64,
    next: &mut EmbeddingMatrix,
    parallel: bool,
) -> Vec<bool> {
    for_each_row(next, parallel, |v, row| {
        let mut count = 0usize;
        row.fill(0.0);
        for &u in g.neighbors(v) {
            if s[u] {
                count += 1;
                for (r, x) in row.iter_mut().zip(h.row(u)) {
                    *r += x;
                }
            }
        }
        let own = h.row(v);
        if count == 0 {
            row.copy_from_slice(own);
            return;
        }
        let c = count as f64;
        for r in row.iter_mut() {
            *r /= c;
        }
        if s[v] {
            if lambda == 1.0 {
                row.copy_from_slice(own);
            } else {
                for (r, x) in row.iter_mut().zip(own) {
                    *r = lambda * x + (1.0 - lambda) * *r;
                }
            }
        }
    });
    (0..g.num_nodes())
        .map(|v| s[v] || g.neighbors(v).iter().any(|&u| s[u]))
        .collect()
}

/// Runs `iterations` post-hoc steps from an explicit starting state.
pub fn in2v_iterate(
    g: &Graph,
    h0: EmbeddingMatrix,
    s0: Vec<bool>,
    lambda: f64,
    iterations: usize,
    parallel: bool,
) -> (EmbeddingMatrix, Vec<bool>) {
    let mut h = h0;
    let mut s = s0;
    let mut next = EmbeddingMatrix::zeros(h.rows(), h.dim());
    for _ in 0..iterations {
        s = in2v_step(g, &h, &s, lambda, &mut next, parallel);
        std::mem::swap(&mut h, &mut next);
    }
    (h, s)
}

/// Number of iterations needed for every node with a path to a training node
/// to receive an embedding: the largest finite BFS distance from the set.
pub fn coverage_iterations(g: &Graph, train_nodes: &[usize]) -> (usize, usize) {
    let dist = g.bfs_hops_from_set(train_nodes);
    let covered = dist.iter().filter(|&&d| d != UNREACHABLE).count();
    let depth = dist.iter().filter(|&&d| d != UNREACHABLE).max().copied().unwrap_or(0);
    (depth, covered)
}

/// Post-hoc extension with `max hop + delay` iterations.
pub fn in2v_extend(
    emb_train: &EmbeddingMatrix,
    g_full: &Graph,
    mapping: &SubgraphMapping,
    cfg: &ExtendConfig,
) -> Result<(EmbeddingMatrix, ExtendReport)> {
    cfg.validate()?;
    let (h0, s0) = zero_padded(emb_train, g_full, mapping)?;
    let (depth, _) = coverage_iterations(g_full, mapping.sub_to_full());
    let iterations = depth + cfg.delay;
    let (h, s) = in2v_iterate(g_full, h0, s0, cfg.lambda, iterations, cfg.parallel);
    let covered = s.iter().filter(|&&x| x).count();
    Ok((
        h,
        ExtendReport {
            method: ExtendMethod::In2v,
            lambda: cfg.lambda,
            delay: cfg.delay,
            iterations_run: iterations,
            nodes_covered: covered,
            nodes_unreachable: g_full.num_nodes() - covered,
        },
    ))
}

/// `h <- M h` for the chosen normalization of `A`. Rows of isolated nodes are
/// passed through unchanged.
pub fn propagate_once(
    g: &Graph,
    h: &EmbeddingMatrix,
    norm: AdjacencyNorm,
    next: &mut EmbeddingMatrix,
    parallel: bool,
) {
    let inv_sqrt: Vec<f64> = (0..g.num_nodes())
        .map(|v| match g.degree(v) {
            0 => 0.0,
            k => 1.0 / (k as f64).sqrt(),
        })
        .collect();
    for_each_row(next, parallel, |v, row| {
        let nbrs = g.neighbors(v);
        if nbrs.is_empty() {
            row.copy_from_slice(h.row(v));
            return;
        }
        row.fill(0.0);
        for &u in nbrs {
            let w = match norm {
                AdjacencyNorm::Raw | AdjacencyNorm::Row => 1.0,
                AdjacencyNorm::Sym => inv_sqrt[v] * inv_sqrt[u],
            };
            for (r, x) in row.iter_mut().zip(h.row(u)) {
                *r += w * x;
            }
        }
        if norm == AdjacencyNorm::Row {
            let k = nbrs.len() as f64;
            for r in row.iter_mut() {
                *r /= k;
            }
        }
    });
}

fn check_iterations(iterations: usize, what: &str) -> Result<()> {
    if iterations == 0 {
        return Err(In2vError::validation(format!("{what} needs at least one iteration")));
    }
    Ok(())
}

fn reachability_report(
    g: &Graph,
    mapping: &SubgraphMapping,
    method: ExtendMethod,
    iterations: usize,
) -> ExtendReport {
    let (_, covered) = coverage_iterations(g, mapping.sub_to_full());
    ExtendReport {
        method,
        lambda: 0.0,
        delay: 0,
        iterations_run: iterations,
        nodes_covered: covered,
        nodes_unreachable: g.num_nodes() - covered,
    }
}

/// Symmetric-normalized diffusion with training rows reset after each step.
pub fn feature_propagation(
    emb_train: &EmbeddingMatrix,
    g_full: &Graph,
    mapping: &SubgraphMapping,
    iterations: usize,
    parallel: bool,
) -> Result<(EmbeddingMatrix, ExtendReport)> {
    check_iterations(iterations, "feature propagation")?;
    let (mut h, _) = zero_padded(emb_train, g_full, mapping)?;
    let mut next = EmbeddingMatrix::zeros(h.rows(), h.dim());
    for _ in 0..iterations {
        propagate_once(g_full, &h, AdjacencyNorm::Sym, &mut next, parallel);
        for (sub, &full) in mapping.sub_to_full().iter().enumerate() {
            next.row_mut(full).copy_from_slice(emb_train.row(sub));
        }
        std::mem::swap(&mut h, &mut next);
    }
    let report = reachability_report(g_full, mapping, ExtendMethod::FeaturePropagation, iterations);
    Ok((h, report))
}

/// Repeated adjacency multiplication without clamping.
pub fn matmul_extend(
    emb_train: &EmbeddingMatrix,
    g_full: &Graph,
    mapping: &SubgraphMapping,
    iterations: usize,
    norm: AdjacencyNorm,
    parallel: bool,
) -> Result<(EmbeddingMatrix, ExtendReport)> {
    check_iterations(iterations, "matmul extension")?;
    let (mut h, _) = zero_padded(emb_train, g_full, mapping)?;
    let mut next = EmbeddingMatrix::zeros(h.rows(), h.dim());
    for _ in 0..iterations {
        propagate_once(g_full, &h, norm, &mut next, parallel);
        std::mem::swap(&mut h, &mut next);
    }
    let report = reachability_report(g_full, mapping, ExtendMethod::Matmul, iterations);
    Ok((h, report))
}

/// Dispatches on `cfg.method`.
pub fn extend(
    emb_train: &EmbeddingMatrix,
    g_full: &Graph,
    mapping: &SubgraphMapping,
    cfg: &ExtendConfig,
) -> Result<(EmbeddingMatrix, ExtendReport)> {
    match cfg.method {
        ExtendMethod::In2v => in2v_extend(emb_train, g_full, mapping, cfg),
        ExtendMethod::FeaturePropagation => {
            feature_propagation(emb_train, g_full, mapping, cfg.fp_iterations, cfg.parallel)
        }
        ExtendMethod::Matmul => matmul_extend(
            emb_train,
            g_full,
            mapping,
            cfg.matmul_iterations,
            cfg.matmul_norm,
            cfg.parallel,
        ),
    }
}
