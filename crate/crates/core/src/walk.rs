//! Second-order (p, q) biased random walks.

use std::io::Write;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{In2vError, Result};
use crate::graph::Graph;
use crate::rng::{keyed_rng, tag, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WalkParams {
    /// Return parameter; backtracking to the previous node has weight `1/p`.
    pub p: f64,
    /// In-out parameter; moving away from the previous node has weight `1/q`.
    pub q: f64,
    /// Steps per walk. A full walk holds `walk_length + 1` nodes.
    pub walk_length: usize,
    pub walks_per_node: usize,
}

impl Default for WalkParams {
    fn default() -> Self {
        WalkParams {
            p: 1.0,
            q: 1.0,
            walk_length: 20,
            walks_per_node: 10,
        }
    }
}

impl WalkParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.q > 0.0) || !self.p.is_finite() || !self.q.is_finite() {
            return Err(In2vError::validation(format!(
                "walk parameters need finite p, q > 0 (got p={}, q={})",
                self.p, self.q
            )));
        }
        if self.walk_length == 0 || self.walks_per_node == 0 {
            return Err(In2vError::validation(
                "walk_length and walks_per_node must be at least 1",
            ));
        }
        Ok(())
    }

    /// Unnormalized weight of stepping `prev -> cur -> next`.
    #[inline]
    pub fn transition_weight(&self, g: &Graph, prev: usize, next: usize) -> f64 {
        if next == prev {
            1.0 / self.p
        } else if g.has_edge(prev, next) {
            1.0
        } else {
            1.0 / self.q
        }
    }

    fn max_weight(&self) -> f64 {
        1.0f64.max(1.0 / self.p).max(1.0 / self.q)
    }
}

/// All walks of one epoch; walk `k` started at node `k / walks_per_node`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkBatch {
    pub walks: Vec<Vec<usize>>,
}

impl WalkBatch {
    pub fn len(&self) -> usize {
        self.walks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walks.is_empty()
    }

    /// One walk per line, node ids separated by spaces.
    pub fn dump(&self, mut out: impl Write) -> std::io::Result<()> {
        for walk in &self.walks {
            let line: Vec<String> = walk.iter().map(ToString::to_string).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// Samples one walk from `start`.
///
/// The first step is uniform over the neighbors of `start`. Later steps are
/// drawn by rejection against the largest possible weight, so no per-edge
/// tables are needed.
pub fn sample_walk(g: &Graph, start: usize, params: &WalkParams, rng: &mut Rng) -> Vec<usize> {
    let mut walk = Vec::with_capacity(params.walk_length + 1);
    walk.push(start);
    let first = g.neighbors(start);
    if first.is_empty() {
        return walk;
    }
    walk.push(first[rng.random_range(0..first.len())]);
    let max_w = params.max_weight();
    while walk.len() <= params.walk_length {
        let prev = walk[walk.len() - 2];
        let cur = walk[walk.len() - 1];
        let nbrs = g.neighbors(cur);
        if nbrs.is_empty() {
            break;
        }
        let next = loop {
            let cand = nbrs[rng.random_range(0..nbrs.len())];
            let w = params.transition_weight(g, prev, cand);
            if rng.random::<f64>() * max_w < w {
                break cand;
            }
        };
        walk.push(next);
    }
    walk
}

/// `walks_per_node` walks from every node. Walk `i` of node `v` uses the
/// stream keyed by `(seed, v, i)`, so the result is independent of scheduling.
pub fn epoch_walks(g: &Graph, params: &WalkParams, seed: u64) -> WalkBatch {
    let per = params.walks_per_node;
    let walks = (0..g.num_nodes() * per)
        .into_par_iter()
        .map(|k| {
            let (v, i) = (k / per, k % per);
            let mut rng = keyed_rng(seed, &[tag::WALK, v as u64, i as u64]);
            sample_walk(g, v, params, &mut rng)
        })
        .collect();
    WalkBatch { walks }
}
