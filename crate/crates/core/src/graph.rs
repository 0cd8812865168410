//! Undirected graphs in compressed sparse row form.

use std::collections::VecDeque;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::NodeLabels;
use crate::error::{In2vError, Result};

/// Hop distance assigned to nodes with no path to the source set.
pub const UNREACHABLE: usize = usize::MAX;

/// Immutable undirected graph.
///
/// Each undirected edge `{u, v}` with `u != v` is stored twice, once in each
/// endpoint's list. A self-loop is stored once. Neighbor lists are strictly
/// increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
}

/// Correspondence between an induced subgraph and its parent graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgraphMapping {
    sub_to_full: Vec<usize>,
    full_to_sub: Vec<Option<usize>>,
}

impl Graph {
    /// Builds a canonical graph from an arbitrary edge list. Both directions are
    /// inserted for every pair and duplicates are dropped.
    pub fn from_edges(num_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut lists: Vec<Vec<usize>> = vec![Vec::new(); num_nodes];
        for &(u, v) in edges {
            if u >= num_nodes || v >= num_nodes {
                return Err(In2vError::validation(format!(
                    "edge ({u}, {v}) out of range for {num_nodes} nodes"
                )));
            }
            lists[u].push(v);
            if u != v {
                lists[v].push(u);
            }
        }
        let mut offsets = Vec::with_capacity(num_nodes + 1);
        let mut neighbors = Vec::new();
        offsets.push(0);
        for mut list in lists {
            list.sort_unstable();
            list.dedup();
            neighbors.extend_from_slice(&list);
            offsets.push(neighbors.len());
        }
        Ok(Graph { offsets, neighbors })
    }

    /// Reads a whitespace separated edge list.
    ///
    /// Lines starting with `#` are comments, except `#nodes N` which fixes the
    /// node count so trailing isolated nodes can be represented.
    pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| In2vError::io(path, e))?;
        Self::parse_edge_list(&text, &path.display().to_string())
    }

    pub fn parse_edge_list(text: &str, source: &str) -> Result<Self> {
        let parse_err = |line: usize, message: String| In2vError::Parse {
            path: source.to_string(),
            line,
            message,
        };
        let mut declared: Option<usize> = None;
        let mut edges = Vec::new();
        let mut max_id: Option<usize> = None;
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let mut parts = comment.split_whitespace();
                if parts.next() == Some("nodes") {
                    let n = parts
                        .next()
                        .and_then(|s| s.parse::<usize>().ok())
                        .ok_or_else(|| parse_err(lineno, "expected `#nodes N`".into()))?;
                    declared = Some(n);
                }
                continue;
            }
            let mut fields = line.split_whitespace();
            let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(parse_err(lineno, format!("expected two node ids, got {line:?}")));
            };
            let parse_id = |s: &str| -> Result<usize> {
                let id: i64 = s
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("not an integer node id: {s:?}")))?;
                usize::try_from(id).map_err(|_| {
                    In2vError::validation(format!("{source}:{lineno}: negative node id {id}"))
                })
            };
            let (u, v) = (parse_id(a)?, parse_id(b)?);
            max_id = Some(max_id.map_or(u.max(v), |m: usize| m.max(u).max(v)));
            edges.push((u, v));
        }
        let implied = max_id.map_or(0, |m| m + 1);
        let num_nodes = match declared {
            Some(n) if n < implied => {
                return Err(In2vError::validation(format!(
                    "{source}: header declares {n} nodes but node id {} occurs",
                    implied - 1
                )))
            }
            Some(n) => n,
            None => implied,
        };
        let graph = Self::from_edges(num_nodes, &edges)?;
        let isolated = (0..num_nodes).filter(|&v| graph.degree(v) == 0).count();
        if isolated > 0 && declared.is_none() {
            log::warn!(
                "{source}: {isolated} of {num_nodes} node ids below the max id have no edges"
            );
        }
        Ok(graph)
    }

    pub fn num_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of stored adjacency entries (each non-loop edge counted twice).
    pub fn directed_edge_count(&self) -> usize {
        self.neighbors.len()
    }

    pub fn self_loop_count(&self) -> usize {
        (0..self.num_nodes()).filter(|&v| self.has_edge(v, v)).count()
    }

    /// Number of distinct undirected edges, self-loops included.
    pub fn undirected_edge_count(&self) -> usize {
        let loops = self.self_loop_count();
        (self.directed_edge_count() - loops) / 2 + loops
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_nodes()).flat_map(move |u| self.neighbors(u).iter().map(move |&v| (u, v)))
    }

    /// Checks every structural invariant. Used by tests and by the FFI layer.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_nodes();
        if self.offsets[0] != 0 || self.offsets[n] != self.neighbors.len() {
            return Err(In2vError::validation("offsets do not span the neighbor array"));
        }
        for v in 0..n {
            if self.offsets[v] > self.offsets[v + 1] {
                return Err(In2vError::validation("offsets decrease"));
            }
            let list = self.neighbors(v);
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(In2vError::validation(format!("neighbors of {v} not strictly sorted")));
            }
            for &u in list {
                if u >= n || !self.has_edge(u, v) {
                    return Err(In2vError::validation(format!("edge ({v}, {u}) is not symmetric")));
                }
            }
        }
        Ok(())
    }

    /// Subgraph induced by `keep`, re-indexed densely in ascending node order.
    pub fn induced_subgraph(&self, keep: &[usize]) -> Result<(Graph, SubgraphMapping)> {
        if keep.is_empty() {
            return Err(In2vError::validation("induced subgraph of an empty node set"));
        }
        let n = self.num_nodes();
        let mut sub_to_full = keep.to_vec();
        sub_to_full.sort_unstable();
        sub_to_full.dedup();
        if let Some(&bad) = sub_to_full.iter().find(|&&v| v >= n) {
            return Err(In2vError::validation(format!("node {bad} out of range for {n} nodes")));
        }
        let mut full_to_sub = vec![None; n];
        for (i, &v) in sub_to_full.iter().enumerate() {
            full_to_sub[v] = Some(i);
        }
        let mut offsets = Vec::with_capacity(sub_to_full.len() + 1);
        let mut neighbors = Vec::new();
        offsets.push(0);
        for &v in &sub_to_full {
            // Parent lists are sorted and the re-indexing is monotone, so the
            // filtered list stays sorted.
            neighbors.extend(self.neighbors(v).iter().filter_map(|&u| full_to_sub[u]));
            offsets.push(neighbors.len());
        }
        Ok((
            Graph { offsets, neighbors },
            SubgraphMapping {
                sub_to_full,
                full_to_sub,
            },
        ))
    }

    /// Multi-source BFS. Sources get 0, unreachable nodes [`UNREACHABLE`].
    pub fn bfs_hops_from_set(&self, sources: &[usize]) -> Vec<usize> {
        let mut dist = vec![UNREACHABLE; self.num_nodes()];
        let mut queue = VecDeque::new();
        for &s in sources {
            if dist[s] != 0 {
                dist[s] = 0;
                queue.push_back(s);
            }
        }
        while let Some(v) = queue.pop_front() {
            let next = dist[v] + 1;
            for &u in self.neighbors(v) {
                if dist[u] == UNREACHABLE {
                    dist[u] = next;
                    queue.push_back(u);
                }
            }
        }
        dist
    }

    /// Class-imbalance adjusted edge homophily.
    ///
    /// `h_adj = (h_edge - sum_k p_k^2) / (1 - sum_k p_k^2)` where `h_edge` is
    /// the fraction of directed edges joining equal labels and `p_k` is the
    /// share of total degree held by class `k`.
    pub fn adjusted_homophily(&self, labels: &NodeLabels) -> Result<f64> {
        if labels.len() != self.num_nodes() {
            return Err(In2vError::validation(format!(
                "{} labels for {} nodes",
                labels.len(),
                self.num_nodes()
            )));
        }
        let total = self.directed_edge_count();
        if total == 0 {
            return Err(In2vError::DegenerateInput("graph has no edges".into()));
        }
        let mut same = 0usize;
        let mut class_degree = vec![0usize; labels.num_classes()];
        for v in 0..self.num_nodes() {
            let yv = labels.get(v);
            class_degree[yv] += self.degree(v);
            same += self
                .neighbors(v)
                .iter()
                .filter(|&&u| labels.get(u) == yv)
                .count();
        }
        let h_edge = same as f64 / total as f64;
        let expected: f64 = class_degree
            .iter()
            .map(|&d| {
                let p = d as f64 / total as f64;
                p * p
            })
            .sum();
        let denom = 1.0 - expected;
        if denom.abs() < 1e-12 {
            return Err(In2vError::DegenerateInput(
                "all edge mass belongs to a single class".into(),
            ));
        }
        Ok((h_edge - expected) / denom)
    }
}

impl SubgraphMapping {
    pub fn len(&self) -> usize {
        self.sub_to_full.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sub_to_full.is_empty()
    }

    pub fn full_len(&self) -> usize {
        self.full_to_sub.len()
    }

    pub fn to_full(&self, sub: usize) -> usize {
        self.sub_to_full[sub]
    }

    pub fn to_sub(&self, full: usize) -> Option<usize> {
        self.full_to_sub[full]
    }

    pub fn sub_to_full(&self) -> &[usize] {
        &self.sub_to_full
    }

    /// Boolean membership over the parent graph's nodes.
    pub fn mask(&self) -> Vec<bool> {
        self.full_to_sub.iter().map(Option::is_some).collect()
    }
}
