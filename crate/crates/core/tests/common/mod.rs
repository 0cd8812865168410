//! Helpers shared by the integration tests: independent reference
//! implementations, graph generators and an access-audited label container.
#![allow(dead_code)]

pub mod gradcheck;

use std::path::PathBuf;
use std::sync::Mutex;

use in2v_core::data::LabelSource;
use in2v_core::rng::keyed_rng;
use in2v_core::{EmbeddingMatrix, Graph, NodeLabels};
use rand::Rng as _;

pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().expect("workspace root exists")
}

pub fn toy_dir() -> PathBuf {
    workspace_root().join("data/toy")
}

/// Directory holding benchmark datasets (`cora/`, `citeseer/`), overridable
/// with `IN2V_DATA_DIR`.
pub fn data_dir() -> PathBuf {
    std::env::var_os("IN2V_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| workspace_root().join("data"))
}

/// Relative error between two vectors measured in the larger norm.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / na.max(nb).max(1e-12)
}

/// Central differences of `f` at `x` with step `h`.
pub fn numeric_grad(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut x = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + h;
            let up = f(&x);
            x[i] = orig - h;
            let down = f(&x);
            x[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// G(n, p) graph from a seeded stream.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = keyed_rng(seed, &[0xe4]);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, &edges).unwrap()
}

pub fn random_matrix(n: usize, d: usize, seed: u64) -> EmbeddingMatrix {
    let mut rng = keyed_rng(seed, &[0x3a]);
    let v = (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    EmbeddingMatrix::from_vec(n, d, v).unwrap()
}

fn edge_index(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            out.push((u, v));
        }
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// One representative of every isomorphism class of simple undirected graphs
/// on `n` nodes, as edge lists. A graph is kept when its edge bitmask is the
/// smallest over all relabelings.
pub fn nonisomorphic_graphs(n: usize) -> Vec<Vec<(usize, usize)>> {
    let pairs = edge_index(n);
    let idx = |u: usize, v: usize| {
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        pairs.iter().position(|&p| p == (a, b)).unwrap()
    };
    let perm_maps: Vec<Vec<usize>> = permutations(n)
        .into_iter()
        .map(|p| pairs.iter().map(|&(u, v)| idx(p[u], p[v])).collect())
        .collect();
    let mut out = Vec::new();
    'graphs: for mask in 0u32..(1u32 << pairs.len()) {
        for map in &perm_maps {
            let mut image = 0u32;
            for (e, &to) in map.iter().enumerate() {
                if mask & (1 << e) != 0 {
                    image |= 1 << to;
                }
            }
            if image < mask {
                continue 'graphs;
            }
        }
        out.push(
            (0..pairs.len())
                .filter(|e| mask & (1 << e) != 0)
                .map(|e| pairs[e])
                .collect(),
        );
    }
    out
}

/// Post-hoc extension written directly from its definition with a dense
/// adjacency matrix: `T = max hop + delay` synchronous rounds where nodes
/// without embedded neighbors keep their row, embedded nodes mix
/// `lambda * own + (1 - lambda) * mean` and new nodes take the mean.
pub fn naive_in2v(
    n: usize,
    edges: &[(usize, usize)],
    train: &[bool],
    h0: &[Vec<f64>],
    lambda: f64,
    delay: usize,
) -> Vec<Vec<f64>> {
    let mut a = vec![vec![false; n]; n];
    for &(u, v) in edges {
        a[u][v] = true;
        a[v][u] = true;
    }
    // Hop count by repeated frontier expansion on the dense matrix.
    let mut reached = train.to_vec();
    let mut hops = 0;
    loop {
        let next: Vec<bool> = (0..n).map(|v| reached[v] || (0..n).any(|u| a[v][u] && reached[u])).collect();
        if next == reached {
            break;
        }
        reached = next;
        hops += 1;
    }
    let d = h0.first().map_or(0, Vec::len);
    let mut h = h0.to_vec();
    let mut s = train.to_vec();
    for _ in 0..hops + delay {
        let mut nh = h.clone();
        let mut ns = s.clone();
        for v in 0..n {
            let sel: Vec<usize> = (0..n).filter(|&u| a[v][u] && s[u]).collect();
            if sel.is_empty() {
                continue;
            }
            let mut m = vec![0.0; d];
            for &u in &sel {
                for k in 0..d {
                    m[k] += h[u][k];
                }
            }
            for x in m.iter_mut() {
                *x /= sel.len() as f64;
            }
            nh[v] = if s[v] {
                (0..d).map(|k| lambda * h[v][k] + (1.0 - lambda) * m[k]).collect()
            } else {
                m
            };
            ns[v] = true;
        }
        h = nh;
        s = ns;
    }
    h
}

/// Labels that record which nodes were read, in order.
pub struct AuditedLabels {
    pub inner: NodeLabels,
    pub log: Mutex<Vec<usize>>,
}

impl AuditedLabels {
    pub fn new(inner: NodeLabels) -> Self {
        AuditedLabels {
            inner,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn take_log(&self) -> Vec<usize> {
        std::mem::take(&mut *self.log.lock().unwrap())
    }
}

impl LabelSource for AuditedLabels {
    fn num_classes(&self) -> usize {
        self.inner.num_classes()
    }

    fn label(&self, node: usize) -> usize {
        self.log.lock().unwrap().push(node);
        self.inner.get(node)
    }
}

/// Two cliques of size `k` joined by one bridge edge `(k-1, k)`.
pub fn two_cliques(k: usize) -> Graph {
    let mut edges = Vec::new();
    for base in [0, k] {
        for u in 0..k {
            for v in u + 1..k {
                edges.push((base + u, base + v));
            }
        }
    }
    edges.push((k - 1, k));
    Graph::from_edges(2 * k, &edges).unwrap()
}
