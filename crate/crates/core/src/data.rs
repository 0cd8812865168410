//! Node labels, node features, and dataset directories.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{In2vError, Result};
use crate::graph::Graph;

/// Read access to node labels.
///
/// Downstream training and model selection only see labels through this
/// trait, which lets tests audit exactly which nodes were looked at.
pub trait LabelSource: Sync {
    fn num_classes(&self) -> usize;
    fn label(&self, node: usize) -> usize;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeLabels {
    labels: Vec<usize>,
    num_classes: usize,
}

impl NodeLabels {
    /// Every class in `0..=max` must occur at least once.
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        let num_classes = labels.iter().max().map_or(0, |m| m + 1);
        let mut seen = vec![false; num_classes];
        for &y in &labels {
            seen[y] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(In2vError::validation(format!(
                "class {missing} of 0..{num_classes} has no nodes"
            )));
        }
        Ok(NodeLabels {
            labels,
            num_classes,
        })
    }

    /// Reads `node_id<TAB>label` lines; every node in `0..num_nodes` needs exactly one.
    pub fn load(path: impl AsRef<Path>, num_nodes: usize) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| In2vError::io(path, e))?;
        let mut labels = vec![None; num_nodes];
        for (lineno, node, rest) in keyed_lines(&text, path, num_nodes)? {
            let y: usize = rest.trim().parse().map_err(|_| In2vError::Parse {
                path: path.display().to_string(),
                line: lineno,
                message: format!("bad label {rest:?}"),
            })?;
            if labels[node].replace(y).is_some() {
                return Err(In2vError::Parse {
                    path: path.display().to_string(),
                    line: lineno,
                    message: format!("duplicate label for node {node}"),
                });
            }
        }
        let labels = labels
            .into_iter()
            .enumerate()
            .map(|(v, y)| {
                y.ok_or_else(|| {
                    In2vError::validation(format!("{}: node {v} has no label", path.display()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn get(&self, v: usize) -> usize {
        self.labels[v]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }
}

impl LabelSource for NodeLabels {
    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn label(&self, node: usize) -> usize {
        self.labels[node]
    }
}

/// Dense row-major node features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    dim: usize,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * dim {
            return Err(In2vError::validation(format!(
                "{} values for a {rows}x{dim} feature matrix",
                values.len()
            )));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(In2vError::validation("feature matrix contains non-finite values"));
        }
        Ok(FeatureMatrix { rows, dim, values })
    }

    /// Reads `node_id<TAB>f1,f2,...` lines. Rows not listed are all-zero.
    pub fn load(path: impl AsRef<Path>, num_nodes: usize) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| In2vError::io(path, e))?;
        let mut rows: Vec<Option<Vec<f64>>> = vec![None; num_nodes];
        let mut dim = None;
        for (lineno, node, rest) in keyed_lines(&text, path, num_nodes)? {
            let parse_err = |message: String| In2vError::Parse {
                path: path.display().to_string(),
                line: lineno,
                message,
            };
            let row = rest
                .trim()
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|_| parse_err(format!("bad value {s:?}"))))
                .collect::<Result<Vec<_>>>()?;
            match dim {
                None => dim = Some(row.len()),
                Some(d) if d != row.len() => {
                    return Err(parse_err(format!("expected {d} values, got {}", row.len())))
                }
                _ => {}
            }
            rows[node] = Some(row);
        }
        let dim = dim.unwrap_or(0);
        let mut values = Vec::with_capacity(num_nodes * dim);
        for row in rows {
            match row {
                Some(r) => values.extend(r),
                None => values.extend(std::iter::repeat_n(0.0, dim)),
            }
        }
        Self::new(num_nodes, dim, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

fn keyed_lines<'a>(
    text: &'a str,
    path: &Path,
    num_nodes: usize,
) -> Result<Vec<(usize, usize, &'a str)>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim_end();
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| In2vError::Parse {
            path: path.display().to_string(),
            line: lineno,
            message,
        };
        let (id, rest) = line
            .split_once('\t')
            .ok_or_else(|| parse_err("expected `node_id<TAB>value`".into()))?;
        let node: usize = id
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("bad node id {id:?}")))?;
        if node >= num_nodes {
            return Err(parse_err(format!("node {node} out of range for {num_nodes} nodes")));
        }
        out.push((lineno, node, rest));
    }
    Ok(out)
}

/// A graph with labels and optional features, read from one directory.
///
/// Expected files: `edges.txt`, `labels.tsv` and optionally `features.tsv`.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub graph: Graph,
    pub labels: NodeLabels,
    pub features: Option<FeatureMatrix>,
}

impl Dataset {
    pub const EDGES: &'static str = "edges.txt";
    pub const LABELS: &'static str = "labels.tsv";
    pub const FEATURES: &'static str = "features.tsv";

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let require = |name: &str| -> Result<PathBuf> {
            let p = dir.join(name);
            if p.is_file() {
                Ok(p)
            } else {
                Err(In2vError::MissingArtifact {
                    path: p,
                    hint: "dataset directories need edges.txt and labels.tsv".into(),
                })
            }
        };
        let edges = require(Self::EDGES)?;
        let labels_path = require(Self::LABELS)?;
        let mut graph = Graph::load_edge_list(&edges)?;
        let labels = {
            // Labels may cover more nodes than the highest edge endpoint.
            let text = fs::read_to_string(&labels_path).map_err(|e| In2vError::io(&labels_path, e))?;
            let max_id = text
                .lines()
                .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
                .filter_map(|l| l.split('\t').next()?.trim().parse::<usize>().ok())
                .max()
                .map_or(0, |m| m + 1);
            if max_id > graph.num_nodes() {
                let edge_list: Vec<_> = graph.edges().collect();
                graph = Graph::from_edges(max_id, &edge_list)?;
            }
            NodeLabels::load(&labels_path, graph.num_nodes())?
        };
        let feat_path = dir.join(Self::FEATURES);
        let features = if feat_path.is_file() {
            Some(FeatureMatrix::load(&feat_path, graph.num_nodes())?)
        } else {
            None
        };
        let name = dir
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into());
        Ok(Dataset {
            name,
            graph,
            labels,
            features,
        })
    }
}
