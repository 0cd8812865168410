//! Stage commands behind the CLI and the end-to-end experiment runner.
//!
//! Every stage writes its artifact under a content-hash name derived from its
//! inputs and config, next to a `.meta.json` provenance sidecar. An existing
//! artifact with the same name is reused instead of recomputed.

pub mod artifacts;
pub mod experiment;

use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, LabelSource};
use crate::downstream::{
    accuracy, concat_features, embedding_features, select::train_on_split, train_logreg,
    train_mlp, ClassifierConfig, ClassifierKind,
};
use crate::embedding::EmbeddingMatrix;
use crate::error::{In2vError, Result};
use crate::extend::{extend, zero_padded, ExtendConfig, ExtendReport};
use crate::split::SplitAssignment;
use crate::train::TrainConfig;

use artifacts::{content_hash, read_sidecar, require_file, write_sidecar, Provenance, Workspace};

pub use experiment::{cmd_experiment, ExperimentOutcome, ExperimentSpec, Method};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub name: String,
    pub features: Option<usize>,
    pub nodes: usize,
    pub edges_directed: usize,
    pub edges_undirected: usize,
    pub classes: usize,
    pub adjusted_homophily: Option<f64>,
}

/// Dataset summary. Homophily failures (e.g. an edgeless graph) are returned
/// alongside the other statistics rather than replacing them.
pub fn cmd_stats(ds: &Dataset) -> (DatasetStats, Option<In2vError>) {
    let (hom, err) = match ds.graph.adjusted_homophily(&ds.labels) {
        Ok(h) => (Some(h), None),
        Err(e) => (None, Some(e)),
    };
    let stats = DatasetStats {
        name: ds.name.clone(),
        features: ds.features.as_ref().map(|f| f.dim()),
        nodes: ds.graph.num_nodes(),
        edges_directed: ds.graph.directed_edge_count(),
        edges_undirected: ds.graph.undirected_edge_count(),
        classes: ds.labels.num_classes(),
        adjusted_homophily: hom,
    };
    (stats, err)
}

/// A stored artifact together with its content hash.
#[derive(Debug, Clone)]
pub struct Stored<T> {
    pub path: PathBuf,
    pub hash: String,
    pub value: T,
}

pub fn split_hash(num_nodes: usize, train_fraction: f64, seed: u64) -> String {
    content_hash(&[
        b"split",
        &(num_nodes as u64).to_le_bytes(),
        &train_fraction.to_le_bytes(),
        &seed.to_le_bytes(),
        crate::VERSION.as_bytes(),
    ])
}

pub fn cmd_split(
    ws: &Workspace,
    num_nodes: usize,
    train_fraction: f64,
    seed: u64,
) -> Result<Stored<SplitAssignment>> {
    let hash = split_hash(num_nodes, train_fraction, seed);
    let path = ws.split(&hash);
    let value = if path.is_file() {
        SplitAssignment::load(&path)?
    } else {
        let s = SplitAssignment::generate(num_nodes, train_fraction, seed)?;
        s.save(&path)?;
        let cfg = serde_json::json!({"num_nodes": num_nodes, "train_fraction": train_fraction});
        write_sidecar(&path, &Provenance::new("split", &hash, seed, &cfg, &[]))?;
        s
    };
    Ok(Stored { path, hash, value })
}

/// Loads a split file written by [`cmd_split`], checking it against the dataset.
pub fn load_split(path: &Path, num_nodes: usize) -> Result<Stored<SplitAssignment>> {
    require_file(path, "run `in2v split` first")?;
    let value = SplitAssignment::load(path)?;
    if value.num_nodes() != num_nodes {
        return Err(In2vError::validation(format!(
            "{} covers {} nodes but the dataset has {num_nodes}",
            path.display(),
            value.num_nodes()
        )));
    }
    let hash = split_hash(num_nodes, value.train_fraction, value.seed);
    Ok(Stored {
        path: path.to_path_buf(),
        hash,
        value,
    })
}

/// Trains on the split's training subgraph and stores the embedding
/// (one row per training node, in ascending node order).
///
/// The in-memory result is rounded to `f32` so a cache hit and a fresh run
/// give the same values.
pub fn cmd_train(
    ws: &Workspace,
    ds: &Dataset,
    dataset_hash: &str,
    split: &Stored<SplitAssignment>,
    cfg: &TrainConfig,
) -> Result<Stored<EmbeddingMatrix>> {
    cfg.validate()?;
    let cfg_json = serde_json::to_vec(cfg).expect("config serializes");
    let hash = content_hash(&[
        b"embedding",
        dataset_hash.as_bytes(),
        split.hash.as_bytes(),
        &cfg_json,
        crate::VERSION.as_bytes(),
    ]);
    let path = ws.embedding(&hash);
    if path.is_file() {
        let value = EmbeddingMatrix::load(&path)?;
        if value.rows() == split.value.train.len() {
            return Ok(Stored { path, hash, value });
        }
        log::warn!("ignoring stale embedding {}", path.display());
    }
    let value = train_on_split(&ds.graph, &split.value, cfg)?.quantized();
    value.save(&path)?;
    write_sidecar(
        &path,
        &Provenance::new("embedding", &hash, split.value.seed, cfg, &[dataset_hash, &split.hash]),
    )?;
    Ok(Stored { path, hash, value })
}

/// How training embeddings become full-graph embeddings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Extension {
    /// Unseen nodes keep zero rows.
    None,
    Extend(ExtendConfig),
}

impl Extension {
    pub fn config_json(&self) -> String {
        match self {
            Extension::None => "null".into(),
            Extension::Extend(c) => serde_json::to_string(c).expect("config serializes"),
        }
    }
}

pub fn cmd_extend(
    ws: &Workspace,
    ds: &Dataset,
    split: &Stored<SplitAssignment>,
    emb: &Stored<EmbeddingMatrix>,
    ext: &Extension,
) -> Result<(Stored<EmbeddingMatrix>, Option<ExtendReport>)> {
    let hash = content_hash(&[
        b"extended",
        emb.hash.as_bytes(),
        ext.config_json().as_bytes(),
        crate::VERSION.as_bytes(),
    ]);
    let path = ws.extended(&hash);
    if path.is_file() {
        let value = EmbeddingMatrix::load(&path)?;
        if value.rows() == ds.graph.num_nodes() {
            let report = read_sidecar(&path)
                .ok()
                .and_then(|p| p.report)
                .and_then(|r| serde_json::from_value(r).ok());
            return Ok((Stored { path, hash, value }, report));
        }
    }
    let (_, mapping) = ds.graph.induced_subgraph(&split.value.train)?;
    let (value, report) = match ext {
        Extension::None => (zero_padded(&emb.value, &ds.graph, &mapping)?.0, None),
        Extension::Extend(cfg) => {
            let (h, r) = extend(&emb.value, &ds.graph, &mapping, cfg)?;
            (h, Some(r))
        }
    };
    if !value.is_finite() {
        return Err(In2vError::NumericalOverflow("extended embedding is not finite".into()));
    }
    let value = value.quantized();
    value.save(&path)?;
    let mut prov = Provenance::new("extended", &hash, split.value.seed, ext, &[&emb.hash]);
    prov.report = report.as_ref().map(|r| serde_json::to_value(r).expect("report serializes"));
    write_sidecar(&path, &prov)?;
    Ok((Stored { path, hash, value }, report))
}

/// Feature rows for the classifier: the embedding, optionally followed by
/// the original node features.
pub fn classifier_input(ds: &Dataset, emb: &EmbeddingMatrix, use_features: bool) -> Result<Array2<f64>> {
    match (&ds.features, use_features) {
        (Some(f), true) => concat_features(emb, f),
        (None, true) => Err(In2vError::validation(format!(
            "dataset {} has no {}",
            ds.name,
            Dataset::FEATURES
        ))),
        _ => Ok(embedding_features(emb)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub val_accuracy: f64,
    pub test_accuracy: f64,
}

/// Fits the classifier on train rows, early-stops / scores on validation rows
/// and only then reads test labels.
pub fn evaluate_classifier(
    x: &Array2<f64>,
    labels: &impl LabelSource,
    split: &SplitAssignment,
    cfg: &ClassifierConfig,
    seed: u64,
) -> Result<Scores> {
    let (val, test) = match cfg.kind {
        ClassifierKind::Logreg => {
            let m = train_logreg(x.view(), labels, &split.train, cfg.weight_decay)?;
            let v = accuracy(&m, x.view(), labels, &split.val)?;
            (v, accuracy(&m, x.view(), labels, &split.test)?)
        }
        ClassifierKind::Mlp => {
            let (m, _) = train_mlp(x.view(), labels, &split.train, &split.val, cfg, seed)?;
            let v = accuracy(&m, x.view(), labels, &split.val)?;
            (v, accuracy(&m, x.view(), labels, &split.test)?)
        }
    };
    Ok(Scores {
        val_accuracy: val,
        test_accuracy: test,
    })
}

/// Evaluates a stored full-graph embedding on one split.
pub fn cmd_eval(
    ds: &Dataset,
    split: &SplitAssignment,
    emb: &EmbeddingMatrix,
    cfg: &ClassifierConfig,
    use_features: bool,
) -> Result<Scores> {
    if emb.rows() != ds.graph.num_nodes() {
        return Err(In2vError::validation(format!(
            "embedding has {} rows but the graph has {} nodes; run `in2v extend` first",
            emb.rows(),
            ds.graph.num_nodes()
        )));
    }
    let x = classifier_input(ds, emb, use_features)?;
    evaluate_classifier(&x, &ds.labels, split, cfg, split.seed)
}

/// Reads an embedding file; its hash is taken over the file bytes.
pub fn load_embedding(path: &Path) -> Result<Stored<EmbeddingMatrix>> {
    require_file(path, "run `in2v train` first")?;
    let bytes = std::fs::read(path).map_err(|e| In2vError::io(path, e))?;
    let value = EmbeddingMatrix::from_bytes(&bytes)
        .map_err(|e| In2vError::validation(format!("{}: {e}", path.display())))?;
    Ok(Stored {
        path: path.to_path_buf(),
        hash: content_hash(&[b"file", &bytes]),
        value,
    })
}
