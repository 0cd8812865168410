//! Content-addressed artifact layout with JSON provenance sidecars.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::Dataset;
use crate::error::{In2vError, Result};

pub const SPLITS: &str = "splits";
pub const EMBEDDINGS: &str = "embeddings";
pub const EXTENDED: &str = "extended";
pub const REPORTS: &str = "reports";

/// Hex SHA-256 prefix over length-delimited parts.
pub fn content_hash(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(&h.finalize()[..8])
}

/// Hash of the dataset files, so artifacts are invalidated when data changes.
pub fn dataset_fingerprint(dir: &Path) -> Result<String> {
    let mut parts = Vec::new();
    for name in [Dataset::EDGES, Dataset::LABELS, Dataset::FEATURES] {
        let p = dir.join(name);
        if p.is_file() {
            parts.push(fs::read(&p).map_err(|e| In2vError::io(&p, e))?);
        } else {
            parts.push(Vec::new());
        }
    }
    let refs: Vec<&[u8]> = parts.iter().map(Vec::as_slice).collect();
    Ok(content_hash(&refs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub kind: String,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub config: serde_json::Value,
    /// Hashes of the upstream artifacts.
    pub inputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<serde_json::Value>,
}

impl Provenance {
    pub fn new(kind: &str, hash: &str, seed: u64, config: &impl Serialize, inputs: &[&str]) -> Self {
        Provenance {
            kind: kind.into(),
            config_hash: hash.into(),
            seed,
            version: crate::VERSION.into(),
            config: serde_json::to_value(config).expect("configs serialize"),
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            report: None,
        }
    }
}

pub fn sidecar_path(artifact: &Path) -> PathBuf {
    let mut s = artifact.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

pub fn write_sidecar(artifact: &Path, prov: &Provenance) -> Result<()> {
    let path = sidecar_path(artifact);
    let text = serde_json::to_string_pretty(prov).map_err(|e| In2vError::Json {
        context: path.display().to_string(),
        source: e,
    })?;
    fs::write(&path, text + "\n").map_err(|e| In2vError::io(&path, e))
}

pub fn read_sidecar(artifact: &Path) -> Result<Provenance> {
    let path = sidecar_path(artifact);
    let text = fs::read_to_string(&path).map_err(|e| In2vError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| In2vError::Json {
        context: path.display().to_string(),
        source: e,
    })
}

/// Output directory with one subdirectory per stage.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub root: PathBuf,
}

impl Workspace {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        for sub in [SPLITS, EMBEDDINGS, EXTENDED, REPORTS] {
            let p = root.join(sub);
            fs::create_dir_all(&p).map_err(|e| In2vError::io(&p, e))?;
        }
        Ok(Workspace { root })
    }

    pub fn split(&self, hash: &str) -> PathBuf {
        self.root.join(SPLITS).join(format!("split-{hash}.json"))
    }

    pub fn embedding(&self, hash: &str) -> PathBuf {
        self.root.join(EMBEDDINGS).join(format!("emb-{hash}.bin"))
    }

    pub fn extended(&self, hash: &str) -> PathBuf {
        self.root.join(EXTENDED).join(format!("ext-{hash}.bin"))
    }

    pub fn report(&self, name: &str) -> PathBuf {
        self.root.join(REPORTS).join(name)
    }
}

/// Actionable error for an upstream artifact that is not there.
pub fn require_file(path: &Path, hint: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(In2vError::MissingArtifact {
            path: path.to_path_buf(),
            hint: hint.into(),
        })
    }
}
