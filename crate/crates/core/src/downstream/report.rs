//! Per-seed results, aggregated reports and their CSV/JSON forms.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{In2vError, Result};

/// One evaluation cell: a method on one split seed with one classifier config.
/// Configs are stored as JSON strings so each CSV row is self-describing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub method: String,
    pub train_fraction: f64,
    pub seed: u64,
    pub train_config: String,
    pub extend_config: String,
    pub classifier_config: String,
    pub val_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
    /// Empty unless the cell failed.
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub train_fraction: f64,
    pub seeds: Vec<u64>,
    pub per_seed_accuracy: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub train_config: String,
    pub extend_config: String,
    pub classifier_config: String,
    pub failures: usize,
}

/// Mean and population standard deviation. Empty input gives NaNs.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl EvalReport {
    /// Aggregates rows that share method, fraction and configs. Failed rows
    /// are counted but left out of the statistics.
    pub fn from_results(rows: &[SeedResult]) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| In2vError::validation("cannot aggregate zero results"))?;
        let mut seeds = Vec::new();
        let mut acc = Vec::new();
        let mut failures = 0;
        for r in rows {
            match r.test_accuracy {
                Some(a) if r.error.is_empty() => {
                    seeds.push(r.seed);
                    acc.push(a);
                }
                _ => failures += 1,
            }
        }
        let (mean, std) = mean_std(&acc);
        Ok(EvalReport {
            method: first.method.clone(),
            train_fraction: first.train_fraction,
            seeds,
            per_seed_accuracy: acc,
            mean,
            std,
            train_config: first.train_config.clone(),
            extend_config: first.extend_config.clone(),
            classifier_config: first.classifier_config.clone(),
            failures,
        })
    }

    /// `83.93 ± 1.16` style, in percent.
    pub fn formatted(&self) -> String {
        format!("{:.2} ± {:.2}", 100.0 * self.mean, 100.0 * self.std)
    }
}

pub fn write_results_csv(path: impl AsRef<Path>, rows: &[SeedResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| In2vError::io(path.as_ref(), e))
}

#[derive(Debug, Serialize)]
struct SummaryRow<'a> {
    method: &'a str,
    train_fraction: f64,
    seeds: usize,
    failures: usize,
    mean: f64,
    std: f64,
    formatted: String,
}

/// One row per report: method, fraction, mean and std.
pub fn write_summary_csv(path: impl AsRef<Path>, reports: &[EvalReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    for r in reports {
        w.serialize(SummaryRow {
            method: &r.method,
            train_fraction: r.train_fraction,
            seeds: r.per_seed_accuracy.len(),
            failures: r.failures,
            mean: r.mean,
            std: r.std,
            formatted: r.formatted(),
        })?;
    }
    w.flush().map_err(|e| In2vError::io(path.as_ref(), e))
}
