//! End-to-end experiment: select embedding hyperparameters on the first few
//! splits, then train, extend and evaluate every method on every split.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::artifacts::{dataset_fingerprint, Workspace};
use super::{classifier_input, cmd_extend, cmd_split, cmd_train, evaluate_classifier, Extension, Stored};
use crate::data::Dataset;
use crate::downstream::report::{write_results_csv, write_summary_csv};
use crate::downstream::{select_embedding_config, Candidate, ClassifierConfig, EvalReport, SeedResult};
use crate::embedding::EmbeddingMatrix;
use crate::error::{In2vError, Result};
use crate::extend::{ExtendConfig, ExtendMethod, DEFAULT_FP_ITERATIONS};
use crate::split::SplitAssignment;
use crate::train::TrainConfig;

/// Embedding variants compared by an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Inductive N2V with zero rows for unseen nodes.
    Inductive,
    Fp,
    In2vFrozen,
    In2vPosthoc,
    PosthocLosses,
    PosthocSampling,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Inductive,
        Method::Fp,
        Method::In2vFrozen,
        Method::In2vPosthoc,
        Method::PosthocLosses,
        Method::PosthocSampling,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Inductive => "inductive",
            Method::Fp => "fp",
            Method::In2vFrozen => "in2v_frozen",
            Method::In2vPosthoc => "in2v_posthoc",
            Method::PosthocLosses => "posthoc_losses",
            Method::PosthocSampling => "posthoc_sampling",
        }
    }
}

/// One JSON document describing a full run. Only `dataset` is required.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Directory holding `edges.txt`, `labels.tsv` and optionally `features.tsv`.
    pub dataset: PathBuf,
    pub output_dir: PathBuf,
    pub train_fractions: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Leading seeds used for embedding hyperparameter search.
    pub search_splits: usize,
    pub methods: Vec<Method>,
    /// Base embedding configs (their loss weights and sample rate are used as given).
    pub train_grid: Vec<TrainConfig>,
    /// Post-hoc (lambda, delay) candidates.
    pub extend_grid: Vec<ExtendConfig>,
    pub fp_iterations: Vec<usize>,
    /// (alpha, beta) candidates for the loss-modified variant.
    pub loss_grid: Vec<(f64, f64)>,
    pub sample_rates: Vec<f64>,
    pub classifier_grid: Vec<ClassifierConfig>,
    /// L2 weight of the selection logistic regression.
    pub selection_l2: f64,
    pub use_original_features: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            dataset: PathBuf::new(),
            output_dir: PathBuf::from("out"),
            train_fractions: vec![0.4],
            seeds: (0..10).collect(),
            search_splits: 3,
            methods: Method::ALL.to_vec(),
            train_grid: vec![TrainConfig::default()],
            extend_grid: vec![ExtendConfig::in2v(1.0, 0), ExtendConfig::in2v(0.75, 5)],
            fp_iterations: DEFAULT_FP_ITERATIONS.to_vec(),
            loss_grid: vec![(0.0, 0.0), (0.1, 0.001), (1.0, 0.01)],
            sample_rates: vec![0.0, 0.2, 0.4],
            classifier_grid: ClassifierConfig::desk_grid(),
            selection_l2: 1e-4,
            use_original_features: false,
        }
    }
}

impl ExperimentSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| In2vError::io(path, e))?;
        let mut spec: ExperimentSpec = serde_json::from_str(&text).map_err(|e| In2vError::Parse {
            path: path.display().to_string(),
            line: e.line(),
            message: e.to_string(),
        })?;
        // Relative paths are relative to the spec file.
        let base = path.parent().unwrap_or(Path::new("."));
        if spec.dataset.is_relative() {
            spec.dataset = base.join(&spec.dataset);
        }
        if spec.output_dir.is_relative() {
            spec.output_dir = base.join(&spec.output_dir);
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for name in [Dataset::EDGES, Dataset::LABELS] {
            let p = self.dataset.join(name);
            if !p.is_file() {
                return Err(In2vError::MissingArtifact {
                    path: p,
                    hint: "set `dataset` to a directory with edges.txt and labels.tsv".into(),
                });
            }
        }
        let empty = |what: &str| Err(In2vError::validation(format!("experiment {what} is empty")));
        if self.train_fractions.is_empty() {
            return empty("train_fractions");
        }
        if self.seeds.is_empty() {
            return empty("seeds");
        }
        if self.methods.is_empty() {
            return empty("methods");
        }
        if self.train_grid.is_empty() {
            return empty("train_grid");
        }
        if self.extend_grid.is_empty() {
            return empty("extend_grid");
        }
        if self.classifier_grid.is_empty() {
            return empty("classifier_grid");
        }
        if self.methods.contains(&Method::Fp) && self.fp_iterations.is_empty() {
            return empty("fp_iterations");
        }
        if self.methods.contains(&Method::PosthocLosses) && self.loss_grid.is_empty() {
            return empty("loss_grid");
        }
        if self.methods.contains(&Method::PosthocSampling) && self.sample_rates.is_empty() {
            return empty("sample_rates");
        }
        if self.search_splits == 0 {
            return Err(In2vError::validation("search_splits must be positive"));
        }
        for c in &self.train_grid {
            c.validate()?;
        }
        for c in &self.extend_grid {
            c.validate()?;
            if c.method != ExtendMethod::In2v {
                return Err(In2vError::validation("extend_grid holds post-hoc configs only"));
            }
        }
        for c in &self.classifier_grid {
            c.validate()?;
        }
        Ok(())
    }
}

/// Hyperparameters chosen for one method at one train fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodPlan {
    pub method: Method,
    pub train: TrainConfig,
    pub extension: Extension,
    /// Mean logreg validation accuracy on the search splits, if searched.
    pub search_score: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub plans: Vec<(f64, Vec<MethodPlan>)>,
    pub rows: Vec<SeedResult>,
    pub reports: Vec<EvalReport>,
    pub results_csv: PathBuf,
    pub summary_csv: PathBuf,
}

/// Index of the best score among `idx`; ties go to the first.
fn best_of(scores: &[f64], idx: &[usize]) -> usize {
    let mut best = idx[0];
    for &i in &idx[1..] {
        if scores[i] > scores[best] {
            best = i;
        }
    }
    best
}

/// Chooses embedding hyperparameters for every requested method.
fn plan_methods(
    spec: &ExperimentSpec,
    ds: &Dataset,
    search: &[SplitAssignment],
) -> Result<Vec<MethodPlan>> {
    // Stage 1: base training config and post-hoc setting, plus FP iterations.
    let mut candidates = Vec::new();
    for t in &spec.train_grid {
        for e in &spec.extend_grid {
            candidates.push(Candidate {
                train: t.clone(),
                extend: e.clone(),
            });
        }
    }
    let n_posthoc = candidates.len();
    if spec.methods.contains(&Method::Fp) {
        for t in &spec.train_grid {
            for &it in &spec.fp_iterations {
                candidates.push(Candidate {
                    train: t.clone(),
                    extend: ExtendConfig::feature_propagation(it),
                });
            }
        }
    }
    let sel = select_embedding_config(&ds.graph, &ds.labels, search, &candidates, spec.selection_l2)?;
    let posthoc: Vec<usize> = (0..n_posthoc).collect();
    let best = best_of(&sel.scores, &posthoc);
    if sel.scores[best] == f64::NEG_INFINITY {
        return Err(In2vError::NumericalOverflow(
            "every embedding candidate failed during selection".into(),
        ));
    }
    let base = candidates[best].train.clone();
    let base_ext = candidates[best].extend.clone();
    log::info!("selected base config {} (score {:.4})", best, sel.scores[best]);

    // Stage 2: training modifications on top of the chosen base.
    let mut stage2 = Vec::new();
    let mut loss_idx = Vec::new();
    let mut sampling_idx = Vec::new();
    if spec.methods.contains(&Method::PosthocLosses) {
        for &(alpha, beta) in &spec.loss_grid {
            loss_idx.push(stage2.len());
            stage2.push(Candidate {
                train: TrainConfig { alpha, beta, ..base.clone() },
                extend: base_ext.clone(),
            });
        }
    }
    if spec.methods.contains(&Method::PosthocSampling) {
        for &sample_rate in &spec.sample_rates {
            sampling_idx.push(stage2.len());
            stage2.push(Candidate {
                train: TrainConfig { sample_rate, ..base.clone() },
                extend: base_ext.clone(),
            });
        }
    }
    let sel2 = if stage2.is_empty() {
        None
    } else {
        Some(select_embedding_config(&ds.graph, &ds.labels, search, &stage2, spec.selection_l2)?)
    };

    let mut plans = Vec::new();
    for &m in &spec.methods {
        let plan = match m {
            Method::Inductive => MethodPlan {
                method: m,
                train: base.clone(),
                extension: Extension::None,
                search_score: None,
            },
            Method::In2vFrozen => MethodPlan {
                method: m,
                train: base.clone(),
                extension: Extension::Extend(ExtendConfig::in2v(1.0, 0)),
                search_score: None,
            },
            Method::In2vPosthoc => MethodPlan {
                method: m,
                train: base.clone(),
                extension: Extension::Extend(base_ext.clone()),
                search_score: Some(sel.scores[best]),
            },
            Method::Fp => {
                let idx: Vec<usize> = (n_posthoc..candidates.len())
                    .filter(|&i| candidates[i].train == base)
                    .collect();
                let i = best_of(&sel.scores, &idx);
                MethodPlan {
                    method: m,
                    train: base.clone(),
                    extension: Extension::Extend(candidates[i].extend.clone()),
                    search_score: Some(sel.scores[i]),
                }
            }
            Method::PosthocLosses | Method::PosthocSampling => {
                let s = sel2.as_ref().expect("stage two ran");
                let idx = if m == Method::PosthocLosses { &loss_idx } else { &sampling_idx };
                let i = best_of(&s.scores, idx);
                MethodPlan {
                    method: m,
                    train: stage2[i].train.clone(),
                    extension: Extension::Extend(stage2[i].extend.clone()),
                    search_score: Some(s.scores[i]),
                }
            }
        };
        plans.push(plan);
    }
    Ok(plans)
}

fn json(v: &impl Serialize) -> String {
    serde_json::to_string(v).expect("configs serialize")
}

/// Runs every plan on every split and classifier config.
fn evaluate_plans(
    spec: &ExperimentSpec,
    ws: &Workspace,
    ds: &Dataset,
    dataset_hash: &str,
    fraction: f64,
    splits: &[Stored<SplitAssignment>],
    plans: &[MethodPlan],
) -> Vec<SeedResult> {
    // Train each distinct (config, split) once.
    let mut train_jobs: BTreeMap<(String, usize), &TrainConfig> = BTreeMap::new();
    for p in plans {
        for s in 0..splits.len() {
            train_jobs.entry((json(&p.train), s)).or_insert(&p.train);
        }
    }
    let jobs: Vec<_> = train_jobs.into_iter().collect();
    let trained: BTreeMap<(String, usize), std::result::Result<Stored<EmbeddingMatrix>, String>> = jobs
        .par_iter()
        .map(|(key, cfg)| {
            let r = cmd_train(ws, ds, dataset_hash, &splits[key.1], cfg).map_err(|e| e.to_string());
            (key.clone(), r)
        })
        .collect();

    let cells: Vec<(usize, usize)> = (0..plans.len())
        .flat_map(|p| (0..splits.len()).map(move |s| (p, s)))
        .collect();
    let per_cell: Vec<Vec<SeedResult>> = cells
        .par_iter()
        .map(|&(p, s)| {
            let plan = &plans[p];
            let split = &splits[s];
            let row = |cfg: &ClassifierConfig, scores: std::result::Result<super::Scores, String>| {
                let (val, test, error) = match scores {
                    Ok(sc) => (Some(sc.val_accuracy), Some(sc.test_accuracy), String::new()),
                    Err(e) => (None, None, e),
                };
                SeedResult {
                    method: plan.method.as_str().into(),
                    train_fraction: fraction,
                    seed: split.value.seed,
                    train_config: json(&plan.train),
                    extend_config: plan.extension.config_json(),
                    classifier_config: json(cfg),
                    val_accuracy: val,
                    test_accuracy: test,
                    error,
                }
            };
            let input = trained[&(json(&plan.train), s)]
                .as_ref()
                .map_err(Clone::clone)
                .and_then(|emb| {
                    let (full, _) = cmd_extend(ws, ds, split, emb, &plan.extension).map_err(|e| e.to_string())?;
                    classifier_input(ds, &full.value, spec.use_original_features).map_err(|e| e.to_string())
                });
            spec.classifier_grid
                .iter()
                .map(|cfg| {
                    let scores = input.as_ref().map_err(Clone::clone).and_then(|x| {
                        evaluate_classifier(x, &ds.labels, &split.value, cfg, split.value.seed)
                            .map_err(|e| e.to_string())
                    });
                    row(cfg, scores)
                })
                .collect()
        })
        .collect();
    per_cell.into_iter().flatten().collect()
}

/// Picks, per method, the classifier config with the best mean validation
/// accuracy over all seeds (ties go to the first config) and aggregates its
/// test accuracies.
pub fn summarize(rows: &[SeedResult]) -> Result<Vec<EvalReport>> {
    let mut groups: Vec<((String, u64), Vec<&SeedResult>)> = Vec::new();
    for r in rows {
        let key = (r.method.clone(), r.train_fraction.to_bits());
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    let mut reports = Vec::new();
    for (_, group) in groups {
        let mut configs: Vec<&str> = Vec::new();
        for r in &group {
            if !configs.contains(&r.classifier_config.as_str()) {
                configs.push(&r.classifier_config);
            }
        }
        let score = |c: &str| {
            let vals: Vec<f64> = group
                .iter()
                .filter(|r| r.classifier_config == c)
                .map(|r| r.val_accuracy.unwrap_or(f64::NEG_INFINITY))
                .collect();
            vals.iter().sum::<f64>() / vals.len() as f64
        };
        let mut best = configs[0];
        for &c in &configs[1..] {
            if score(c) > score(best) {
                best = c;
            }
        }
        let chosen: Vec<SeedResult> = group
            .iter()
            .filter(|r| r.classifier_config == best)
            .map(|r| (*r).clone())
            .collect();
        reports.push(EvalReport::from_results(&chosen)?);
    }
    Ok(reports)
}

pub fn cmd_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    spec.validate()?;
    let ds = Dataset::load(&spec.dataset)?;
    let dataset_hash = dataset_fingerprint(&spec.dataset)?;
    let ws = Workspace::create(&spec.output_dir)?;
    let n = ds.graph.num_nodes();

    let mut rows = Vec::new();
    let mut all_plans = Vec::new();
    for &fraction in &spec.train_fractions {
        let splits = spec
            .seeds
            .iter()
            .map(|&s| cmd_split(&ws, n, fraction, s))
            .collect::<Result<Vec<_>>>()?;
        let k = spec.search_splits.min(splits.len());
        let search: Vec<SplitAssignment> = splits[..k].iter().map(|s| s.value.clone()).collect();
        log::info!("fraction {fraction}: selecting embedding configs on {k} splits");
        let plans = plan_methods(spec, &ds, &search)?;
        log::info!("fraction {fraction}: evaluating {} methods", plans.len());
        rows.extend(evaluate_plans(spec, &ws, &ds, &dataset_hash, fraction, &splits, &plans));
        all_plans.push((fraction, plans));
    }

    let reports = summarize(&rows)?;
    let results_csv = ws.report("results.csv");
    let summary_csv = ws.report("summary.csv");
    write_results_csv(&results_csv, &rows)?;
    write_summary_csv(&summary_csv, &reports)?;
    let plans_path = ws.report("plans.json");
    let text = serde_json::to_string_pretty(&all_plans).map_err(|e| In2vError::Json {
        context: plans_path.display().to_string(),
        source: e,
    })?;
    fs::write(&plans_path, text + "\n").map_err(|e| In2vError::io(&plans_path, e))?;
    let reports_path = ws.report("reports.json");
    let text = serde_json::to_string_pretty(&reports).map_err(|e| In2vError::Json {
        context: reports_path.display().to_string(),
        source: e,
    })?;
    fs::write(&reports_path, text + "\n").map_err(|e| In2vError::io(&reports_path, e))?;

    Ok(ExperimentOutcome {
        plans: all_plans,
        rows,
        reports,
        results_csv,
        summary_csv,
    })
}
