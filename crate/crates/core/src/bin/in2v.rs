use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use in2v_core::downstream::{ClassifierConfig, ClassifierKind};
use in2v_core::extend::{AdjacencyNorm, ExtendConfig};
use in2v_core::pipeline::artifacts::{dataset_fingerprint, Workspace};
use in2v_core::pipeline::{
    cmd_eval, cmd_experiment, cmd_extend, cmd_split, cmd_stats, cmd_train, load_embedding, load_split,
    ExperimentSpec, Extension,
};
use in2v_core::{Dataset, In2vError, Result, TrainConfig};

/// Inductive node2vec: train, extend to unseen nodes, evaluate.
#[derive(Parser)]
#[command(name = "in2v", version)]
struct Cli {
    /// Base random seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory for artifacts [default: out, or the spec's output_dir].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print node, edge, class counts and adjusted homophily.
    Stats { dataset: PathBuf },
    /// Generate a train/val/test split.
    Split {
        #[arg(long, conflicts_with = "num_nodes", required_unless_present = "num_nodes")]
        dataset: Option<PathBuf>,
        #[arg(long)]
        num_nodes: Option<usize>,
        #[arg(long, default_value_t = 0.4)]
        train_fraction: f64,
    },
    /// Train embeddings on the training subgraph of a split.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        split: PathBuf,
        #[command(flatten)]
        cfg: TrainArgs,
    },
    /// Extend training embeddings to the whole graph.
    Extend {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        split: PathBuf,
        #[arg(long)]
        embedding: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::In2v)]
        method: MethodArg,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 0)]
        delay: usize,
        /// FP or MatMul iterations (defaults 40 and 10).
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long, value_enum, default_value_t = NormArg::Row)]
        norm: NormArg,
        /// Also write the result as TSV.
        #[arg(long)]
        tsv: Option<PathBuf>,
    },
    /// Classify nodes from a full-graph embedding.
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        split: PathBuf,
        #[arg(long)]
        embedding: PathBuf,
        /// Classifier config as JSON file.
        #[arg(long)]
        classifier: Option<PathBuf>,
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        /// Concatenate the original node features.
        #[arg(long)]
        use_features: bool,
    },
    /// Run a full experiment from a JSON spec.
    Experiment { spec: PathBuf },
}

#[derive(Args)]
struct TrainArgs {
    /// Training config as JSON file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    sample_rate: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    None,
    In2v,
    Fp,
    Matmul,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    Raw,
    Row,
    Sym,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Logreg,
    Mlp,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| In2vError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| In2vError::Parse {
        path: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })
}

fn print_json(v: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn train_config(args: &TrainArgs, seed: u64) -> Result<TrainConfig> {
    let mut cfg: TrainConfig = match &args.config {
        Some(p) => read_json(p)?,
        None => TrainConfig::default(),
    };
    cfg.seed = seed;
    if let Some(v) = args.dim {
        cfg.dim = v;
    }
    if let Some(v) = args.max_epochs {
        cfg.max_epochs = v;
    }
    if let Some(v) = args.learning_rate {
        cfg.learning_rate = v;
    }
    if let Some(v) = args.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = args.beta {
        cfg.beta = v;
    }
    if let Some(v) = args.sample_rate {
        cfg.sample_rate = v;
    }
    if let Some(v) = args.p {
        cfg.walk.p = v;
    }
    if let Some(v) = args.q {
        cfg.walk.q = v;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    match cli.command {
        Command::Stats { dataset } => {
            let ds = Dataset::load(&dataset)?;
            let (stats, err) = cmd_stats(&ds);
            print_json(&stats);
            if let Some(e) = err {
                return Err(e);
            }
        }
        Command::Split {
            dataset,
            num_nodes,
            train_fraction,
        } => {
            let n = match (dataset, num_nodes) {
                (Some(d), _) => Dataset::load(&d)?.graph.num_nodes(),
                (None, Some(n)) => n,
                (None, None) => unreachable!("clap requires one of them"),
            };
            let ws = Workspace::create(&out)?;
            let s = cmd_split(&ws, n, train_fraction, cli.seed)?;
            log::info!(
                "train {} / val {} / test {}",
                s.value.train.len(),
                s.value.val.len(),
                s.value.test.len()
            );
            println!("{}", s.path.display());
        }
        Command::Train { dataset, split, cfg } => {
            let ds = Dataset::load(&dataset)?;
            let split = load_split(&split, ds.graph.num_nodes())?;
            let cfg = train_config(&cfg, cli.seed)?;
            let ws = Workspace::create(&out)?;
            let emb = cmd_train(&ws, &ds, &dataset_fingerprint(&dataset)?, &split, &cfg)?;
            println!("{}", emb.path.display());
        }
        Command::Extend {
            dataset,
            split,
            embedding,
            method,
            lambda,
            delay,
            iterations,
            norm,
            tsv,
        } => {
            let ds = Dataset::load(&dataset)?;
            let split = load_split(&split, ds.graph.num_nodes())?;
            let emb = load_embedding(&embedding)?;
            let ext = match method {
                MethodArg::None => Extension::None,
                MethodArg::In2v => Extension::Extend(ExtendConfig::in2v(lambda, delay)),
                MethodArg::Fp => Extension::Extend(ExtendConfig::feature_propagation(iterations.unwrap_or(40))),
                MethodArg::Matmul => {
                    let norm = match norm {
                        NormArg::Raw => AdjacencyNorm::Raw,
                        NormArg::Row => AdjacencyNorm::Row,
                        NormArg::Sym => AdjacencyNorm::Sym,
                    };
                    Extension::Extend(ExtendConfig::matmul(iterations.unwrap_or(10), norm))
                }
            };
            let ws = Workspace::create(&out)?;
            let (full, report) = cmd_extend(&ws, &ds, &split, &emb, &ext)?;
            if let Some(p) = tsv {
                full.value.write_tsv(p)?;
            }
            if let Some(r) = report {
                eprintln!("{}", serde_json::to_string(&r).expect("serializable"));
            }
            println!("{}", full.path.display());
        }
        Command::Eval {
            dataset,
            split,
            embedding,
            classifier,
            kind,
            use_features,
        } => {
            let ds = Dataset::load(&dataset)?;
            let split = load_split(&split, ds.graph.num_nodes())?;
            let emb = load_embedding(&embedding)?;
            let mut cfg: ClassifierConfig = match classifier {
                Some(p) => read_json(&p)?,
                None => ClassifierConfig::default(),
            };
            match kind {
                Some(KindArg::Logreg) => cfg.kind = ClassifierKind::Logreg,
                Some(KindArg::Mlp) => cfg.kind = ClassifierKind::Mlp,
                None => {}
            }
            cfg.validate()?;
            print_json(&cmd_eval(&ds, &split.value, &emb.value, &cfg, use_features)?);
        }
        Command::Experiment { spec } => {
            let mut spec = ExperimentSpec::load(&spec)?;
            if let Some(o) = cli.out {
                spec.output_dir = o;
            }
            let outcome = cmd_experiment(&spec)?;
            for r in &outcome.reports {
                println!("{}\t{}\t{}", r.train_fraction, r.method, r.formatted());
            }
            eprintln!("summary: {}", outcome.summary_csv.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
