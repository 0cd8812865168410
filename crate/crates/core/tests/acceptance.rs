//! One PASS/FAIL line per acceptance criterion. Run with
//! `cargo test --release -p in2v-core --test acceptance -- --nocapture`.
//!
//! Criteria on public citation datasets read them from `$IN2V_DATA_DIR/<name>`
//! (default `data/<name>`) and fail when the files are absent.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use common::*;
use in2v_core::downstream::{select_embedding_config, Candidate};
use in2v_core::extend::{feature_propagation, in2v_extend, in2v_iterate, matmul_extend, zero_padded};
use in2v_core::pipeline::{cmd_experiment, cmd_stats, ExperimentSpec, Method};
use in2v_core::{AdjacencyNorm, Dataset, EmbeddingMatrix, ExtendConfig, Graph, SplitAssignment, TrainConfig};

type Outcome = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn ensure(cond: bool, msg: impl Into<String>) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn rows_of(e: &EmbeddingMatrix) -> Vec<Vec<f64>> {
    (0..e.rows()).map(|i| e.row(i).to_vec()).collect()
}

fn oracle_equivalence() -> Outcome {
    let expected = [1, 2, 4, 11, 34, 156];
    let mut runs = 0usize;
    for n in 1..=6 {
        let graphs = nonisomorphic_graphs(n);
        ensure(graphs.len() == expected[n - 1], format!("{} graphs on {n} nodes", graphs.len()))?;
        for (gi, edges) in graphs.iter().enumerate() {
            let g = Graph::from_edges(n, edges).unwrap();
            let h0 = rows_of(&random_matrix(n, 2, (n * 1000 + gi) as u64));
            for mask in 1u32..(1 << n) {
                let flags: Vec<bool> = (0..n).map(|v| mask & (1 << v) != 0).collect();
                let train: Vec<usize> = (0..n).filter(|&v| flags[v]).collect();
                let padded: Vec<Vec<f64>> =
                    (0..n).map(|v| if flags[v] { h0[v].clone() } else { vec![0.0; 2] }).collect();
                let e = EmbeddingMatrix::from_rows(&train.iter().map(|&v| h0[v].clone()).collect::<Vec<_>>()).unwrap();
                let (_, m) = g.induced_subgraph(&train).unwrap();
                for lambda in [0.0, 0.5, 1.0] {
                    for delay in [0, 3] {
                        let (h, _) = in2v_extend(&e, &g, &m, &ExtendConfig::in2v(lambda, delay)).unwrap();
                        let want = naive_in2v(n, edges, &flags, &padded, lambda, delay);
                        ensure(rows_of(&h) == want, format!("mismatch: n={n} graph {gi} mask {mask:b} λ={lambda} delay={delay}"))?;
                        runs += 1;
                    }
                }
            }
        }
    }
    Ok(format!("208 graphs, {runs} exact comparisons"))
}

fn worked_examples() -> Outcome {
    // Path 1-2-3 with the endpoints trained.
    let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
    let (_, m) = g.induced_subgraph(&[0, 2]).unwrap();
    let e = EmbeddingMatrix::from_rows(&[vec![0.7, -1.3], vec![2.1, 0.4]]).unwrap();
    let (h, _) = in2v_extend(&e, &g, &m, &ExtendConfig::in2v(1.0, 0)).unwrap();
    let avg: Vec<f64> = (0..2).map(|k| (e.row(0)[k] + e.row(1)[k]) / 2.0).collect();
    ensure(h.row(1) == avg.as_slice(), "middle node is not the mean of its neighbors")?;

    // Source t, chain x1..x4; x1..x3 carry two untrained leaves each.
    let mut edges = vec![(0, 1), (1, 2), (2, 3), (3, 4)];
    let mut next = 5;
    for x in 1..=3 {
        for _ in 0..2 {
            edges.push((x, next));
            next += 1;
        }
    }
    let g = Graph::from_edges(next, &edges).unwrap();
    let (_, m) = g.induced_subgraph(&[0]).unwrap();
    let src = EmbeddingMatrix::from_rows(&[vec![3.0, -5.0, 0.25]]).unwrap();
    let (h, rep) = in2v_extend(&src, &g, &m, &ExtendConfig::in2v(1.0, 0)).unwrap();
    ensure(rep.iterations_run == 4, format!("{} iterations", rep.iterations_run))?;
    ensure(h.row(4) == src.row(0), "far node differs from the source")?;
    let (h0, s0) = zero_padded(&src, &g, &m).unwrap();
    let (_, s3) = in2v_iterate(&g, h0, s0, 1.0, 3, false);
    ensure(!s3[4], "far node covered before the fourth iteration")?;

    // Unfiltered mean propagation dilutes by the degree at each hop.
    for k in 1..=4 {
        let (h, _) = matmul_extend(&src, &g, &m, k, AdjacencyNorm::Row, false).unwrap();
        let scale = 4f64.powi(k.min(3) as i32);
        let want: Vec<f64> = src.row(0).iter().map(|x| x / scale).collect();
        ensure(h.row(k) == want.as_slice(), format!("hop {k}: {:?} vs {want:?}", h.row(k)))?;
        if k < 4 {
            ensure(h.row(k + 1).iter().all(|&x| x == 0.0), format!("hop {} reached early", k + 1))?;
        }
    }
    Ok("exact mean and reach; naive decay is h/64 at hop 4".into())
}

fn frozen_fixed_point() -> Outcome {
    for seed in 0..100 {
        let g = erdos_renyi(200, 0.012, seed);
        let train: Vec<usize> = (0..200).filter(|v| (v * 31 + seed as usize * 7) % 10 < 2).collect();
        let (_, m) = g.induced_subgraph(&train).unwrap();
        let (mut h, mut s) = zero_padded(&random_matrix(train.len(), 4, seed), &g, &m).unwrap();
        for it in 0..25 {
            let (nh, ns) = in2v_iterate(&g, h.clone(), s.clone(), 1.0, 1, true);
            for (v, &assigned) in s.iter().enumerate() {
                if assigned && nh.row(v) != h.row(v) {
                    return Err(format!("graph {seed}: row {v} changed at iteration {}", it + 1));
                }
            }
            h = nh;
            s = ns;
        }
    }
    Ok("100 graphs, 25 iterations each".into())
}

fn gradient_suite() -> Outcome {
    let checks = [
        ("sgns", gradcheck::sgns(50)),
        ("close", gradcheck::close(50)),
        ("div", gradcheck::div(50)),
        ("combined", gradcheck::combined(50)),
        ("logreg", gradcheck::logreg(50)),
        ("mlp", gradcheck::mlp(50)),
    ];
    let worst = checks.iter().map(|c| c.1).fold(0.0, f64::max);
    let detail: Vec<String> = checks.iter().map(|(n, e)| format!("{n} {e:.1e}")).collect();
    ensure(worst <= 1e-4, detail.join(", "))?;
    Ok(detail.join(", "))
}

fn fp_clamping() -> Outcome {
    let base = erdos_renyi(150, 0.04, 9);
    let mut edges: Vec<(usize, usize)> = base.edges().collect();
    edges.extend((0..149).map(|v| (v, v + 1)));
    let g = Graph::from_edges(150, &edges).unwrap();
    let train: Vec<usize> = (0..150).step_by(4).collect();
    let (_, m) = g.induced_subgraph(&train).unwrap();
    let e = random_matrix(train.len(), 4, 9);
    let mut prev: Option<EmbeddingMatrix> = None;
    let mut deltas = Vec::new();
    for it in 1..=60 {
        let (h, _) = feature_propagation(&e, &g, &m, it, true).unwrap();
        for (i, &v) in train.iter().enumerate() {
            ensure(h.row(v) == e.row(i), format!("train row {v} moved at iteration {it}"))?;
        }
        if let Some(p) = &prev {
            deltas.push(h.values().iter().zip(p.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        }
        prev = Some(h);
    }
    // deltas[i] is the change made by iteration i + 2.
    for (i, w) in deltas.windows(2).enumerate().skip(4) {
        ensure(w[1] <= w[0], format!("difference grew at iteration {}: {w:?}", i + 3))?;
    }
    Ok(format!("final step change {:.1e}", deltas.last().unwrap()))
}

fn dataset_path(name: &str) -> std::result::Result<PathBuf, String> {
    let p = data_dir().join(name);
    if p.join("edges.txt").is_file() && p.join("labels.tsv").is_file() {
        Ok(p)
    } else {
        Err(format!("dataset not found at {} (set IN2V_DATA_DIR)", p.display()))
    }
}

fn dataset_statistics() -> Outcome {
    let mut out = Vec::new();
    for (name, nodes, edges, classes, hom) in [("cora", 2708, 10556, 7, 0.77), ("citeseer", 3327, 9104, 6, 0.67)] {
        let ds = Dataset::load(dataset_path(name)?).map_err(|e| e.to_string())?;
        let (st, err) = cmd_stats(&ds);
        if let Some(e) = err {
            return Err(format!("{name}: {e}"));
        }
        let h = st.adjusted_homophily.unwrap();
        ensure(
            st.nodes == nodes && st.edges_directed == edges && st.classes == classes && (h - hom).abs() <= 0.01,
            format!("{name}: {}/{}/{}/{h:.3}", st.nodes, st.edges_directed, st.classes),
        )?;
        out.push(format!("{name} {}/{}/{}/{h:.3}", st.nodes, st.edges_directed, st.classes));
    }
    Ok(out.join("; "))
}

fn desk_train_config() -> TrainConfig {
    TrainConfig {
        max_epochs: 50,
        patience: 10,
        ..TrainConfig::default()
    }
}

fn desk_reproduction() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let spec = ExperimentSpec {
        dataset: dataset_path("cora")?,
        output_dir: dir.path().to_path_buf(),
        train_fractions: vec![0.4],
        seeds: vec![0, 1, 2],
        search_splits: 3,
        methods: vec![Method::Inductive, Method::Fp, Method::In2vPosthoc],
        train_grid: vec![desk_train_config()],
        ..ExperimentSpec::default()
    };
    let out = cmd_experiment(&spec).map_err(|e| e.to_string())?;
    let mean = |m: Method| {
        out.reports.iter().find(|r| r.method == m.as_str()).map(|r| r.mean).unwrap_or(f64::NAN)
    };
    let (ours, ind, fp) = (mean(Method::In2vPosthoc), mean(Method::Inductive), mean(Method::Fp));
    let detail = format!("in2v {:.2}, inductive {:.2}, fp {:.2}", 100.0 * ours, 100.0 * ind, 100.0 * fp);
    ensure(ours >= 0.80 && ours - ind >= 0.40 && fp >= 0.78, detail.clone())?;
    Ok(detail)
}

fn modification_smoke() -> Outcome {
    let ds = Dataset::load(dataset_path("cora")?).map_err(|e| e.to_string())?;
    let n = ds.graph.num_nodes();
    let splits: Vec<_> = (0..3).map(|s| SplitAssignment::generate(n, 0.1, s).unwrap()).collect();
    let ext = ExtendConfig::in2v(0.75, 5);
    let candidates: Vec<Candidate> = ExperimentSpec::default()
        .loss_grid
        .iter()
        .map(|&(alpha, beta)| Candidate {
            train: TrainConfig {
                alpha,
                beta,
                ..desk_train_config()
            },
            extend: ext.clone(),
        })
        .collect();
    let sel = select_embedding_config(&ds.graph, &ds.labels, &splits, &candidates, 1e-4).map_err(|e| e.to_string())?;
    let base = sel.scores[0];
    let best_mod = sel.scores[1..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let detail = format!("plain {:.2}, with losses {:.2}", 100.0 * base, 100.0 * best_mod);
    ensure(best_mod >= base - 0.01, detail.clone())?;
    Ok(detail)
}

fn end_to_end_determinism() -> Outcome {
    let mut summaries = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = ExperimentSpec::load(&toy_dir().join("experiment.json")).map_err(|e| e.to_string())?;
        spec.output_dir = dir.path().to_path_buf();
        let out = cmd_experiment(&spec).map_err(|e| e.to_string())?;
        summaries.push(std::fs::read(&out.summary_csv).unwrap());
    }
    ensure(summaries[0] == summaries[1], "summary CSVs differ")?;
    Ok(format!("{} identical bytes", summaries[0].len()))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        ("1 oracle equivalence", oracle_equivalence, Duration::from_secs(60)),
        ("2 worked examples", worked_examples, Duration::from_secs(1)),
        ("3 frozen fixed point", frozen_fixed_point, Duration::from_secs(10)),
        ("4 gradient suite", gradient_suite, Duration::from_secs(30)),
        ("5 FP clamping and contraction", fp_clamping, Duration::from_secs(10)),
        ("6 dataset statistics", dataset_statistics, Duration::from_secs(5)),
        ("7 desk-scale reproduction", desk_reproduction, Duration::from_secs(30 * 60)),
        ("8 modification smoke test", modification_smoke, Duration::from_secs(20 * 60)),
        ("9 end-to-end determinism", end_to_end_determinism, Duration::from_secs(5 * 60)),
    ];
    let mut failed = Vec::new();
    for (name, run, limit) in criteria {
        let start = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panic".into()))
        });
        let took = start.elapsed();
        let res = match res {
            Ok(d) if took > limit => Err(format!("{d}; took {took:.1?}, limit {limit:?}")),
            r => r,
        };
        match res {
            Ok(d) => println!("PASS criterion {name}: {d} ({took:.2?})"),
            Err(d) => {
                println!("FAIL criterion {name}: {d} ({took:.2?})");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
