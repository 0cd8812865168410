mod common;

use common::{random_matrix, two_cliques};
use in2v_core::train::{train, Trainer};
use in2v_core::{Graph, TrainConfig, WalkParams};

fn plain(dim: usize, seed: u64) -> TrainConfig {
    TrainConfig {
        dim,
        context_size: 3,
        max_epochs: 5,
        walk: WalkParams {
            walk_length: 8,
            walks_per_node: 3,
            ..WalkParams::default()
        },
        seed,
        ..TrainConfig::default()
    }
}

fn reference_sgns(e: &[Vec<f64>], pos: &[(usize, usize)], neg: &[(usize, usize)]) -> f64 {
    let dot = |u: usize, v: usize| e[u].iter().zip(&e[v]).map(|(a, b)| a * b).sum::<f64>();
    let p: f64 = pos.iter().map(|&(u, v)| (1.0 + (-dot(u, v)).exp()).ln()).sum();
    let n: f64 = neg.iter().map(|&(u, v)| (1.0 + dot(u, v).exp()).ln()).sum();
    (p + n) / pos.len() as f64
}

#[test]
fn step_loss_matches_reference_formula() {
    let g = common::erdos_renyi(12, 0.4, 1);
    for seed in 0..5 {
        let mut t = Trainer::new(&g, plain(4, seed)).unwrap();
        *t.embedding_mut() = random_matrix(12, 4, seed);
        let rows: Vec<Vec<f64>> = (0..12).map(|i| t.embedding().row(i).to_vec()).collect();
        let plan = t.plan_epoch();
        let batch = &plan.batches[0];
        let parts = t.step(batch, &[]).unwrap();
        let want = reference_sgns(&rows, &batch.positives, &batch.negatives);
        assert!((parts.sgns - want).abs() < 1e-10, "{} vs {want}", parts.sgns);
        assert_eq!(parts.total, parts.sgns);
    }
}

#[test]
fn combined_loss_is_additive() {
    let g = common::erdos_renyi(15, 0.3, 2);
    let cfg = TrainConfig {
        alpha: 0.7,
        beta: 0.3,
        ..plain(4, 9)
    };
    let mut t = Trainer::new(&g, cfg).unwrap();
    let plan = t.plan_epoch();
    for (b, aux) in plan.batches.iter().zip(&plan.aux_chunks).take(5) {
        let p = t.step(b, aux).unwrap();
        let sum = p.sgns + 0.7 * p.close + 0.3 * p.div;
        assert!((p.total - sum).abs() < 1e-12);
    }
}

#[test]
fn negatives_come_from_training_graph() {
    let g = common::erdos_renyi(30, 0.2, 3);
    let t = Trainer::new(&g, plain(4, 0)).unwrap();
    for b in t.plan_epoch().batches {
        assert_eq!(b.negatives.len(), b.positives.len());
        assert!(b.negatives.iter().all(|&(u, w)| u < 30 && w < 30));
    }
}

#[test]
fn training_is_byte_identical_across_runs() {
    let g = common::erdos_renyi(40, 0.15, 4);
    let cfg = plain(8, 17);
    let a = train(&g, &cfg).unwrap().embedding.to_bytes().unwrap();
    let b = train(&g, &cfg).unwrap().embedding.to_bytes().unwrap();
    assert_eq!(a, b);
    let c = train(&g, &plain(8, 18)).unwrap().embedding.to_bytes().unwrap();
    assert_ne!(a, c);
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let n = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    d / (n(a) * n(b)).max(1e-300)
}

fn separates(g: &Graph, k: usize, seed: u64) -> bool {
    let cfg = TrainConfig {
        dim: 2,
        context_size: 3,
        max_epochs: 200,
        patience: 200,
        learning_rate: 0.05,
        walk: WalkParams {
            walk_length: 10,
            walks_per_node: 5,
            ..WalkParams::default()
        },
        seed,
        ..TrainConfig::default()
    };
    let e = train(g, &cfg).unwrap().embedding;
    let (mut within, mut across, mut nw, mut na) = (0.0, 0.0, 0, 0);
    for u in 0..2 * k {
        for v in u + 1..2 * k {
            let c = cosine(e.row(u), e.row(v));
            if (u < k) == (v < k) {
                within += c;
                nw += 1;
            } else {
                across += c;
                na += 1;
            }
        }
    }
    within / nw as f64 > across / na as f64 + 0.5
}

#[test]
fn two_cliques_separate() {
    let k = 8;
    let g = two_cliques(k);
    let ok = (0..5).filter(|&s| separates(&g, k, s)).count();
    assert!(ok >= 4, "{ok}/5 seeds separated the cliques");
}
