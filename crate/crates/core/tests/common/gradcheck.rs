//! Finite-difference checks of every analytic gradient. Each function runs
//! `instances` random problems and returns the worst relative error.

use in2v_core::data::NodeLabels;
use in2v_core::downstream::{ClassifierConfig, LogReg, Mlp};
use in2v_core::rng::keyed_rng;
use in2v_core::train::loss::{combined_loss_and_grad, loss_close, loss_div, sgns_loss_and_grad, RowGrads};
use in2v_core::{EmbeddingMatrix, Graph};
use ndarray::{Array1, Array2};
use rand::Rng as _;

use super::{erdos_renyi, numeric_grad, random_matrix, rel_err};

const STEP: f64 = 1e-5;

fn dense(grads: &RowGrads, n: usize, d: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * d];
    for (row, vals) in grads.iter() {
        out[row * d..(row + 1) * d].copy_from_slice(vals);
    }
    out
}

fn with_values(n: usize, d: usize, x: &[f64]) -> EmbeddingMatrix {
    EmbeddingMatrix::from_vec(n, d, x.to_vec()).unwrap()
}

fn random_pairs(rng: &mut impl rand::Rng, n: usize, k: usize) -> Vec<(usize, usize)> {
    (0..k).map(|_| (rng.random_range(0..n), rng.random_range(0..n))).collect()
}

/// Connected-ish random graph on at most six nodes; every node gets an edge.
fn small_graph(seed: u64) -> Graph {
    let n = 3 + (seed as usize % 4);
    let base = erdos_renyi(n, 0.5, seed);
    let mut edges: Vec<(usize, usize)> = base.edges().collect();
    for v in 0..n {
        edges.push((v, (v + 1) % n));
    }
    Graph::from_edges(n, &edges).unwrap()
}

pub fn sgns(instances: u64) -> f64 {
    let (n, d) = (5, 4);
    (0..instances)
        .map(|seed| {
            let mut rng = keyed_rng(seed, &[11]);
            let pos = random_pairs(&mut rng, n, 3);
            let neg = random_pairs(&mut rng, n, 3);
            let e = random_matrix(n, d, seed);
            let mut g = RowGrads::new(n, d);
            sgns_loss_and_grad(&e, &pos, &neg, &mut g, 1.0).unwrap();
            let num = numeric_grad(e.values(), STEP, |x| {
                sgns_loss_and_grad(&with_values(n, d, x), &pos, &neg, &mut RowGrads::new(n, d), 1.0).unwrap()
            });
            rel_err(&dense(&g, n, d), &num)
        })
        .fold(0.0, f64::max)
}

pub fn close(instances: u64) -> f64 {
    (0..instances)
        .map(|seed| {
            // Star on four nodes plus optional extra edges.
            let mut edges = vec![(0, 1), (0, 2), (0, 3)];
            if seed % 2 == 1 {
                edges.push((1, 2));
            }
            let g = Graph::from_edges(4, &edges).unwrap();
            let v = (seed % 4) as usize;
            let d = 3;
            let e = random_matrix(4, d, seed + 100);
            let mut gr = RowGrads::new(4, d);
            loss_close(&e, &g, v, &mut gr, 1.0);
            let num = numeric_grad(e.values(), STEP, |x| {
                loss_close(&with_values(4, d, x), &g, v, &mut RowGrads::new(4, d), 1.0)
            });
            rel_err(&dense(&gr, 4, d), &num)
        })
        .fold(0.0, f64::max)
}

pub fn div(instances: u64) -> f64 {
    (0..instances)
        .map(|seed| {
            let g = small_graph(seed + 200);
            let n = g.num_nodes();
            let d = 3;
            let v = (seed as usize) % n;
            let e = random_matrix(n, d, seed + 200);
            let mut gr = RowGrads::new(n, d);
            loss_div(&e, &g, v, &mut gr, 1.0);
            let num = numeric_grad(e.values(), STEP, |x| {
                loss_div(&with_values(n, d, x), &g, v, &mut RowGrads::new(n, d), 1.0)
            });
            rel_err(&dense(&gr, n, d), &num)
        })
        .fold(0.0, f64::max)
}

pub fn combined(instances: u64) -> f64 {
    (0..instances)
        .map(|seed| {
            let g = small_graph(seed + 300);
            let n = g.num_nodes();
            let d = 3;
            let mut rng = keyed_rng(seed, &[13]);
            let pos = random_pairs(&mut rng, n, 4);
            let neg = random_pairs(&mut rng, n, 4);
            let aux: Vec<usize> = (0..n).filter(|_| rng.random::<bool>()).collect();
            let (alpha, beta) = (rng.random_range(0.0..2.0), rng.random_range(0.0..2.0));
            let e = random_matrix(n, d, seed + 300);
            let mut gr = RowGrads::new(n, d);
            combined_loss_and_grad(&e, &g, &pos, &neg, &aux, alpha, beta, &mut gr).unwrap();
            let num = numeric_grad(e.values(), STEP, |x| {
                combined_loss_and_grad(&with_values(n, d, x), &g, &pos, &neg, &aux, alpha, beta, &mut RowGrads::new(n, d))
                    .unwrap()
                    .total
            });
            rel_err(&dense(&gr, n, d), &num)
        })
        .fold(0.0, f64::max)
}

fn random_problem(seed: u64, rows: usize, feats: usize, classes: usize) -> (Array2<f64>, Vec<usize>) {
    let mut rng = keyed_rng(seed, &[17]);
    let x = Array2::from_shape_simple_fn((rows, feats), || rng.random_range(-1.0..1.0));
    let y = (0..rows).map(|i| (i + seed as usize) % classes).collect();
    (x, y)
}

pub fn logreg(instances: u64) -> f64 {
    (0..instances)
        .map(|seed| {
            let rows = 5 + (seed as usize % 16);
            let (x, y) = random_problem(seed, rows, 3, 3);
            let l2 = (seed % 3) as f64 * 0.1;
            let mut rng = keyed_rng(seed, &[19]);
            let w = Array2::from_shape_simple_fn((3, 3), || rng.random_range(-1.0..1.0));
            let b = Array1::from_shape_simple_fn(3, || rng.random_range(-1.0..1.0));
            let model = LogReg { weights: w, bias: b, steps: 0 };
            let (_, gw, gb) = model.loss_and_grad(x.view(), &y, l2);
            let analytic: Vec<f64> = gw.iter().chain(gb.iter()).copied().collect();
            let flat: Vec<f64> = model.weights.iter().chain(model.bias.iter()).copied().collect();
            let num = numeric_grad(&flat, STEP, |p| {
                let m = LogReg {
                    weights: Array2::from_shape_vec((3, 3), p[..9].to_vec()).unwrap(),
                    bias: Array1::from_vec(p[9..].to_vec()),
                    steps: 0,
                };
                m.loss_and_grad(x.view(), &y, l2).0
            });
            rel_err(&analytic, &num)
        })
        .fold(0.0, f64::max)
}

pub fn mlp(instances: u64) -> f64 {
    (0..instances)
        .map(|seed| {
            let (x, y) = random_problem(seed + 50, 12, 3, 3);
            let cfg = ClassifierConfig {
                layers: 1 + (seed as usize % 3),
                hidden: 5,
                jumping_knowledge: seed % 2 == 0,
                ..ClassifierConfig::default()
            };
            let wd = if seed % 4 == 0 { 0.0 } else { 0.01 };
            let model = Mlp::new(3, 3, &cfg, seed).unwrap();
            let (_, g) = model.loss_and_grad(x.view(), &y, wd, None);
            let analytic = Mlp::flatten_grads(&g);
            let mut probe = model.clone();
            let num = numeric_grad(&model.flat_params(), 1e-6, |p| {
                probe.set_flat_params(p);
                probe.loss_and_grad(x.view(), &y, wd, None).0
            });
            rel_err(&analytic, &num)
        })
        .fold(0.0, f64::max)
}

/// Labels for callers that need a `LabelSource`.
pub fn labels(y: &[usize]) -> NodeLabels {
    NodeLabels::new(y.to_vec()).unwrap()
}
