mod common;

use std::collections::HashMap;

use common::*;
use in2v_core::rng::keyed_rng;
use in2v_core::walk::{epoch_walks, sample_walk};
use in2v_core::{Graph, WalkParams};
use proptest::prelude::*;
use rand::Rng as _;

/// Chi-square upper quantile by the Wilson-Hilferty approximation.
fn chi2_critical(df: usize, z: f64) -> f64 {
    let k = df as f64;
    k * (1.0 - 2.0 / (9.0 * k) + z * (2.0 / (9.0 * k)).sqrt()).powi(3)
}

/// Second-order weight from the hop distance between `prev` and `next`.
fn oracle_weight(g: &Graph, prev: usize, next: usize, p: f64, q: f64) -> f64 {
    let dist = g.bfs_hops_from_set(&[prev]);
    match dist[next] {
        0 => 1.0 / p,
        1 => 1.0,
        _ => 1.0 / q,
    }
}

fn params(p: f64, q: f64, len: usize, per: usize) -> WalkParams {
    WalkParams {
        p,
        q,
        walk_length: len,
        walks_per_node: per,
    }
}

#[test]
fn unbiased_transitions_are_uniform_by_enumeration() {
    for seed in 0..40 {
        let n = 3 + (seed as usize % 6);
        let g = erdos_renyi(n, 0.5, seed);
        let wp = params(1.0, 1.0, 1, 1);
        for t in 0..n {
            for &v in g.neighbors(t) {
                let w: Vec<f64> = g.neighbors(v).iter().map(|&x| wp.transition_weight(&g, t, x)).collect();
                let total: f64 = w.iter().sum();
                for wi in w {
                    assert_eq!(wi / total, 1.0 / g.degree(v) as f64);
                }
            }
        }
    }
}

#[test]
fn biased_weights_match_distance_oracle() {
    for seed in 0..40 {
        let g = erdos_renyi(8, 0.4, seed);
        for (p, q) in [(0.25, 4.0), (4.0, 0.25), (2.0, 2.0)] {
            let wp = params(p, q, 1, 1);
            for t in 0..8 {
                for &v in g.neighbors(t) {
                    for &x in g.neighbors(v) {
                        assert_eq!(wp.transition_weight(&g, t, x), oracle_weight(&g, t, x, p, q));
                    }
                }
            }
        }
    }
}

#[test]
fn two_step_frequencies_match_enumeration() {
    // House graph: square 0-1-2-3 with roof node 4 on 0 and 1.
    let g = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 0), (0, 4), (1, 4)]).unwrap();
    let (p, q) = (0.5, 2.0);
    let start = 0;
    let mut expected = HashMap::new();
    for &a in g.neighbors(start) {
        let w: Vec<f64> = g.neighbors(a).iter().map(|&b| oracle_weight(&g, start, b, p, q)).collect();
        let total: f64 = w.iter().sum();
        for (&b, wb) in g.neighbors(a).iter().zip(w) {
            expected.insert((a, b), wb / total / g.degree(start) as f64);
        }
    }
    let trials = 200_000;
    let mut rng = keyed_rng(5, &[1]);
    let mut counts: HashMap<(usize, usize), usize> = HashMap::new();
    for _ in 0..trials {
        let w = sample_walk(&g, start, &params(p, q, 2, 1), &mut rng);
        *counts.entry((w[1], w[2])).or_default() += 1;
    }
    assert!(counts.keys().all(|k| expected.contains_key(k)));
    let chi2: f64 = expected
        .iter()
        .map(|(k, &pr)| {
            let e = pr * trials as f64;
            let o = *counts.get(k).unwrap_or(&0) as f64;
            (o - e).powi(2) / e
        })
        .sum();
    let crit = chi2_critical(expected.len() - 1, 3.09);
    assert!(chi2 < crit, "chi2 {chi2} >= {crit}");
}

#[test]
fn visit_frequencies_match_simple_random_walk() {
    let n = 6;
    let g = Graph::from_edges(n, &(0..n - 1).map(|i| (i, i + 1)).collect::<Vec<_>>()).unwrap();
    let per = 8334;
    let len = 20;
    let mut lib = vec![0usize; n];
    for w in epoch_walks(&g, &params(1.0, 1.0, len, per), 9).walks {
        for &v in &w[1..] {
            lib[v] += 1;
        }
    }
    // Independent simulator: uniform neighbor choice, same starts and lengths.
    let mut sim = vec![0usize; n];
    let mut rng = keyed_rng(1234, &[7]);
    for start in 0..n {
        for _ in 0..per {
            let mut cur = start;
            for _ in 0..len {
                let nb = g.neighbors(cur);
                cur = nb[rng.random_range(0..nb.len())];
                sim[cur] += 1;
            }
        }
    }
    let total: usize = sim.iter().sum();
    assert!(total >= 1_000_000);
    assert_eq!(lib.iter().sum::<usize>(), total);
    for v in 0..n {
        let (a, b) = (lib[v] as f64 / total as f64, sim[v] as f64 / total as f64);
        assert!((a - b).abs() <= 0.02 * b, "node {v}: {a} vs {b}");
    }
}

#[test]
fn scheduling_does_not_change_walks() {
    let g = erdos_renyi(50, 0.1, 2);
    let wp = params(0.5, 2.0, 15, 3);
    let a = epoch_walks(&g, &wp, 77);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| epoch_walks(&g, &wp, 77));
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn walks_follow_edges(seed in 0u64..10_000, n in 2usize..25, p in 0.1f64..5.0, q in 0.1f64..5.0) {
        let g = erdos_renyi(n, 0.2, seed);
        let wp = params(p, q, 12, 2);
        for (k, w) in epoch_walks(&g, &wp, seed).walks.iter().enumerate() {
            prop_assert_eq!(w[0], k / 2);
            prop_assert!(w.len() <= 13);
            if g.degree(w[0]) > 0 {
                prop_assert_eq!(w.len(), 13);
            }
            for e in w.windows(2) {
                prop_assert!(g.has_edge(e[0], e[1]));
            }
        }
    }
}
