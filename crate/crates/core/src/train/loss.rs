//! Training losses over a single shared embedding matrix, with analytic
//! gradients accumulated into [`RowGrads`].

use crate::embedding::EmbeddingMatrix;
use crate::error::{In2vError, Result};
use crate::graph::Graph;

/// Gradient rows for the subset of embedding rows touched by a step.
#[derive(Debug, Clone)]
pub struct RowGrads {
    d: usize,
    slot: Vec<u32>,
    rows: Vec<usize>,
    values: Vec<f64>,
}

const EMPTY: u32 = u32::MAX;

impl RowGrads {
    pub fn new(n: usize, d: usize) -> Self {
        RowGrads {
            d,
            slot: vec![EMPTY; n],
            rows: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn entry(&mut self, row: usize) -> &mut [f64] {
        let d = self.d;
        let mut s = self.slot[row];
        if s == EMPTY {
            s = self.rows.len() as u32;
            self.slot[row] = s;
            self.rows.push(row);
            self.values.extend(std::iter::repeat_n(0.0, d));
        }
        let s = s as usize;
        &mut self.values[s * d..(s + 1) * d]
    }

    /// `grad[row] += coeff * x`
    #[inline]
    pub fn add_scaled(&mut self, row: usize, coeff: f64, x: &[f64]) {
        for (g, &xi) in self.entry(row).iter_mut().zip(x) {
            *g += coeff * xi;
        }
    }

    pub fn get(&self, row: usize) -> Option<&[f64]> {
        match self.slot[row] {
            EMPTY => None,
            s => Some(&self.values[s as usize * self.d..(s as usize + 1) * self.d]),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &[f64])> {
        self.rows
            .iter()
            .copied()
            .zip(self.values.chunks_exact(self.d.max(1)))
    }

    pub fn touched(&self) -> usize {
        self.rows.len()
    }

    pub fn clear(&mut self) {
        for &r in &self.rows {
            self.slot[r] = EMPTY;
        }
        self.rows.clear();
        self.values.clear();
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `-log sigma(x)`
#[inline]
pub fn neg_log_sigmoid(x: f64) -> f64 {
    softplus(-x)
}

/// Skip-gram negative sampling loss
/// `sum_pos -log s(h_u . h_v) + sum_neg -log s(-h_u . h_w)`.
///
/// Adds `scale` times its gradient into `grads` and returns the unscaled sum.
pub fn sgns_loss_and_grad(
    emb: &EmbeddingMatrix,
    positives: &[(usize, usize)],
    negatives: &[(usize, usize)],
    grads: &mut RowGrads,
    scale: f64,
) -> Result<f64> {
    let mut loss = 0.0;
    for (pairs, sign) in [(positives, 1.0), (negatives, -1.0)] {
        for &(u, v) in pairs {
            let (hu, hv) = (emb.row(u), emb.row(v));
            let s = sign * dot(hu, hv);
            loss += neg_log_sigmoid(s);
            // d/dscore of -log s(sign * score)
            let g = scale * sign * (sigmoid(s) - 1.0);
            grads.add_scaled(u, g, hv);
            grads.add_scaled(v, g, hu);
        }
    }
    if !loss.is_finite() {
        return Err(In2vError::NumericalOverflow(
            "skip-gram loss is not finite; lower the learning rate".into(),
        ));
    }
    Ok(loss)
}

/// Arithmetic mean of the neighbor rows of `v` (including `v` itself when it
/// has a self-loop).
pub fn mean_neighbor_embedding(emb: &EmbeddingMatrix, g: &Graph, v: usize) -> Result<Vec<f64>> {
    let nbrs = g.neighbors(v);
    if nbrs.is_empty() {
        return Err(In2vError::DegenerateInput(format!("node {v} has no neighbors")));
    }
    let mut m = vec![0.0; emb.dim()];
    mean_rows_into(emb, nbrs, &mut m);
    Ok(m)
}

pub(crate) fn mean_rows_into(emb: &EmbeddingMatrix, rows: &[usize], out: &mut [f64]) {
    out.fill(0.0);
    for &u in rows {
        for (o, x) in out.iter_mut().zip(emb.row(u)) {
            *o += x;
        }
    }
    let inv = 1.0 / rows.len() as f64;
    for o in out.iter_mut() {
        *o *= inv;
    }
}

/// `-log s(h_v . m_N(v))`, pulling a node toward its neighborhood mean.
/// Isolated nodes contribute nothing.
pub fn loss_close(
    emb: &EmbeddingMatrix,
    g: &Graph,
    v: usize,
    grads: &mut RowGrads,
    scale: f64,
) -> f64 {
    let nbrs = g.neighbors(v);
    if nbrs.is_empty() {
        log::debug!("closeness loss skipped for isolated node {v}");
        return 0.0;
    }
    let mut m = vec![0.0; emb.dim()];
    mean_rows_into(emb, nbrs, &mut m);
    let hv = emb.row(v);
    let s = dot(hv, &m);
    let g_s = scale * (sigmoid(s) - 1.0);
    grads.add_scaled(v, g_s, &m);
    let per_nbr = g_s / nbrs.len() as f64;
    for &u in nbrs {
        grads.add_scaled(u, per_nbr, hv);
    }
    neg_log_sigmoid(s)
}

/// Mean pairwise cosine similarity over ordered neighbor pairs of `v`,
/// diagonal included. Rows with zero norm count as cosine 0 with no gradient.
pub fn loss_div(
    emb: &EmbeddingMatrix,
    g: &Graph,
    v: usize,
    grads: &mut RowGrads,
    scale: f64,
) -> f64 {
    let nbrs = g.neighbors(v);
    if nbrs.is_empty() {
        return 0.0;
    }
    let d = emb.dim();
    let n2 = (nbrs.len() * nbrs.len()) as f64;
    let norms: Vec<f64> = nbrs.iter().map(|&u| dot(emb.row(u), emb.row(u)).sqrt()).collect();
    // Sum of unit vectors; sum_{u,w} cos(u, w) = |S|^2.
    let mut sum_unit = vec![0.0; d];
    for (&u, &nu) in nbrs.iter().zip(&norms) {
        if nu > 0.0 {
            for (s, x) in sum_unit.iter_mut().zip(emb.row(u)) {
                *s += x / nu;
            }
        }
    }
    let loss = dot(&sum_unit, &sum_unit) / n2;
    let coeff = scale * 2.0 / n2;
    let mut buf = vec![0.0; d];
    for (&u, &nu) in nbrs.iter().zip(&norms) {
        if nu == 0.0 {
            continue;
        }
        let hu = emb.row(u);
        // d/dh_u = 2/N^2 * 1/|h_u| * [(S - u^) - (u^.S - 1) u^]
        let cos_sum = dot(hu, &sum_unit) / nu - 1.0;
        for ((b, &s), &x) in buf.iter_mut().zip(&sum_unit).zip(hu) {
            let unit = x / nu;
            *b = ((s - unit) - cos_sum * unit) / nu;
        }
        grads.add_scaled(u, coeff, &buf);
    }
    loss
}

/// Loss components of one optimizer step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossParts {
    /// Skip-gram loss per positive pair.
    pub sgns: f64,
    /// Mean closeness loss over the auxiliary nodes.
    pub close: f64,
    /// Mean diversity loss over the auxiliary nodes.
    pub div: f64,
    /// `sgns + alpha * close + beta * div`
    pub total: f64,
}

/// Combined objective `L_sgns + alpha * L_close + beta * L_div` for one step.
///
/// The skip-gram part is averaged over positive pairs, the auxiliary parts
/// over `aux_nodes`. Auxiliary terms are skipped entirely when their weight
/// is zero.
#[allow(clippy::too_many_arguments)]
pub fn combined_loss_and_grad(
    emb: &EmbeddingMatrix,
    g: &Graph,
    positives: &[(usize, usize)],
    negatives: &[(usize, usize)],
    aux_nodes: &[usize],
    alpha: f64,
    beta: f64,
    grads: &mut RowGrads,
) -> Result<LossParts> {
    let mut parts = LossParts::default();
    if !positives.is_empty() {
        let scale = 1.0 / positives.len() as f64;
        parts.sgns = sgns_loss_and_grad(emb, positives, negatives, grads, scale)? * scale;
    }
    if !aux_nodes.is_empty() {
        let per_node = 1.0 / aux_nodes.len() as f64;
        if alpha != 0.0 {
            let total: f64 = aux_nodes
                .iter()
                .map(|&v| loss_close(emb, g, v, grads, alpha * per_node))
                .sum();
            parts.close = total * per_node;
        }
        if beta != 0.0 {
            let total: f64 = aux_nodes
                .iter()
                .map(|&v| loss_div(emb, g, v, grads, beta * per_node))
                .sum();
            parts.div = total * per_node;
        }
    }
    parts.total = parts.sgns + alpha * parts.close + beta * parts.div;
    if !parts.total.is_finite() || !grads.is_finite() {
        return Err(In2vError::NumericalOverflow(
            "training loss is not finite; lower the learning rate".into(),
        ));
    }
    Ok(parts)
}
