//! Multinomial logistic regression fit by full-batch gradient descent.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::{cross_entropy, gather_labels, gather_rows, Classifier};
use crate::data::LabelSource;
use crate::error::{In2vError, Result};

pub const MAX_STEPS: usize = 2000;
pub const GRAD_TOL: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct LogReg {
    /// `features x classes`
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub steps: usize,
}

impl Classifier for LogReg {
    fn logits(&self, x: ArrayView2<f64>) -> Array2<f64> {
        x.dot(&self.weights) + &self.bias
    }
}

impl LogReg {
    pub fn zeros(features: usize, classes: usize) -> Self {
        LogReg {
            weights: Array2::zeros((features, classes)),
            bias: Array1::zeros(classes),
            steps: 0,
        }
    }

    /// Mean cross-entropy plus `l2/2 * |W|^2` (bias unpenalized), with gradients.
    pub fn loss_and_grad(
        &self,
        x: ArrayView2<f64>,
        y: &[usize],
        l2: f64,
    ) -> (f64, Array2<f64>, Array1<f64>) {
        let (ce, dlogits) = cross_entropy(&self.logits(x), y);
        let loss = ce + 0.5 * l2 * self.weights.iter().map(|w| w * w).sum::<f64>();
        let gw = x.t().dot(&dlogits) + &(&self.weights * l2);
        let gb = dlogits.sum_axis(Axis(0));
        (loss, gw, gb)
    }
}

/// Fits on `train_idx`, starting from zero weights.
///
/// The step size is `1 / L` for the bound `L = mean|x|^2 / 2 + 1/2 + l2` on
/// the loss curvature, so plain gradient descent decreases the loss
/// monotonically. Stops when the gradient norm drops below [`GRAD_TOL`] or
/// after [`MAX_STEPS`].
pub fn train_logreg(
    x: ArrayView2<f64>,
    labels: &impl LabelSource,
    train_idx: &[usize],
    l2: f64,
) -> Result<LogReg> {
    let y = gather_labels(labels, train_idx);
    let mut present = y.clone();
    present.sort_unstable();
    present.dedup();
    if present.len() < 2 {
        return Err(In2vError::DegenerateInput(
            "logistic regression needs at least two classes in the training rows".into(),
        ));
    }
    let xt = gather_rows(x, train_idx);
    let mean_sq = xt.iter().map(|v| v * v).sum::<f64>() / train_idx.len() as f64;
    let step = 1.0 / (0.5 * (mean_sq + 1.0) + l2);
    let mut model = LogReg::zeros(x.ncols(), labels.num_classes());
    for it in 0..MAX_STEPS {
        let (loss, gw, gb) = model.loss_and_grad(xt.view(), &y, l2);
        if !loss.is_finite() {
            return Err(In2vError::NumericalOverflow("logistic regression diverged".into()));
        }
        let norm = (gw.iter().chain(gb.iter()).map(|g| g * g).sum::<f64>()).sqrt();
        model.steps = it;
        if norm < GRAD_TOL {
            break;
        }
        model.weights.scaled_add(-step, &gw);
        model.bias.scaled_add(-step, &gb);
        model.steps = it + 1;
    }
    Ok(model)
}
