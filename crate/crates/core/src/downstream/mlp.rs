//! Feed-forward classifier: ReLU hidden layers, dropout after each hidden
//! activation, optional jumping-knowledge head over all hidden outputs.

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use rand::Rng as _;

use super::{accuracy, cross_entropy, gather_labels, gather_rows, ClassifierConfig, Classifier};
use crate::data::LabelSource;
use crate::error::{In2vError, Result};
use crate::rng::{keyed_rng, tag, Rng};

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `inputs x outputs`
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    fn init(inputs: usize, outputs: usize, rng: &mut Rng) -> Self {
        let bound = 1.0 / (inputs.max(1) as f64).sqrt();
        Dense {
            weights: Array2::from_shape_simple_fn((inputs, outputs), || {
                rng.random_range(-bound..=bound)
            }),
            bias: Array1::from_shape_simple_fn(outputs, || rng.random_range(-bound..=bound)),
        }
    }

    fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        x.dot(&self.weights) + &self.bias
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    /// Hidden layers followed by the output layer.
    pub layers: Vec<Dense>,
    pub jumping_knowledge: bool,
    pub dropout: f64,
}

struct Forward {
    /// Input of every layer (post-dropout for hidden outputs).
    inputs: Vec<Array2<f64>>,
    /// Pre-activations of the hidden layers.
    pre: Vec<Array2<f64>>,
    /// Scaled keep masks of the hidden layers (`None` in eval mode).
    masks: Vec<Option<Array2<f64>>>,
    head_input: Array2<f64>,
    logits: Array2<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlpTrace {
    pub best_epoch: usize,
    pub best_val_accuracy: f64,
    pub epochs_run: usize,
}

impl Mlp {
    pub fn new(inputs: usize, classes: usize, cfg: &ClassifierConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = keyed_rng(seed, &[tag::MLP]);
        let hidden_layers = cfg.layers - 1;
        let mut layers = Vec::with_capacity(cfg.layers);
        let mut width = inputs;
        for _ in 0..hidden_layers {
            layers.push(Dense::init(width, cfg.hidden, &mut rng));
            width = cfg.hidden;
        }
        let jk = cfg.jumping_knowledge && hidden_layers > 0;
        let head_in = if jk { cfg.hidden * hidden_layers } else { width };
        layers.push(Dense::init(head_in, classes, &mut rng));
        Ok(Mlp {
            layers,
            jumping_knowledge: jk,
            dropout: cfg.dropout,
        })
    }

    pub fn param_shapes(&self) -> Vec<((usize, usize), usize)> {
        self.layers
            .iter()
            .map(|l| (l.weights.dim(), l.bias.len()))
            .collect()
    }

    fn hidden_count(&self) -> usize {
        self.layers.len() - 1
    }

    fn forward(&self, x: ArrayView2<f64>, mut rng: Option<&mut Rng>) -> Forward {
        let mut inputs = vec![x.to_owned()];
        let mut pre = Vec::new();
        let mut masks = Vec::new();
        let keep = 1.0 - self.dropout;
        for layer in &self.layers[..self.hidden_count()] {
            let z = layer.forward(inputs.last().expect("input").view());
            let mut a = z.mapv(|v| v.max(0.0));
            let mask = match rng.as_deref_mut() {
                Some(r) if self.dropout > 0.0 => {
                    let m = Array2::from_shape_simple_fn(a.dim(), || {
                        if r.random::<f64>() < keep {
                            1.0 / keep
                        } else {
                            0.0
                        }
                    });
                    a *= &m;
                    Some(m)
                }
                _ => None,
            };
            pre.push(z);
            masks.push(mask);
            inputs.push(a);
        }
        let head_input = if self.jumping_knowledge {
            let views: Vec<_> = inputs[1..].iter().map(|a| a.view()).collect();
            concatenate(Axis(1), &views).expect("equal row counts")
        } else {
            inputs.last().expect("input").clone()
        };
        let logits = self.layers.last().expect("head").forward(head_input.view());
        Forward {
            inputs,
            pre,
            masks,
            head_input,
            logits,
        }
    }

    /// Mean cross-entropy plus `weight_decay/2 * |params|^2` and its gradient,
    /// evaluated without dropout unless `rng` is given.
    pub fn loss_and_grad(
        &self,
        x: ArrayView2<f64>,
        y: &[usize],
        weight_decay: f64,
        rng: Option<&mut Rng>,
    ) -> (f64, Vec<Dense>) {
        let fwd = self.forward(x, rng);
        let (ce, dlogits) = cross_entropy(&fwd.logits, y);
        let h = self.hidden_count();
        let mut grads: Vec<Option<Dense>> = vec![None; self.layers.len()];

        let head = &self.layers[h];
        grads[h] = Some(Dense {
            weights: fwd.head_input.t().dot(&dlogits),
            bias: dlogits.sum_axis(Axis(0)),
        });
        let d_head = dlogits.dot(&head.weights.t());

        // Gradient w.r.t. each hidden output (post-dropout).
        let mut d_out: Vec<Option<Array2<f64>>> = vec![None; h];
        if h > 0 {
            if self.jumping_knowledge {
                let width = self.layers[0].weights.ncols();
                for (l, slot) in d_out.iter_mut().enumerate() {
                    *slot = Some(d_head.slice(s![.., l * width..(l + 1) * width]).to_owned());
                }
            } else {
                d_out[h - 1] = Some(d_head);
            }
        }
        for l in (0..h).rev() {
            let mut da = d_out[l].take().expect("gradient flows to every hidden layer");
            if let Some(m) = &fwd.masks[l] {
                da *= m;
            }
            let dz = da * &fwd.pre[l].mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
            grads[l] = Some(Dense {
                weights: fwd.inputs[l].t().dot(&dz),
                bias: dz.sum_axis(Axis(0)),
            });
            if l > 0 {
                let back = dz.dot(&self.layers[l].weights.t());
                d_out[l - 1] = Some(match d_out[l - 1].take() {
                    Some(acc) => acc + back,
                    None => back,
                });
            }
        }

        let mut penalty = 0.0;
        let grads = grads
            .into_iter()
            .zip(&self.layers)
            .map(|(g, p)| {
                let mut g = g.expect("every layer has a gradient");
                if weight_decay > 0.0 {
                    penalty += p.weights.iter().chain(p.bias.iter()).map(|w| w * w).sum::<f64>();
                    g.weights.scaled_add(weight_decay, &p.weights);
                    g.bias.scaled_add(weight_decay, &p.bias);
                }
                g
            })
            .collect();
        (ce + 0.5 * weight_decay * penalty, grads)
    }

    /// All parameters, layer by layer, weights before bias.
    pub fn flat_params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied().collect::<Vec<_>>())
            .collect()
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) {
        let mut it = flat.iter().copied();
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *w = it.next().expect("enough parameters");
            }
        }
    }

    pub fn flatten_grads(grads: &[Dense]) -> Vec<f64> {
        grads
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied().collect::<Vec<_>>())
            .collect()
    }
}

impl Classifier for Mlp {
    fn logits(&self, x: ArrayView2<f64>) -> Array2<f64> {
        self.forward(x, None).logits
    }
}

struct Adam {
    lr: f64,
    t: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        let (b1, b2, eps) = (0.9, 0.999, 1e-8);
        self.t += 1;
        let bc1 = 1.0 - f64::powi(b1, self.t);
        let bc2 = 1.0 - f64::powi(b2, self.t);
        for i in 0..params.len() {
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * grads[i];
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * grads[i] * grads[i];
            params[i] -= self.lr * (self.m[i] / bc1) / ((self.v[i] / bc2).sqrt() + eps);
        }
    }
}

/// Full-batch Adam on `train_idx`, early-stopped on validation accuracy.
/// Returns the parameters of the best validation epoch.
pub fn train_mlp(
    x: ArrayView2<f64>,
    labels: &impl LabelSource,
    train_idx: &[usize],
    val_idx: &[usize],
    cfg: &ClassifierConfig,
    seed: u64,
) -> Result<(Mlp, MlpTrace)> {
    if train_idx.is_empty() {
        return Err(In2vError::validation("MLP training set is empty"));
    }
    let mut model = Mlp::new(x.ncols(), labels.num_classes(), cfg, seed)?;
    let xt = gather_rows(x, train_idx);
    let y = gather_labels(labels, train_idx);
    let mut params = model.flat_params();
    let mut opt = Adam {
        lr: cfg.learning_rate,
        t: 0,
        m: vec![0.0; params.len()],
        v: vec![0.0; params.len()],
    };
    let mut rng = keyed_rng(seed, &[tag::MLP, 1]);
    let mut best = model.clone();
    let mut trace = MlpTrace {
        best_epoch: 0,
        best_val_accuracy: f64::NEG_INFINITY,
        epochs_run: 0,
    };
    let mut since_best = 0;
    for epoch in 0..cfg.max_epochs.max(1) {
        let (loss, grads) = model.loss_and_grad(xt.view(), &y, cfg.weight_decay, Some(&mut rng));
        if !loss.is_finite() {
            return Err(In2vError::NumericalOverflow(format!(
                "MLP loss became non-finite at epoch {epoch}"
            )));
        }
        opt.step(&mut params, &Mlp::flatten_grads(&grads));
        model.set_flat_params(&params);
        trace.epochs_run = epoch + 1;

        let val = if val_idx.is_empty() {
            -loss
        } else {
            accuracy(&model, x, labels, val_idx)?
        };
        if val > trace.best_val_accuracy {
            trace.best_val_accuracy = val;
            trace.best_epoch = epoch;
            best.clone_from(&model);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience.max(1) {
                break;
            }
        }
    }
    Ok((best, trace))
}
