//! Dense tanh network with a softmax cross-entropy head, trained by
//! mini-batch gradient descent.
//!
//! Each layer is stored as one `out x (in + 1)` matrix whose last column is
//! the bias, so a recorded snapshot captures every trainable parameter.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::SyntheticDataset;
use crate::analysis::{Epoch, WeightMatrix, WeightRun};
use crate::error::{validation, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    /// input, hidden..., output
    pub layer_sizes: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub init_scale: f64,
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 3 {
            return Err(validation(format!(
                "need input, at least one hidden, and output sizes; got {:?}",
                self.layer_sizes
            )));
        }
        if self.layer_sizes.contains(&0) {
            return Err(validation("layer sizes must be positive"));
        }
        // zero is allowed: it freezes the weights
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(validation(format!(
                "bad learning rate {}",
                self.learning_rate
            )));
        }
        if !self.init_scale.is_finite() || self.init_scale <= 0.0 {
            return Err(validation(format!("bad init scale {}", self.init_scale)));
        }
        if self.epochs == 0 {
            return Err(validation("epochs must be positive"));
        }
        if self.batch_size == 0 {
            return Err(validation("batch_size must be positive"));
        }
        Ok(())
    }

    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.layer_sizes.last().unwrap_or(&0)
    }

    /// Matrix shapes `(out, in + 1)` for each layer.
    pub fn shapes(&self) -> Vec<(usize, usize)> {
        self.layer_sizes
            .windows(2)
            .map(|w| (w[1], w[0] + 1))
            .collect()
    }
}

pub fn layer_name(i: usize) -> String {
    format!("fc{}", i + 1)
}

#[derive(Debug, Clone, PartialEq)]
struct Dense {
    out: usize,
    inp: usize,
    // row-major out x (inp + 1)
    w: Vec<f64>,
}

impl Dense {
    fn stride(&self) -> usize {
        self.inp + 1
    }

    fn apply(&self, x: &[f64], z: &mut Vec<f64>) {
        z.clear();
        let s = self.stride();
        for o in 0..self.out {
            let row = &self.w[o * s..(o + 1) * s];
            let mut acc = row[self.inp];
            for (wi, xi) in row[..self.inp].iter().zip(x) {
                acc += wi * xi;
            }
            z.push(acc);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Dense>,
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

impl Mlp {
    /// Uniform initialization in `[-init_scale, init_scale]`.
    pub fn init(config: &MlpConfig, rng: &mut impl Rng) -> Self {
        let s = config.init_scale;
        let layers = config
            .layer_sizes
            .windows(2)
            .map(|w| Dense {
                out: w[1],
                inp: w[0],
                w: (0..w[1] * (w[0] + 1))
                    .map(|_| rng.random_range(-s..=s))
                    .collect(),
            })
            .collect();
        Mlp { layers }
    }

    /// Rebuilds a network from layer matrices (`out x (in + 1)` each, chained).
    pub fn from_matrices(matrices: &[WeightMatrix]) -> Result<Self> {
        if matrices.len() < 2 {
            return Err(validation("network needs at least two layers"));
        }
        let mut layers = Vec::with_capacity(matrices.len());
        for (i, m) in matrices.iter().enumerate() {
            if m.cols() < 2 {
                return Err(validation(format!(
                    "layer {:?} has no input columns",
                    m.layer_name()
                )));
            }
            let inp = m.cols() - 1;
            if let Some(prev) = layers.last().map(|l: &Dense| l.out) {
                if prev != inp {
                    return Err(validation(format!(
                        "layer {i} expects {inp} inputs but the previous layer emits {prev}"
                    )));
                }
            }
            layers.push(Dense {
                out: m.rows(),
                inp,
                w: m.values().to_vec(),
            });
        }
        Ok(Mlp { layers })
    }

    pub fn to_matrices(&self) -> Vec<WeightMatrix> {
        self.layers
            .iter()
            .enumerate()
            .map(|(i, l)| {
                WeightMatrix::new(layer_name(i), l.out, l.stride(), l.w.clone())
                    .expect("trained weights stay finite")
            })
            .collect()
    }

    pub fn shapes(&self) -> Vec<(usize, usize)> {
        self.layers.iter().map(|l| (l.out, l.stride())).collect()
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].inp
    }

    pub fn output_size(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out)
    }

    /// Activations of every layer; the last entry holds class probabilities.
    fn forward(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::with_capacity(layer.out);
            layer.apply(acts.last().expect("input pushed"), &mut z);
            if i == last {
                softmax_in_place(&mut z);
            } else {
                z.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(z);
        }
        acts
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        let probs = self.forward(x).pop().unwrap_or_default();
        probs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map_or(0, |(i, _)| i)
    }

    /// Mean cross-entropy over the batch.
    pub fn loss(&self, batch: &[(&[f64], usize)]) -> f64 {
        let total: f64 = batch
            .iter()
            .map(|(x, y)| {
                let p = self.forward(x).pop().unwrap_or_default();
                -p[*y].max(f64::MIN_POSITIVE).ln()
            })
            .sum();
        total / batch.len() as f64
    }

    /// Mean cross-entropy over the batch and its gradient, laid out like
    /// [`Mlp::to_matrices`] (row-major, bias last).
    pub fn loss_and_gradient(&self, batch: &[(&[f64], usize)]) -> (f64, Vec<Vec<f64>>) {
        let mut grads: Vec<Vec<f64>> = self.layers.iter().map(|l| vec![0.0; l.w.len()]).collect();
        let mut loss = 0.0;
        for (x, y) in batch {
            let acts = self.forward(x);
            let probs = &acts[acts.len() - 1];
            loss -= probs[*y].max(f64::MIN_POSITIVE).ln();

            // softmax + cross-entropy: dL/dz = p - onehot
            let mut delta: Vec<f64> = probs.clone();
            delta[*y] -= 1.0;
            for l in (0..self.layers.len()).rev() {
                let layer = &self.layers[l];
                let a_in = &acts[l];
                let s = layer.stride();
                let g = &mut grads[l];
                for o in 0..layer.out {
                    let d = delta[o];
                    let row = &mut g[o * s..(o + 1) * s];
                    for (gi, ai) in row[..layer.inp].iter_mut().zip(a_in) {
                        *gi += d * ai;
                    }
                    row[layer.inp] += d;
                }
                if l > 0 {
                    let mut prev = vec![0.0; layer.inp];
                    for (o, &d) in delta.iter().enumerate() {
                        let row = &layer.w[o * s..o * s + layer.inp];
                        for (p, w) in prev.iter_mut().zip(row) {
                            *p += w * d;
                        }
                    }
                    // tanh'(z) = 1 - a^2
                    for (p, a) in prev.iter_mut().zip(a_in) {
                        *p *= 1.0 - a * a;
                    }
                    delta = prev;
                }
            }
        }
        let n = batch.len() as f64;
        for g in grads.iter_mut() {
            g.iter_mut().for_each(|v| *v /= n);
        }
        (loss / n, grads)
    }

    fn step(&mut self, grads: &[Vec<f64>], lr: f64) {
        for (layer, g) in self.layers.iter_mut().zip(grads) {
            for (w, gi) in layer.w.iter_mut().zip(g) {
                *w -= lr * gi;
            }
        }
    }

    pub fn accuracy(&self, data: &SyntheticDataset) -> f64 {
        let correct = data
            .points
            .iter()
            .filter(|(x, y)| self.predict(x) == *y)
            .count();
        correct as f64 / data.len() as f64
    }
}

/// A finished training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Epoch 0 is the initialization; epoch `k` is the state after `k` passes.
    pub run: WeightRun,
    /// Mean training loss of each epoch.
    pub losses: Vec<f64>,
    pub final_accuracy: f64,
}

fn epoch_of(index: usize, net: &Mlp) -> Epoch {
    Epoch {
        index,
        layers: net.to_matrices(),
    }
}

/// Trains from a seeded initialization, or from `initial` when given,
/// recording every layer after each epoch.
pub fn train(
    run_id: &str,
    config: &MlpConfig,
    data: &SyntheticDataset,
    initial: Option<&Epoch>,
) -> Result<TrainOutcome> {
    config.validate()?;
    if data.dims != config.input_size() {
        return Err(validation(format!(
            "input size {} does not match data dims {}",
            config.input_size(),
            data.dims
        )));
    }
    if data.class_count != config.output_size() {
        return Err(validation(format!(
            "output size {} does not match class count {}",
            config.output_size(),
            data.class_count
        )));
    }
    if data.is_empty() {
        return Err(validation("dataset is empty"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut net = match initial {
        Some(e) => {
            let net = Mlp::from_matrices(&e.layers)?;
            if net.shapes() != config.shapes() {
                return Err(validation(format!(
                    "initial weight shapes {:?} do not match config shapes {:?}",
                    net.shapes(),
                    config.shapes()
                )));
            }
            net
        }
        None => Mlp::init(config, &mut rng),
    };

    let mut epochs = vec![epoch_of(0, &net)];
    let mut losses = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..data.len()).collect();
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<(&[f64], usize)> = chunk
                .iter()
                .map(|&i| (data.points[i].0.as_slice(), data.points[i].1))
                .collect();
            let (loss, grads) = net.loss_and_gradient(&batch);
            if !loss.is_finite() {
                return Err(Error::Numeric {
                    epoch,
                    detail: format!("non-finite loss {loss}"),
                });
            }
            epoch_loss += loss * batch.len() as f64;
            net.step(&grads, config.learning_rate);
        }
        if net.layers.iter().flat_map(|l| &l.w).any(|w| !w.is_finite()) {
            return Err(Error::Numeric {
                epoch,
                detail: "weights diverged".into(),
            });
        }
        losses.push(epoch_loss / data.len() as f64);
        epochs.push(epoch_of(epoch, &net));
    }

    Ok(TrainOutcome {
        final_accuracy: net.accuracy(data),
        run: WeightRun {
            run_id: run_id.to_owned(),
            epochs,
            baseline: None,
        },
        losses,
    })
}
