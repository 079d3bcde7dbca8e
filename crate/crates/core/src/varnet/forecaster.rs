use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::loss::weighted_l1_grad;
use super::net::{DenseNet, NetGradients};
use crate::error::{Error, Result};
use crate::sphere::SphericalGrid;

/// One training example: two input states and the state that follows.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub prev: Vec<f64>,
    pub curr: Vec<f64>,
    pub next: Vec<f64>,
}

/// Per-variable affine scaling of the network's inputs and outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Scale of the one-step increment; the network predicts increments in
    /// these units.
    pub increment_std: Vec<f64>,
}

impl Normalizer {
    pub fn identity(n_vars: usize) -> Self {
        Self {
            mean: vec![0.0; n_vars],
            std: vec![1.0; n_vars],
            increment_std: vec![1.0; n_vars],
        }
    }

    pub fn fit(data: &[TrainingPair], n_vars: usize) -> Result<Self> {
        let first = data.first().ok_or_else(|| Error::Degenerate("empty dataset".into()))?;
        let n = first.curr.len() / n_vars;
        let mut norm = Self::identity(n_vars);
        for v in 0..n_vars {
            let (mut s, mut s2, mut d2) = (0.0, 0.0, 0.0);
            for pair in data {
                for i in v * n..(v + 1) * n {
                    s += pair.curr[i];
                    s2 += pair.curr[i] * pair.curr[i];
                    let d = pair.next[i] - pair.curr[i];
                    d2 += d * d;
                }
            }
            let count = (data.len() * n) as f64;
            let mean = s / count;
            norm.mean[v] = mean;
            norm.std[v] = (s2 / count - mean * mean).max(0.0).sqrt().max(1e-12);
            norm.increment_std[v] = (d2 / count).sqrt().max(1e-12);
        }
        Ok(norm)
    }
}

/// Dense network wrapped with input normalisation and a residual output:
/// `f(X_{t-1}, X_t) = X_t + s ⊙ net([z(X_{t-1}), z(X_t)])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forecaster {
    variables: Vec<String>,
    n_points: usize,
    norm: Normalizer,
    net: DenseNet,
}

/// Samples per parallel work unit. Fixed so the summation order, and with
/// it every bit of the result, does not depend on the thread count.
const CHUNK: usize = 8;

impl Forecaster {
    pub fn new<R: Rng + ?Sized>(
        variables: Vec<String>,
        n_points: usize,
        hidden: &[usize],
        norm: Normalizer,
        rng: &mut R,
    ) -> Result<Self> {
        let d = variables.len() * n_points;
        let mut sizes = vec![2 * d];
        sizes.extend_from_slice(hidden);
        sizes.push(d);
        let net = DenseNet::random(&sizes, 0.1, rng)?;
        Self::with_net(variables, n_points, norm, net)
    }

    pub fn with_net(variables: Vec<String>, n_points: usize, norm: Normalizer, net: DenseNet) -> Result<Self> {
        let d = variables.len() * n_points;
        if net.input_len() != 2 * d || net.output_len() != d {
            return Err(Error::DimensionMismatch {
                what: "network for state dimension",
                expected: d,
                found: net.output_len(),
            });
        }
        for len in [norm.mean.len(), norm.std.len(), norm.increment_std.len()] {
            if len != variables.len() {
                return Err(Error::DimensionMismatch {
                    what: "normalizer variables",
                    expected: variables.len(),
                    found: len,
                });
            }
        }
        Ok(Self {
            variables,
            n_points,
            norm,
            net,
        })
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn state_len(&self) -> usize {
        self.variables.len() * self.n_points
    }

    pub fn normalizer(&self) -> &Normalizer {
        &self.norm
    }

    pub fn net(&self) -> &DenseNet {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut DenseNet {
        &mut self.net
    }

    /// Same wrapper around different network weights.
    pub fn with_weights(&self, net: DenseNet) -> Result<Self> {
        Self::with_net(self.variables.clone(), self.n_points, self.norm.clone(), net)
    }

    fn check_state(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.state_len() {
            return Err(Error::DimensionMismatch {
                what: "state",
                expected: self.state_len(),
                found: x.len(),
            });
        }
        Ok(())
    }

    fn encode(&self, prev: &[f64], curr: &[f64]) -> Result<Vec<f64>> {
        self.check_state(prev)?;
        self.check_state(curr)?;
        let n = self.n_points;
        Ok(prev
            .iter()
            .chain(curr)
            .enumerate()
            .map(|(i, x)| {
                let v = (i / n) % self.variables.len();
                (x - self.norm.mean[v]) / self.norm.std[v]
            })
            .collect())
    }

    fn decode(&self, curr: &[f64], out: &[f64]) -> Vec<f64> {
        curr.iter()
            .zip(out)
            .enumerate()
            .map(|(i, (c, o))| c + self.norm.increment_std[i / self.n_points] * o)
            .collect()
    }

    pub fn predict(&self, prev: &[f64], curr: &[f64]) -> Result<Vec<f64>> {
        let out = self.net.forward(&self.encode(prev, curr)?)?;
        Ok(self.decode(curr, &out))
    }

    /// `∂f/∂X_t` (`d × d`), the block the perturbation acts on.
    pub fn curr_jacobian(&self, prev: &[f64], curr: &[f64]) -> Result<DMatrix<f64>> {
        let d = self.state_len();
        let jac = self.net.input_jacobian(&self.encode(prev, curr)?)?;
        let n = self.n_points;
        Ok(DMatrix::from_fn(d, d, |i, j| {
            let scale = self.norm.increment_std[i / n] / self.norm.std[j / n];
            let identity = if i == j { 1.0 } else { 0.0 };
            identity + scale * jac[(i, d + j)]
        }))
    }

    /// `∂f/∂(X_{t-1}, X_t)` (`d × 2d`).
    pub fn input_jacobian(&self, prev: &[f64], curr: &[f64]) -> Result<DMatrix<f64>> {
        let d = self.state_len();
        let jac = self.net.input_jacobian(&self.encode(prev, curr)?)?;
        let n = self.n_points;
        let n_vars = self.variables.len();
        Ok(DMatrix::from_fn(d, 2 * d, |i, j| {
            let scale = self.norm.increment_std[i / n] / self.norm.std[(j / n) % n_vars];
            let identity = if j == d + i { 1.0 } else { 0.0 };
            identity + scale * jac[(i, j)]
        }))
    }

    /// Mean weighted-L1 loss over `batch` and its gradient with respect to
    /// the network parameters.
    pub fn batch_loss_grad(
        &self,
        batch: &[TrainingPair],
        grid: &SphericalGrid,
        var_weights: &[f64],
    ) -> Result<(f64, NetGradients)> {
        if batch.is_empty() {
            return Err(Error::Degenerate("empty training batch".into()));
        }
        if grid.len() != self.n_points {
            return Err(Error::DimensionMismatch {
                what: "grid points",
                expected: self.n_points,
                found: grid.len(),
            });
        }
        let partials: Vec<Result<(f64, NetGradients)>> = batch
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut grads = NetGradients::zeros_like(&self.net);
                let mut loss = 0.0;
                for pair in chunk {
                    let tape = self.net.forward_tape(&self.encode(&pair.prev, &pair.curr)?)?;
                    let pred = self.decode(&pair.curr, tape.output());
                    let (l, mut g) = weighted_l1_grad(&pred, &pair.next, grid, var_weights)?;
                    for (i, gi) in g.iter_mut().enumerate() {
                        *gi *= self.norm.increment_std[i / self.n_points];
                    }
                    self.net.backward(&tape, &g, &mut grads)?;
                    loss += l;
                }
                Ok((loss, grads))
            })
            .collect();
        let scale = 1.0 / batch.len() as f64;
        let mut total = NetGradients::zeros_like(&self.net);
        let mut loss = 0.0;
        for part in partials {
            let (l, g) = part?;
            loss += l;
            for (t, p) in total.weights.iter_mut().zip(&g.weights) {
                *t += p;
            }
            for (t, p) in total.biases.iter_mut().zip(&g.biases) {
                *t += p;
            }
        }
        for w in &mut total.weights {
            *w *= scale;
        }
        for b in &mut total.biases {
            *b *= scale;
        }
        Ok((loss * scale, total))
    }

    /// Mean weighted-L1 loss without gradients.
    pub fn batch_loss(&self, batch: &[TrainingPair], grid: &SphericalGrid, var_weights: &[f64]) -> Result<f64> {
        let losses: Vec<Result<f64>> = batch
            .par_chunks(CHUNK)
            .map(|chunk| {
                chunk.iter().try_fold(0.0, |acc, pair| {
                    let pred = self.predict(&pair.prev, &pair.curr)?;
                    Ok(acc + super::loss::weighted_l1(&pred, &pair.next, grid, var_weights)?)
                })
            })
            .collect();
        let mut total = 0.0;
        for l in losses {
            total += l?;
        }
        Ok(total / batch.len().max(1) as f64)
    }
}
