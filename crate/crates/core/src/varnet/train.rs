use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::forecaster::{Forecaster, TrainingPair};
use super::variational::{elbo_loss, LossBreakdown, VariationalParams};
use crate::error::{Error, Result};
use crate::sphere::SphericalGrid;

/// Gradient descent with heavy-ball momentum and a cosine-decayed step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            momentum: 0.9,
            epochs: 40,
            batch_size: 32,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self, section: &str) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(
                format!("{section}.learning_rate"),
                "must be finite and > 0",
            ));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::config(format!("{section}.momentum"), "must lie in [0, 1)"));
        }
        if self.batch_size == 0 {
            return Err(Error::config(format!("{section}.batch_size"), "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PosttrainConfig {
    #[serde(deserialize_with = "posttrain_optimizer")]
    pub optimizer: OptimizerConfig,
    /// Weight samples per ELBO evaluation.
    pub n_samples: usize,
}

impl Default for PosttrainConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerConfig {
                learning_rate: 5e-4,
                momentum: 0.9,
                epochs: 5,
                batch_size: 32,
            },
            n_samples: 1,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PartialOptimizer {
    learning_rate: Option<f64>,
    momentum: Option<f64>,
    epochs: Option<usize>,
    batch_size: Option<usize>,
}

/// A partial optimizer table falls back to the post-training defaults, not
/// the pre-training ones.
fn posttrain_optimizer<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<OptimizerConfig, D::Error> {
    let p = PartialOptimizer::deserialize(d)?;
    let base = PosttrainConfig::default().optimizer;
    Ok(OptimizerConfig {
        learning_rate: p.learning_rate.unwrap_or(base.learning_rate),
        momentum: p.momentum.unwrap_or(base.momentum),
        epochs: p.epochs.unwrap_or(base.epochs),
        batch_size: p.batch_size.unwrap_or(base.batch_size),
    })
}

/// `lr · (1 + cos(π step / total)) / 2`.
pub fn cosine_lr(base: f64, step: usize, total: usize) -> f64 {
    if total == 0 {
        return base;
    }
    0.5 * base * (1.0 + (std::f64::consts::PI * step as f64 / total as f64).cos())
}

fn momentum_step(param: &mut DMatrix<f64>, velocity: &mut DMatrix<f64>, grad: &DMatrix<f64>, lr: f64, momentum: f64) {
    *velocity *= momentum;
    *velocity += grad;
    *param -= &*velocity * lr;
}

fn batches<R: Rng + ?Sized>(n: usize, batch_size: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order.chunks(batch_size).map(|c| c.to_vec()).collect()
}

/// Minimise the weighted L1 loss of one-step predictions. Returns the trained
/// forecaster and the mean training loss of each epoch.
pub fn pretrain<R: Rng + ?Sized>(
    model: &Forecaster,
    data: &[TrainingPair],
    grid: &SphericalGrid,
    var_weights: &[f64],
    opt: &OptimizerConfig,
    rng: &mut R,
) -> Result<(Forecaster, Vec<f64>)> {
    opt.validate("pretrain")?;
    if data.is_empty() {
        return Err(Error::Degenerate("empty training set".into()));
    }
    let mut model = model.clone();
    let net = model.net();
    let mut vw: Vec<DMatrix<f64>> = net
        .weights()
        .iter()
        .map(|w| DMatrix::zeros(w.nrows(), w.ncols()))
        .collect();
    let mut vb: Vec<DMatrix<f64>> = net.biases().iter().map(|b| DMatrix::zeros(b.len(), 1)).collect();
    let steps_per_epoch = data.len().div_ceil(opt.batch_size);
    let total = opt.epochs * steps_per_epoch;
    let mut history = Vec::with_capacity(opt.epochs);
    let mut step = 0;
    for epoch in 0..opt.epochs {
        let mut epoch_loss = 0.0;
        for idx in batches(data.len(), opt.batch_size, rng) {
            let batch: Vec<TrainingPair> = idx.iter().map(|&i| data[i].clone()).collect();
            let (loss, grads) = model.batch_loss_grad(&batch, grid, var_weights)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "pretraining loss at epoch {epoch}, step {step}"
                )));
            }
            epoch_loss += loss * batch.len() as f64;
            let lr = cosine_lr(opt.learning_rate, step, total);
            let net = model.net_mut();
            for (k, g) in grads.weights.iter().enumerate() {
                momentum_step(&mut net.weights_mut()[k], &mut vw[k], g, lr, opt.momentum);
            }
            for (k, g) in grads.biases.iter().enumerate() {
                let mut b = DMatrix::from_column_slice(g.len(), 1, net.biases()[k].as_slice());
                let gm = DMatrix::from_column_slice(g.len(), 1, g.as_slice());
                momentum_step(&mut b, &mut vb[k], &gm, lr, opt.momentum);
                net.biases_mut()[k].copy_from_slice(b.as_slice());
            }
            step += 1;
        }
        history.push(epoch_loss / data.len() as f64);
    }
    Ok((model, history))
}

/// Fit the variational posterior by minimising the ELBO loss, starting from
/// `init`. Returns the fitted parameters and the mean loss breakdown of each
/// epoch.
pub fn posttrain_vi<R: Rng + ?Sized>(
    pretrained: &Forecaster,
    data: &[TrainingPair],
    init: VariationalParams,
    grid: &SphericalGrid,
    var_weights: &[f64],
    cfg: &PosttrainConfig,
    rng: &mut R,
) -> Result<(VariationalParams, Vec<LossBreakdown>)> {
    let opt = &cfg.optimizer;
    opt.validate("posttrain")?;
    if data.is_empty() {
        return Err(Error::Degenerate("empty training set".into()));
    }
    let mut vp = init;
    let zeros = |m: &Vec<DMatrix<f64>>| -> Vec<DMatrix<f64>> {
        m.iter().map(|w| DMatrix::zeros(w.nrows(), w.ncols())).collect()
    };
    let mut v_mu = zeros(&vp.w_mu);
    let mut v_rho = zeros(&vp.w_mu);
    let steps_per_epoch = data.len().div_ceil(opt.batch_size);
    let total = opt.epochs * steps_per_epoch;
    let mut history = Vec::with_capacity(opt.epochs);
    let mut step = 0;
    for epoch in 0..opt.epochs {
        let mut sum = LossBreakdown {
            l1: 0.0,
            kl: 0.0,
            total: 0.0,
        };
        for idx in batches(data.len(), opt.batch_size, rng) {
            let batch: Vec<TrainingPair> = idx.iter().map(|&i| data[i].clone()).collect();
            let (loss, grads) =
                elbo_loss(&vp, pretrained, &batch, grid, var_weights, cfg.n_samples, rng).map_err(|e| match e {
                    Error::NonFinite(msg) => Error::NonFinite(format!("{msg} at epoch {epoch}, step {step}")),
                    other => other,
                })?;
            let w = batch.len() as f64 / data.len() as f64;
            sum.l1 += w * loss.l1;
            sum.kl += w * loss.kl;
            sum.total += w * loss.total;
            let lr = cosine_lr(opt.learning_rate, step, total);
            for k in 0..vp.w_mu.len() {
                momentum_step(&mut vp.w_mu[k], &mut v_mu[k], &grads.mu[k], lr, opt.momentum);
                momentum_step(&mut vp.w_rho[k], &mut v_rho[k], &grads.rho[k], lr, opt.momentum);
            }
            step += 1;
        }
        history.push(sum);
    }
    Ok((vp, history))
}
