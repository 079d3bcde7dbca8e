use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::forecaster::{Forecaster, TrainingPair};
use super::net::DenseNet;
use crate::error::{Error, Result};
use crate::sphere::SphericalGrid;

/// Where the Gaussian prior over weights is centred.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorCentre {
    Zero,
    /// The pretrained deterministic weights.
    #[default]
    Pretrained,
}

/// `log(1 + e^ρ)`, evaluated without overflow.
pub fn softplus(rho: f64) -> f64 {
    if rho > 30.0 {
        rho
    } else {
        rho.exp().ln_1p()
    }
}

/// Inverse of [`softplus`]; `σ = 0` maps to `-∞`.
pub fn softplus_inv(sigma: f64) -> f64 {
    if sigma > 30.0 {
        sigma
    } else {
        sigma.exp_m1().ln()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Mean-field Gaussian posterior `N(W_μ, σ²)` over the weight matrices, with
/// `σ = softplus(ρ)`. Biases are point estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalParams {
    pub w_mu: Vec<DMatrix<f64>>,
    pub w_rho: Vec<DMatrix<f64>>,
    pub biases: Vec<nalgebra::DVector<f64>>,
    pub prior_mean: Vec<DMatrix<f64>>,
    pub prior_std: f64,
    pub beta_kl: f64,
}

/// KL term, data term and their combination for one ELBO evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub l1: f64,
    pub kl: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationalGrads {
    pub mu: Vec<DMatrix<f64>>,
    pub rho: Vec<DMatrix<f64>>,
}

impl VariationalParams {
    /// Explicit construction from means and standard deviations.
    pub fn new(
        w_mu: Vec<DMatrix<f64>>,
        w_sigma: &[DMatrix<f64>],
        biases: Vec<nalgebra::DVector<f64>>,
        prior_mean: Vec<DMatrix<f64>>,
        prior_std: f64,
        beta_kl: f64,
    ) -> Result<Self> {
        if !(prior_std > 0.0 && prior_std.is_finite()) {
            return Err(Error::config("vi.prior_std", "must be finite and > 0"));
        }
        if !(beta_kl >= 0.0 && beta_kl.is_finite()) {
            return Err(Error::config("vi.beta_kl", "must be finite and >= 0"));
        }
        if w_sigma.len() != w_mu.len() || prior_mean.len() != w_mu.len() || biases.len() != w_mu.len() {
            return Err(Error::DimensionMismatch {
                what: "variational layer count",
                expected: w_mu.len(),
                found: w_sigma.len(),
            });
        }
        for ((mu, s), p) in w_mu.iter().zip(w_sigma).zip(&prior_mean) {
            if mu.shape() != s.shape() || mu.shape() != p.shape() {
                return Err(Error::DimensionMismatch {
                    what: "variational weight shape",
                    expected: mu.len(),
                    found: s.len(),
                });
            }
            if s.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return Err(Error::domain("weight scales must be finite and >= 0"));
            }
        }
        let w_rho = w_sigma.iter().map(|s| s.map(softplus_inv)).collect();
        Ok(Self {
            w_mu,
            w_rho,
            biases,
            prior_mean,
            prior_std,
            beta_kl,
        })
    }

    /// Start from a deterministic network: `W_μ` at its weights, every
    /// `σ = init_std`.
    pub fn from_net(net: &DenseNet, init_std: f64, prior_std: f64, beta_kl: f64, centre: PriorCentre) -> Result<Self> {
        let w_mu: Vec<_> = net.weights().to_vec();
        let sigma: Vec<_> = w_mu
            .iter()
            .map(|w| DMatrix::from_element(w.nrows(), w.ncols(), init_std))
            .collect();
        let prior_mean = match centre {
            PriorCentre::Pretrained => w_mu.clone(),
            PriorCentre::Zero => w_mu.iter().map(|w| DMatrix::zeros(w.nrows(), w.ncols())).collect(),
        };
        Self::new(w_mu, &sigma, net.biases().to_vec(), prior_mean, prior_std, beta_kl)
    }

    pub fn n_weights(&self) -> usize {
        self.w_mu.iter().map(|w| w.len()).sum()
    }

    pub fn sigma(&self) -> Vec<DMatrix<f64>> {
        self.w_rho.iter().map(|r| r.map(softplus)).collect()
    }

    /// Network with every weight at its posterior mean.
    pub fn mean_net(&self) -> DenseNet {
        DenseNet::from_parts(self.w_mu.clone(), self.biases.clone()).expect("shapes validated at construction")
    }

    /// One standard-normal draw per weight.
    pub fn draw_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<DMatrix<f64>> {
        self.w_mu
            .iter()
            .map(|w| DMatrix::from_fn(w.nrows(), w.ncols(), |_, _| rng.sample(StandardNormal)))
            .collect()
    }

    /// `θ = W_μ + ε ⊙ σ` for a given `ε`.
    pub fn weights_with_noise(&self, noise: &[DMatrix<f64>]) -> Result<DenseNet> {
        if noise.len() != self.w_mu.len() || noise.iter().zip(&self.w_mu).any(|(e, w)| e.shape() != w.shape()) {
            return Err(Error::DimensionMismatch {
                what: "weight noise",
                expected: self.n_weights(),
                found: noise.iter().map(|e| e.len()).sum(),
            });
        }
        let weights = self
            .w_mu
            .iter()
            .zip(&self.w_rho)
            .zip(noise)
            .map(|((mu, rho), eps)| mu.zip_zip_map(rho, eps, |m, r, e| m + e * softplus(r)))
            .collect();
        DenseNet::from_parts(weights, self.biases.clone())
    }
}

/// Reparameterised weight sample `θ = W_μ + ε ⊙ σ`, `ε ~ N(0, I)`.
pub fn sample_weights<R: Rng + ?Sized>(vp: &VariationalParams, rng: &mut R) -> DenseNet {
    let noise = vp.draw_noise(rng);
    vp.weights_with_noise(&noise).expect("noise drawn with matching shapes")
}

/// `Σ log(σ_p/σ) + (σ² + (μ - m)²)/(2σ_p²) - 1/2` over all weights, where
/// `m` is the prior centre.
pub fn kl_gaussian(vp: &VariationalParams) -> Result<f64> {
    let sp2 = vp.prior_std * vp.prior_std;
    let mut kl = 0.0;
    for ((mu, rho), m) in vp.w_mu.iter().zip(&vp.w_rho).zip(&vp.prior_mean) {
        for ((&u, &r), &c) in mu.iter().zip(rho.iter()).zip(m.iter()) {
            let s = softplus(r);
            if !(s > 0.0) {
                return Err(Error::domain(format!("weight scale {s} must be > 0 for the KL term")));
            }
            let d = u - c;
            kl += (vp.prior_std / s).ln() + (s * s + d * d) / (2.0 * sp2) - 0.5;
        }
    }
    Ok(kl)
}

/// ELBO loss with the given weight noise (one entry per θ sample) and its
/// gradients with respect to `W_μ` and `W_ρ`.
pub fn elbo_loss_with_noise(
    vp: &VariationalParams,
    template: &Forecaster,
    batch: &[TrainingPair],
    grid: &SphericalGrid,
    var_weights: &[f64],
    noise: &[Vec<DMatrix<f64>>],
) -> Result<(LossBreakdown, VariationalGrads)> {
    if noise.is_empty() {
        return Err(Error::Degenerate("ELBO needs at least one weight sample".into()));
    }
    let mut grads = VariationalGrads {
        mu: vp.w_mu.iter().map(|w| DMatrix::zeros(w.nrows(), w.ncols())).collect(),
        rho: vp.w_mu.iter().map(|w| DMatrix::zeros(w.nrows(), w.ncols())).collect(),
    };
    let per_sample = 1.0 / noise.len() as f64;
    let mut l1 = 0.0;
    for eps in noise {
        let model = template.with_weights(vp.weights_with_noise(eps)?)?;
        let (loss, g) = model.batch_loss_grad(batch, grid, var_weights)?;
        l1 += per_sample * loss;
        for k in 0..vp.w_mu.len() {
            grads.mu[k] += per_sample * &g.weights[k];
            // dθ/dρ = ε σ'(ρ) with σ' the logistic function
            let dtheta_drho = eps[k].zip_map(&vp.w_rho[k], |e, r| e * sigmoid(r));
            grads.rho[k] += per_sample * g.weights[k].component_mul(&dtheta_drho);
        }
    }
    let kl = kl_gaussian(vp)?;
    let total = l1 + vp.beta_kl * kl;
    if !total.is_finite() {
        return Err(Error::NonFinite(format!("ELBO loss (l1 = {l1}, kl = {kl})")));
    }
    let sp2 = vp.prior_std * vp.prior_std;
    for k in 0..vp.w_mu.len() {
        let dmu = (&vp.w_mu[k] - &vp.prior_mean[k]) / sp2;
        grads.mu[k] += vp.beta_kl * dmu;
        let dsig = vp.w_rho[k].map(|r| {
            let s = softplus(r);
            (-1.0 / s + s / sp2) * sigmoid(r)
        });
        grads.rho[k] += vp.beta_kl * dsig;
    }
    Ok((LossBreakdown { l1, kl, total }, grads))
}

/// ELBO loss with `n_samples` fresh weight draws.
pub fn elbo_loss<R: Rng + ?Sized>(
    vp: &VariationalParams,
    template: &Forecaster,
    batch: &[TrainingPair],
    grid: &SphericalGrid,
    var_weights: &[f64],
    n_samples: usize,
    rng: &mut R,
) -> Result<(LossBreakdown, VariationalGrads)> {
    let noise: Vec<_> = (0..n_samples.max(1)).map(|_| vp.draw_noise(rng)).collect();
    elbo_loss_with_noise(vp, template, batch, grid, var_weights, &noise)
}
