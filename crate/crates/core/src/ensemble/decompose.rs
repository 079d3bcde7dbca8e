use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{Model, ModelFamily};
use super::run::{population_variance, total_variance, EnsembleRun};
use crate::error::{Error, Result};
use crate::io::seeds::indexed_seed;
use crate::perturbation::StatePair;
use crate::rng::rng_from_seed;

/// Per-point split of the one-step predictive variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyDecomposition {
    pub total: Vec<f64>,
    pub aleatoric: Vec<f64>,
    pub epistemic: Vec<f64>,
    /// `total - (aleatoric + epistemic)`.
    pub cross_residual: Vec<f64>,
}

/// The parameter draws `θ_1..θ_M` an ensemble with this master seed uses.
pub fn sampled_members<F: ModelFamily>(family: &F, m: usize, master_seed: u64) -> Vec<F::Member> {
    (0..m)
        .into_par_iter()
        .map(|i| family.sample_member(&mut rng_from_seed(indexed_seed(master_seed, "theta", i))))
        .collect()
}

/// `(1/M) Σ_i (f(X, θ_i) - f̄)²` on the unperturbed input.
pub fn epistemic_variance<F: ModelFamily>(
    family: &F,
    input: &StatePair,
    m: usize,
    master_seed: u64,
) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::config("ensemble.m", "must be >= 1"));
    }
    let outputs: Vec<Vec<f64>> = sampled_members(family, m, master_seed)
        .par_iter()
        .map(|model| model.predict(&input.prev, &input.curr))
        .collect::<Result<_>>()?;
    let refs: Vec<&[f64]> = outputs.iter().map(Vec::as_slice).collect();
    Ok(population_variance(&refs))
}

/// `∇fᵀ Σ_x ∇f` for every output of one model, with `∇f` taken with
/// respect to `X_t`.
pub fn linearized_output_variance<M: Model>(model: &M, input: &StatePair, sigma_x: &DMatrix<f64>) -> Result<Vec<f64>> {
    let d = input.state_len();
    if sigma_x.shape() != (d, d) {
        return Err(Error::DimensionMismatch {
            what: "Σ_x size",
            expected: d,
            found: sigma_x.nrows(),
        });
    }
    let jac = model.curr_jacobian(&input.prev, &input.curr)?;
    let js = &jac * sigma_x;
    Ok((0..jac.nrows()).map(|k| js.row(k).dot(&jac.row(k))).collect())
}

/// `(1/M) Σ_i ∇f(X, θ_i)ᵀ Σ_x ∇f(X, θ_i)` per output point.
pub fn aleatoric_variance_linearized<F: ModelFamily>(
    family: &F,
    input: &StatePair,
    sigma_x: &DMatrix<f64>,
    m: usize,
    master_seed: u64,
) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::config("ensemble.m", "must be >= 1"));
    }
    let per_model: Vec<Vec<f64>> = sampled_members(family, m, master_seed)
        .par_iter()
        .map(|model| linearized_output_variance(model, input, sigma_x))
        .collect::<Result<_>>()?;
    let mut out = vec![0.0; per_model[0].len()];
    for v in &per_model {
        for (o, x) in out.iter_mut().zip(v) {
            *o += x / m as f64;
        }
    }
    Ok(out)
}

/// Split the lead-1 variance of a hybrid run into its linearised aleatoric
/// part, its epistemic part and what neither accounts for.
pub fn decompose<F: ModelFamily>(
    run: &EnsembleRun,
    family: &F,
    input: &StatePair,
    sigma_x: &DMatrix<f64>,
) -> Result<UncertaintyDecomposition> {
    let (m, _) = run.config.effective_shape();
    let total = total_variance(run, 1)?;
    let aleatoric = aleatoric_variance_linearized(family, input, sigma_x, m, run.master_seed)?;
    let epistemic = epistemic_variance(family, input, m, run.master_seed)?;
    let cross_residual = total
        .iter()
        .zip(&aleatoric)
        .zip(&epistemic)
        .map(|((t, a), e)| t - (a + e))
        .collect();
    Ok(UncertaintyDecomposition {
        total,
        aleatoric,
        epistemic,
        cross_residual,
    })
}
