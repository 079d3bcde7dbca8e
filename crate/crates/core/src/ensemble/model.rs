use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::varnet::{sample_weights, Forecaster, VariationalParams};

/// A one-step forecaster `f(X_{t-1}, X_t)` with a fixed parameter value.
pub trait Model: Send + Sync {
    fn state_len(&self) -> usize;

    fn predict(&self, prev: &[f64], curr: &[f64]) -> Result<Vec<f64>>;

    /// `∂f/∂X_t` as a `d × d` matrix.
    fn curr_jacobian(&self, prev: &[f64], curr: &[f64]) -> Result<DMatrix<f64>>;
}

/// A distribution over parameter values from which members are drawn.
pub trait ModelFamily: Sync {
    type Member: Model;

    /// The member at the posterior mean (used when epistemic sampling is off).
    fn mean_member(&self) -> Self::Member;

    fn sample_member(&self, rng: &mut SimRng) -> Self::Member;
}

impl Model for Forecaster {
    fn state_len(&self) -> usize {
        Forecaster::state_len(self)
    }

    fn predict(&self, prev: &[f64], curr: &[f64]) -> Result<Vec<f64>> {
        Forecaster::predict(self, prev, curr)
    }

    fn curr_jacobian(&self, prev: &[f64], curr: &[f64]) -> Result<DMatrix<f64>> {
        Forecaster::curr_jacobian(self, prev, curr)
    }
}

/// A deterministic forecaster is a family with a single member.
impl ModelFamily for Forecaster {
    type Member = Forecaster;

    fn mean_member(&self) -> Forecaster {
        self.clone()
    }

    fn sample_member(&self, _rng: &mut SimRng) -> Forecaster {
        self.clone()
    }
}

/// Forecaster weights drawn from a variational posterior.
#[derive(Debug, Clone)]
pub struct VariationalForecaster {
    template: Forecaster,
    vp: VariationalParams,
}

impl VariationalForecaster {
    pub fn new(template: Forecaster, vp: VariationalParams) -> Result<Self> {
        // Checks that the posterior shapes fit the wrapper.
        template.with_weights(vp.mean_net())?;
        Ok(Self { template, vp })
    }

    pub fn params(&self) -> &VariationalParams {
        &self.vp
    }
}

impl ModelFamily for VariationalForecaster {
    type Member = Forecaster;

    fn mean_member(&self) -> Forecaster {
        self.template
            .with_weights(self.vp.mean_net())
            .expect("shapes checked in new")
    }

    fn sample_member(&self, rng: &mut SimRng) -> Forecaster {
        self.template
            .with_weights(sample_weights(&self.vp, rng))
            .expect("shapes checked in new")
    }
}

/// `f(X_{t-1}, X_t) = A [X_{t-1}; X_t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    a: DMatrix<f64>,
}

impl LinearModel {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if a.ncols() != 2 * a.nrows() {
            return Err(Error::DimensionMismatch {
                what: "linear model columns",
                expected: 2 * a.nrows(),
                found: a.ncols(),
            });
        }
        Ok(Self { a })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }
}

impl Model for LinearModel {
    fn state_len(&self) -> usize {
        self.a.nrows()
    }

    fn predict(&self, prev: &[f64], curr: &[f64]) -> Result<Vec<f64>> {
        let d = self.a.nrows();
        if prev.len() != d || curr.len() != d {
            return Err(Error::DimensionMismatch {
                what: "linear model input",
                expected: d,
                found: prev.len().max(curr.len()),
            });
        }
        Ok((0..d)
            .map(|i| {
                let row = self.a.row(i);
                (0..d).map(|j| row[j] * prev[j] + row[d + j] * curr[j]).sum()
            })
            .collect())
    }

    fn curr_jacobian(&self, _prev: &[f64], _curr: &[f64]) -> Result<DMatrix<f64>> {
        let d = self.a.nrows();
        Ok(self.a.columns(d, d).into_owned())
    }
}

/// Linear models with independent Gaussian coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianLinear {
    pub mean: DMatrix<f64>,
    pub std: DMatrix<f64>,
}

impl ModelFamily for GaussianLinear {
    type Member = LinearModel;

    fn mean_member(&self) -> LinearModel {
        LinearModel::new(self.mean.clone()).expect("mean has a valid shape")
    }

    fn sample_member(&self, rng: &mut SimRng) -> LinearModel {
        let a = self.mean.zip_map(&self.std, |m, s| {
            let z: f64 = rng.sample(StandardNormal);
            m + s * z
        });
        LinearModel::new(a).expect("mean has a valid shape")
    }
}
