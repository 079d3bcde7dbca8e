//! Hybrid ensemble forecasting toolkit.
//!
//! Aleatoric uncertainty comes from flow-dependent multiplicative
//! perturbations driven by an isotropic, temporally correlated random field on
//! the sphere; epistemic uncertainty from a mean-field Gaussian posterior over
//! network weights. Their combined `M × P` ensemble is verified with
//! latitude-weighted skill and calibration scores.

pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod io;
pub mod metrics;
pub mod perturbation;
pub mod rng;
pub mod sphere;
pub mod varnet;

pub use error::{Error, Result};
