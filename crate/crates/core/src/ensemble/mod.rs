//! `M × P` ensembles: parameter draws crossed with perturbation streams,
//! rolled out autoregressively, and the first-order split of their spread.

mod decompose;
mod model;
mod run;

pub use decompose::{
    aleatoric_variance_linearized, decompose, epistemic_variance, linearized_output_variance, sampled_members,
    UncertaintyDecomposition,
};
pub use model::{GaussianLinear, LinearModel, Model, ModelFamily, VariationalForecaster};
pub use run::{
    generate_ensemble, predictive_mean, total_variance, EnsembleConfig, EnsembleRun, MemberFailure, MemberRun,
    PerturbationSetup, Scheme,
};
