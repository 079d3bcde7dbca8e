//! Small dense forecaster: deterministic pre-training on a latitude-weighted
//! L1 loss, then variational post-training of a mean-field Gaussian
//! posterior over its weights.

mod forecaster;
mod loss;
mod net;
mod train;
mod variational;

pub use forecaster::{Forecaster, Normalizer, TrainingPair};
pub use loss::{weighted_l1, weighted_l1_grad};
pub use net::{DenseNet, NetGradients, Tape};
pub use train::{cosine_lr, posttrain_vi, pretrain, OptimizerConfig, PosttrainConfig};
pub use variational::{
    elbo_loss, elbo_loss_with_noise, kl_gaussian, sample_weights, softplus, softplus_inv, LossBreakdown, PriorCentre,
    VariationalGrads, VariationalParams,
};
