//! Training objectives: source cross-entropy, weighted adversarial
//! alignment, SSL consistency, their combination, and the toy losses.

mod basic;
mod objective;
mod toy;

pub use basic::{adv_alignment_loss, source_ce_loss, ssl_loss, AdvLoss, SslLoss, SslVariant, D_CLAMP};
pub use objective::{
    objective_components, total_objective, total_objective_with_views, LossComponents, LossWeights,
    ModelBundle, ModelDims, ModelGrads, Objective, SslConfig, SslViews, WeightedBatch,
};
pub use toy::{toy_perturbations, toy_ssl_loss, toy_ssl_loss_with_noise, toy_sup_loss, ToyGrads};
