//! Uncertainty scores, their mapping to alignment weights, oracle weights and
//! flip-noise injection.

mod centroids;
mod mapping;
mod scores;

pub use centroids::{distance_uncertainty, CentroidBank, DEFAULT_UPDATE_INTERVAL};
pub use mapping::{
    apply_flip_mask, flip_mask, inject_flip_noise, oracle_weights, score_batch, source_distance_scores, to_weight,
    Normalization, WeightConfig,
};
pub use scores::{confidence, energy, energy_bounds, entropy, UncertaintyKind};
