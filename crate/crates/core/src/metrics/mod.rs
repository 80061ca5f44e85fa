//! H-score evaluation, batch noise rate and principal-direction analysis.

mod direction;
mod eval;
mod noise;

pub use direction::{alignment, principal_direction, PrincipalDirection, DEGENERATE_GAP};
pub use eval::{
    evaluate, evaluate_predictions, h_score, predict_proba, EvalCounts, EvalReport, Prediction, RejectionKind,
    RejectionRule,
};
pub use noise::batch_noise_rate;
