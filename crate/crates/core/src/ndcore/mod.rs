//! Dense numerics and backprop for small MLPs.

mod gradcheck;
mod matrix;
mod mlp;
mod optim;
mod rng;

pub use gradcheck::{finite_diff_flat, finite_diff_grad, max_relative_error, relative_error};
pub use matrix::{dot, euclidean, Matrix};
pub use mlp::{
    grad_reverse, mlp_backward, mlp_forward, mlp_predict, sigmoid, softmax_rows, Activation, ForwardCache,
    GradBundle, Layer, LayerGrad, MlpParams,
};
pub use optim::{sgd_step, Velocity};
pub use rng::{derive_seed, streams, SeededRng};
