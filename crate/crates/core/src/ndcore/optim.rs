use super::mlp::{GradBundle, MlpParams};
use crate::error::{Error, Result};

/// Momentum buffers for one [`MlpParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Velocity(GradBundle);

impl Velocity {
    pub fn zeros_like(params: &MlpParams) -> Self {
        Self(GradBundle::zeros_like(params))
    }

    pub fn as_grads(&self) -> &GradBundle {
        &self.0
    }
}

/// SGD with heavy-ball momentum: `v ← μ·v + g`, `p ← p − lr·v`.
pub fn sgd_step(
    params: &mut MlpParams,
    grads: &GradBundle,
    lr: f64,
    momentum: f64,
    velocity: &mut Velocity,
) -> Result<()> {
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::InvalidArgument(format!("learning rate must be > 0, got {lr}")));
    }
    if !(0.0..1.0).contains(&momentum) {
        return Err(Error::InvalidArgument(format!(
            "momentum must lie in [0, 1), got {momentum}"
        )));
    }
    grads.check_matches(params)?;
    velocity.0.check_matches(params)?;
    for ((layer, g), v) in params
        .layers_mut()
        .iter_mut()
        .zip(&grads.layers)
        .zip(&mut velocity.0.layers)
    {
        for ((p, &gi), vi) in layer
            .weight
            .data_mut()
            .iter_mut()
            .zip(g.weight.data())
            .zip(v.weight.data_mut())
        {
            *vi = momentum * *vi + gi;
            *p -= lr * *vi;
        }
        for ((p, &gi), vi) in layer.bias.iter_mut().zip(&g.bias).zip(&mut v.bias) {
            *vi = momentum * *vi + gi;
            *p -= lr * *vi;
        }
    }
    Ok(())
}
