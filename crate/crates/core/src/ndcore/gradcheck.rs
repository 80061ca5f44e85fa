//! Central finite differences, used as the gradient oracle in tests.

use super::mlp::{GradBundle, MlpParams};
use crate::error::{Error, Result};

/// Central-difference gradient of `loss` at `x`.
pub fn finite_diff_flat<F>(mut loss: F, x: &[f64], step: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be > 0, got {step}")));
    }
    let mut probe = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + step;
        let up = loss(&probe);
        probe[i] = orig - step;
        let down = loss(&probe);
        probe[i] = orig;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::NonFinite(format!("loss at parameter {i}")));
        }
        out.push((up - down) / (2.0 * step));
    }
    Ok(out)
}

/// Central-difference estimate of `∂loss/∂params` for every parameter.
pub fn finite_diff_grad<F>(mut loss: F, params: &MlpParams, step: f64) -> Result<GradBundle>
where
    F: FnMut(&MlpParams) -> f64,
{
    let mut scratch = params.clone();
    let flat = finite_diff_flat(
        |x| {
            scratch.set_flat(x).expect("length fixed by construction");
            loss(&scratch)
        },
        &params.to_flat(),
        step,
    )?;
    GradBundle::from_flat(params, &flat)
}

/// `|a − b| / max(|a|, |b|, 1e-8)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Largest [`relative_error`] over paired entries.
pub fn max_relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "gradient lengths differ");
    a.iter()
        .zip(b)
        .map(|(&x, &y)| relative_error(x, y))
        .fold(0.0, f64::max)
}
