use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ndcore::{softmax_rows, Matrix};

/// Discriminator outputs are clamped into `[D_CLAMP, 1 − D_CLAMP]` before taking logs.
pub const D_CLAMP: f64 = 1e-7;

/// Mean softmax cross-entropy and its gradient w.r.t. the logits.
pub fn source_ce_loss(logits: &Matrix, labels: &[usize]) -> Result<(f64, Matrix)> {
    if logits.rows() != labels.len() {
        return Err(Error::shape(
            "source_ce_loss",
            format!("{} logit rows for {} labels", logits.rows(), labels.len()),
        ));
    }
    let k = logits.cols();
    if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
        return Err(Error::InvalidArgument(format!("label {bad} ≥ class count {k}")));
    }
    let n = labels.len();
    if n == 0 {
        return Ok((0.0, Matrix::zeros(0, k)));
    }
    let mut grad = softmax_rows(logits);
    let mut loss = 0.0;
    for (r, &y) in labels.iter().enumerate() {
        let row = logits.row(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        loss += lse - row[y];
        grad.row_mut(r)[y] -= 1.0;
    }
    let inv = 1.0 / n as f64;
    for g in grad.data_mut() {
        *g *= inv;
    }
    Ok((loss * inv, grad))
}

/// Value and output-gradients of the weighted adversarial loss.
#[derive(Debug, Clone, PartialEq)]
pub struct AdvLoss {
    pub value: f64,
    pub grad_source: Vec<f64>,
    pub grad_target: Vec<f64>,
}

fn check_weights(w: &[f64], n: usize, what: &str) -> Result<()> {
    if w.len() != n {
        return Err(Error::shape(
            "adv_alignment_loss",
            format!("{} {what} weights for {n} rows", w.len()),
        ));
    }
    if let Some(bad) = w.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidArgument(format!("{what} weight {bad} outside [0, 1]")));
    }
    Ok(())
}

/// `−mean(w_s · log D(source)) − mean(w_t · log(1 − D(target)))`.
///
/// Means are taken per domain over all rows (down-weighted rows still count in
/// the denominator). Outputs are clamped into `[D_CLAMP, 1 − D_CLAMP]`; the
/// gradient is zero where the clamp is active.
pub fn adv_alignment_loss(d_source: &[f64], d_target: &[f64], w_source: &[f64], w_target: &[f64]) -> Result<AdvLoss> {
    check_weights(w_source, d_source.len(), "source")?;
    check_weights(w_target, d_target.len(), "target")?;
    let clamp = |d: f64| d.clamp(D_CLAMP, 1.0 - D_CLAMP);
    let active = |d: f64| (D_CLAMP..=1.0 - D_CLAMP).contains(&d);

    let mut value = 0.0;
    let mut grad_source = vec![0.0; d_source.len()];
    if !d_source.is_empty() {
        let inv = 1.0 / d_source.len() as f64;
        let mut sum = 0.0;
        for ((g, &d), &w) in grad_source.iter_mut().zip(d_source).zip(w_source) {
            sum -= w * clamp(d).ln();
            if active(d) {
                *g = -w * inv / d;
            }
        }
        value += sum * inv;
    }
    let mut grad_target = vec![0.0; d_target.len()];
    if !d_target.is_empty() {
        let inv = 1.0 / d_target.len() as f64;
        let mut sum = 0.0;
        for ((g, &d), &w) in grad_target.iter_mut().zip(d_target).zip(w_target) {
            sum -= w * (1.0 - clamp(d)).ln();
            if active(d) {
                *g = w * inv / (1.0 - d);
            }
        }
        value += sum * inv;
    }
    Ok(AdvLoss {
        value,
        grad_source,
        grad_target,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SslVariant {
    /// Squared distance with gradients into both views.
    PlainL2,
    /// Each ordering treats the other view as a constant; the two orderings are averaged.
    StopGradOneBranch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SslLoss {
    pub value: f64,
    pub grad_view1: Matrix,
    pub grad_view2: Matrix,
}

/// Mean over rows of `‖view1 − view2‖²`.
pub fn ssl_loss(view1: &Matrix, view2: &Matrix, variant: SslVariant) -> Result<SslLoss> {
    if view1.shape() != view2.shape() {
        return Err(Error::shape(
            "ssl_loss",
            format!("{:?} vs {:?}", view1.shape(), view2.shape()),
        ));
    }
    let n = view1.rows();
    let diff = view1.sub(view2)?;
    if n == 0 {
        return Ok(SslLoss {
            value: 0.0,
            grad_view1: diff.clone(),
            grad_view2: diff,
        });
    }
    let value = diff.norm_sq() / n as f64;
    let coeff = match variant {
        SslVariant::PlainL2 => 2.0 / n as f64,
        // ½·(2(v1 − sg v2)/n) from one ordering, mirrored for the other
        SslVariant::StopGradOneBranch => 1.0 / n as f64,
    };
    Ok(SslLoss {
        value,
        grad_view1: diff.scale(coeff),
        grad_view2: diff.scale(-coeff),
    })
}
