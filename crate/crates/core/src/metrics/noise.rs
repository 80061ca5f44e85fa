use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Fraction of the batch whose binarized weight `I{w ≥ threshold}` disagrees with
/// true common-class membership.
pub fn batch_noise_rate(weights: &[f64], hidden_labels: &[usize], common_set: &BTreeSet<usize>, threshold: f64) -> Result<f64> {
    if weights.len() != hidden_labels.len() {
        return Err(Error::shape("batch_noise_rate", "weights and labels differ in length"));
    }
    if weights.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let wrong = weights
        .iter()
        .zip(hidden_labels)
        .filter(|(&w, y)| (w >= threshold) != common_set.contains(y))
        .count();
    Ok(wrong as f64 / weights.len() as f64)
}
