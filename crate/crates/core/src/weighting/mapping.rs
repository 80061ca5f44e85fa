use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::centroids::{distance_uncertainty, CentroidBank};
use super::scores::{confidence, energy, energy_bounds, entropy, UncertaintyKind};
use crate::error::{Error, Result};
use crate::ndcore::{euclidean, Matrix, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Rescale the batch to `[0, 1]` by its own min and max.
    BatchMinmax,
    /// Use the known range of the score where one exists: `1 − H/ln K` for entropy,
    /// the confidence itself, the simplex bounds for energy. Distance has no closed
    /// range and falls back to the batch min-max.
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightConfig {
    pub kind: UncertaintyKind,
    pub normalization: Normalization,
    /// Binarization threshold `w0`: a sample counts as common when `w ≥ w0`.
    pub threshold: f64,
}

impl Default for WeightConfig {
    fn default() -> Self {
        Self {
            kind: UncertaintyKind::Entropy,
            normalization: Normalization::ClosedForm,
            threshold: 0.5,
        }
    }
}

impl WeightConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Config(format!("weight threshold {} outside (0, 1)", self.threshold)));
        }
        Ok(())
    }
}

fn batch_minmax(scores: &[f64], lower_is_common: bool) -> Vec<f64> {
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return vec![0.5; scores.len()];
    }
    scores
        .iter()
        .map(|s| {
            let u = (s - lo) / (hi - lo);
            if lower_is_common {
                1.0 - u
            } else {
                u
            }
        })
        .collect()
}

/// Maps raw uncertainty scores to alignment weights in `[0, 1]`, low uncertainty
/// giving high weight. `num_classes` is the classifier width `K` used by the
/// closed-form ranges. A batch whose scores are all equal maps to `0.5` everywhere.
pub fn to_weight(scores: &[f64], cfg: &WeightConfig, num_classes: usize) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::InvalidArgument("no scores to weight".into()));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("uncertainty score".into()));
    }
    let kind = cfg.kind;
    if cfg.normalization == Normalization::BatchMinmax || kind == UncertaintyKind::Distance {
        return Ok(batch_minmax(scores, kind.lower_is_common()));
    }
    if scores.iter().all(|&s| s == scores[0]) {
        return Ok(vec![0.5; scores.len()]);
    }
    let clip = |w: f64| w.clamp(0.0, 1.0);
    Ok(match kind {
        UncertaintyKind::Entropy => {
            let max = (num_classes as f64).ln();
            scores.iter().map(|h| if max > 0.0 { clip(1.0 - h / max) } else { 0.5 }).collect()
        }
        UncertaintyKind::Confidence => scores.iter().map(|&c| clip(c)).collect(),
        UncertaintyKind::Energy => {
            let (lo, hi) = energy_bounds(num_classes);
            scores
                .iter()
                .map(|e| if hi > lo { clip((hi - e) / (hi - lo)) } else { 0.5 })
                .collect()
        }
        UncertaintyKind::Distance => unreachable!("handled above"),
    })
}

/// Raw scores of one batch. `probs` are classifier probabilities (one row per
/// sample); `features` and `bank` are used by the distance kind only.
pub fn score_batch(
    kind: UncertaintyKind,
    probs: &Matrix,
    features: &Matrix,
    bank: Option<&CentroidBank>,
) -> Result<Vec<f64>> {
    match kind {
        UncertaintyKind::Entropy => probs.iter_rows().map(entropy).collect(),
        UncertaintyKind::Confidence => probs.iter_rows().map(confidence).collect(),
        UncertaintyKind::Energy => probs.iter_rows().map(energy).collect(),
        UncertaintyKind::Distance => {
            let bank = bank.ok_or_else(|| Error::InvalidArgument("distance scores need a centroid bank".into()))?;
            features.iter_rows().map(|f| distance_uncertainty(f, bank)).collect()
        }
    }
}

/// Distance of each source feature to its nearest target feature. Source rows
/// from classes absent in the target sit far from every target feature.
pub fn source_distance_scores(source: &Matrix, target: &Matrix) -> Result<Vec<f64>> {
    if source.cols() != target.cols() {
        return Err(Error::shape("source_distance_scores", "feature widths differ"));
    }
    if target.rows() == 0 {
        return Err(Error::InvalidArgument("empty target batch".into()));
    }
    Ok(source
        .iter_rows()
        .map(|s| target.iter_rows().map(|t| euclidean(s, t)).fold(f64::INFINITY, f64::min))
        .collect())
}

/// Ground-truth weights: `1` for common-class labels, `0` otherwise.
pub fn oracle_weights(hidden_labels: &[usize], common_set: &BTreeSet<usize>) -> Vec<f64> {
    hidden_labels
        .iter()
        .map(|y| if common_set.contains(y) { 1.0 } else { 0.0 })
        .collect()
}

/// Independent Bernoulli(`rate`) flip decisions.
pub fn flip_mask(n: usize, rate: f64, rng: &mut SeededRng) -> Result<Vec<bool>> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::InvalidArgument(format!("flip rate {rate} outside [0, 1]")));
    }
    Ok((0..n).map(|_| rng.bernoulli(rate)).collect())
}

/// Flips binary weights where `mask` is set. Applying the same mask twice is the identity.
pub fn apply_flip_mask(weights: &[f64], mask: &[bool]) -> Result<Vec<f64>> {
    if weights.len() != mask.len() {
        return Err(Error::shape("apply_flip_mask", "mask length differs from weights"));
    }
    if let Some(bad) = weights.iter().find(|&&w| w != 0.0 && w != 1.0) {
        return Err(Error::InvalidArgument(format!("weight {bad} is not binary")));
    }
    Ok(weights
        .iter()
        .zip(mask)
        .map(|(&w, &m)| if m { 1.0 - w } else { w })
        .collect())
}

/// Flips each binary weight independently with probability `rate`.
pub fn inject_flip_noise(weights: &[f64], rate: f64, rng: &mut SeededRng) -> Result<Vec<f64>> {
    let mask = flip_mask(weights.len(), rate, rng)?;
    apply_flip_mask(weights, &mask)
}
