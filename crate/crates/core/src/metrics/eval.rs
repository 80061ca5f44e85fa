use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::ModelBundle;
use crate::ndcore::{mlp_predict, softmax_rows, Matrix};
use crate::synthdata::{Dataset, LabelSplit};
use crate::weighting::{confidence, entropy};

/// Harmonic mean of common-class and unknown-class accuracy; `0` when both are `0`.
pub fn h_score(a_common: f64, a_private: f64) -> f64 {
    let s = a_common + a_private;
    if s <= 0.0 {
        0.0
    } else {
        2.0 * a_common * a_private / s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectionKind {
    /// Reject when prediction entropy is at least the threshold.
    EntropyThreshold,
    /// Reject when the top probability is below the threshold.
    ConfidenceThreshold,
}

/// Decides when a target sample is labelled "unknown".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RejectionRule {
    pub kind: RejectionKind,
    pub threshold: f64,
}

impl RejectionRule {
    /// Entropy threshold `0.5·ln K` for a `K`-way source classifier.
    pub fn default_for(num_source_classes: usize) -> Self {
        Self {
            kind: RejectionKind::EntropyThreshold,
            threshold: 0.5 * (num_source_classes as f64).ln(),
        }
    }

    pub fn validate(&self, num_source_classes: usize) -> Result<()> {
        let t = self.threshold;
        let ok = match self.kind {
            RejectionKind::EntropyThreshold => t > 0.0 && t < (num_source_classes as f64).ln(),
            RejectionKind::ConfidenceThreshold => t > 0.0 && t <= 1.0,
        };
        if !ok || !t.is_finite() {
            return Err(Error::Config(format!(
                "rejection threshold {t} invalid for {:?} with {num_source_classes} classes",
                self.kind
            )));
        }
        Ok(())
    }

    /// Prediction for one probability row.
    pub fn decide(&self, p: &[f64]) -> Result<Prediction> {
        let reject = match self.kind {
            RejectionKind::EntropyThreshold => entropy(p)? >= self.threshold,
            RejectionKind::ConfidenceThreshold => confidence(p)? < self.threshold,
        };
        if reject {
            return Ok(Prediction::Unknown);
        }
        let mut best = 0;
        for (i, &v) in p.iter().enumerate() {
            if v > p[best] {
                best = i;
            }
        }
        Ok(Prediction::Class(best))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prediction {
    Class(usize),
    Unknown,
}

/// Integer tallies behind an [`EvalReport`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounts {
    pub n_common: u64,
    pub correct_common: u64,
    pub into_source_private: u64,
    pub n_private: u64,
    pub rejected_private: u64,
}

impl EvalCounts {
    pub fn merge(self, o: Self) -> Self {
        Self {
            n_common: self.n_common + o.n_common,
            correct_common: self.correct_common + o.correct_common,
            into_source_private: self.into_source_private + o.into_source_private,
            n_private: self.n_private + o.n_private,
            rejected_private: self.rejected_private + o.rejected_private,
        }
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub acc_common: f64,
    /// `None` when the target has no private-class samples.
    pub acc_private: Option<f64>,
    /// Harmonic mean of the two accuracies; equals `acc_common` when `acc_private` is `None`.
    pub h_score: f64,
    pub misclass_into_source_private: f64,
    pub per_class_accuracy: BTreeMap<usize, f64>,
    pub counts: EvalCounts,
}

/// Scores predictions against target labels. A common-class sample is correct when
/// predicted as its own class; a private-class sample is correct when rejected.
pub fn evaluate_predictions(predictions: &[Prediction], labels: &[usize], split: &LabelSplit) -> Result<EvalReport> {
    if predictions.len() != labels.len() {
        return Err(Error::shape("evaluate_predictions", "predictions and labels differ in length"));
    }
    let mut c = EvalCounts::default();
    let mut per_class: BTreeMap<usize, (u64, u64)> = BTreeMap::new();
    for (&p, &y) in predictions.iter().zip(labels) {
        let correct = if split.is_common(y) {
            c.n_common += 1;
            if let Prediction::Class(k) = p {
                if split.is_source_private(k) {
                    c.into_source_private += 1;
                }
            }
            p == Prediction::Class(y)
        } else if split.is_target_private(y) {
            c.n_private += 1;
            p == Prediction::Unknown
        } else {
            return Err(Error::InvalidArgument(format!("label {y} is not a target class")));
        };
        c.correct_common += u64::from(correct && split.is_common(y));
        c.rejected_private += u64::from(correct && !split.is_common(y));
        let e = per_class.entry(y).or_default();
        e.0 += u64::from(correct);
        e.1 += 1;
    }
    Ok(report_from_counts(c, per_class))
}

fn report_from_counts(c: EvalCounts, per_class: BTreeMap<usize, (u64, u64)>) -> EvalReport {
    let acc_common = ratio(c.correct_common, c.n_common);
    let acc_private = (c.n_private > 0).then(|| ratio(c.rejected_private, c.n_private));
    EvalReport {
        acc_common,
        acc_private,
        h_score: acc_private.map_or(acc_common, |a| h_score(acc_common, a)),
        misclass_into_source_private: ratio(c.into_source_private, c.n_common),
        per_class_accuracy: per_class.into_iter().map(|(k, (n, d))| (k, ratio(n, d))).collect(),
        counts: c,
    }
}

/// Class probabilities of the classifier on raw inputs.
pub fn predict_proba(models: &ModelBundle, x: &Matrix) -> Result<Matrix> {
    let f = mlp_predict(&models.feature, x)?;
    Ok(softmax_rows(&mlp_predict(&models.classifier, &f)?))
}

/// Predicts every target sample and scores it with [`evaluate_predictions`].
pub fn evaluate(models: &ModelBundle, target: &Dataset, rule: &RejectionRule) -> Result<EvalReport> {
    if models.feature.in_dim() != target.dim() {
        return Err(Error::shape("evaluate", "model input width differs from dataset"));
    }
    if models.classifier.out_dim() != target.split().num_source_classes() {
        return Err(Error::shape("evaluate", "classifier width differs from source class count"));
    }
    let probs = predict_proba(models, target.features())?;
    let preds = probs.iter_rows().map(|p| rule.decide(p)).collect::<Result<Vec<_>>>()?;
    evaluate_predictions(&preds, target.hidden_labels(), &target.split())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h_score_examples() {
        assert_eq!(h_score(0.5, 0.5), 0.5);
        assert_eq!(h_score(1.0, 0.0), 0.0);
        assert_eq!(h_score(0.0, 0.0), 0.0);
        assert!((h_score(0.8, 0.6) - 0.96 / 1.4).abs() < 1e-15);
    }

    #[test]
    fn perfect_and_reject_all() {
        // common {0}, source-private {1}, target-private {2}
        let split = LabelSplit::new(1, 1, 1).unwrap();
        let labels = [0, 0, 2];
        let perfect = [Prediction::Class(0), Prediction::Class(0), Prediction::Unknown];
        assert_eq!(evaluate_predictions(&perfect, &labels, &split).unwrap().h_score, 1.0);
        let all = [Prediction::Unknown; 3];
        let r = evaluate_predictions(&all, &labels, &split).unwrap();
        assert_eq!((r.acc_common, r.acc_private, r.h_score), (0.0, Some(1.0), 0.0));
    }

    #[test]
    fn source_private_predictions_count() {
        let split = LabelSplit::new(1, 1, 0).unwrap();
        let r = evaluate_predictions(&[Prediction::Class(1), Prediction::Class(0)], &[0, 0], &split).unwrap();
        assert_eq!(r.misclass_into_source_private, 0.5);
        assert_eq!(r.acc_private, None);
        assert_eq!(r.h_score, 0.5);
    }

    #[test]
    fn rule_validation() {
        assert!(RejectionRule::default_for(4).validate(4).is_ok());
        let bad = RejectionRule {
            kind: RejectionKind::EntropyThreshold,
            threshold: 2.0,
        };
        assert!(bad.validate(4).is_err());
    }
}
