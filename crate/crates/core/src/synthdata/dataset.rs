use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::split::LabelSplit;
use crate::error::{Error, Result};
use crate::ndcore::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Source,
    Target,
}

impl Domain {
    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Source => "source",
            Domain::Target => "target",
        }
    }
}

/// Features plus ground-truth labels for one domain.
///
/// Target labels are hidden from training: training code works on
/// [`Dataset::features`] and only evaluation or simulation code (oracle
/// weights, noise-rate logging) calls [`Dataset::hidden_labels`].
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<usize>,
    domain: Domain,
    split: LabelSplit,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Vec<usize>, domain: Domain, split: LabelSplit) -> Result<Self> {
        if labels.len() != features.rows() {
            return Err(Error::shape(
                "Dataset::new",
                format!("{} labels for {} rows", labels.len(), features.rows()),
            ));
        }
        let allowed = match domain {
            Domain::Source => split.source_labels(),
            Domain::Target => split.target_labels(),
        };
        if let Some(bad) = labels.iter().find(|l| !allowed.contains(l)) {
            return Err(Error::InvalidArgument(format!(
                "label {bad} is not in the {} label set",
                domain.as_str()
            )));
        }
        Ok(Self {
            features,
            labels,
            domain,
            split,
        })
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    /// Ground-truth labels. For the target domain these are for evaluation and simulation only.
    pub fn hidden_labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn split(&self) -> LabelSplit {
        self.split
    }

    pub fn common_set(&self) -> BTreeSet<usize> {
        self.split.common_set()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// Rows whose label satisfies `keep`.
    pub fn filter(&self, keep: impl Fn(usize) -> bool) -> Dataset {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep(self.labels[i])).collect();
        Dataset {
            features: self.features.select_rows(&idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            domain: self.domain,
            split: self.split,
        }
    }

    /// Mean feature vector of class `label`, if present.
    pub fn class_mean(&self, label: usize) -> Option<Vec<f64>> {
        let sub = self.filter(|l| l == label);
        (!sub.is_empty()).then(|| sub.features.col_means())
    }
}
