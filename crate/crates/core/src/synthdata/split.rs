use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Label-set layout of a scenario: source-private, common and target-private class counts.
///
/// Class ids are assigned in blocks: `0..c` common, `c..c+sp` source-private,
/// `c+sp..c+sp+tp` target-private. Source classes are therefore always
/// `0..c+sp` and index the classifier's outputs directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelSplit {
    pub n_source_private: usize,
    pub n_common: usize,
    pub n_target_private: usize,
}

impl LabelSplit {
    pub fn new(n_source_private: usize, n_common: usize, n_target_private: usize) -> Result<Self> {
        let s = Self {
            n_source_private,
            n_common,
            n_target_private,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_common == 0 {
            return Err(Error::InvalidArgument("a split needs at least one common class".into()));
        }
        Ok(())
    }

    /// Realises `ratio` as `n_source_private / n_common` with small integers, scaling the pair
    /// so that the number of source classes is as close as possible to `source_classes`.
    ///
    /// The ratio must be a fraction `p/q` with `q ≤ 12` (within 1e-9).
    pub fn for_spcr(ratio: f64, source_classes: usize, n_target_private: usize) -> Result<Self> {
        if !(ratio >= 0.0 && ratio.is_finite()) {
            return Err(Error::InvalidArgument(format!("SPCR must be a finite nonnegative number, got {ratio}")));
        }
        let (p, q) = (1..=12usize)
            .find_map(|q| {
                let p = (ratio * q as f64).round();
                ((p - ratio * q as f64).abs() < 1e-9).then_some((p as usize, q))
            })
            .ok_or_else(|| {
                Error::InvalidArgument(format!("SPCR {ratio} is not a fraction with denominator ≤ 12"))
            })?;
        let unit = p + q;
        let k = ((source_classes as f64 / unit as f64).round() as usize).max(1);
        Self::new(k * p, k * q, n_target_private)
    }

    /// Source-private to source-common ratio `|C̄_s| / |C|`.
    pub fn spcr(&self) -> f64 {
        self.n_source_private as f64 / self.n_common as f64
    }

    pub fn num_source_classes(&self) -> usize {
        self.n_common + self.n_source_private
    }

    pub fn num_target_classes(&self) -> usize {
        self.n_common + self.n_target_private
    }

    pub fn num_classes(&self) -> usize {
        self.n_common + self.n_source_private + self.n_target_private
    }

    pub fn is_common(&self, label: usize) -> bool {
        label < self.n_common
    }

    pub fn is_source_private(&self, label: usize) -> bool {
        (self.n_common..self.num_source_classes()).contains(&label)
    }

    pub fn is_target_private(&self, label: usize) -> bool {
        (self.num_source_classes()..self.num_classes()).contains(&label)
    }

    pub fn source_labels(&self) -> BTreeSet<usize> {
        (0..self.num_source_classes()).collect()
    }

    pub fn target_labels(&self) -> BTreeSet<usize> {
        (0..self.n_common)
            .chain(self.num_source_classes()..self.num_classes())
            .collect()
    }

    pub fn common_set(&self) -> BTreeSet<usize> {
        (0..self.n_common).collect()
    }

    /// Infers the split from observed source and target label sets, checking the block layout.
    pub fn infer(source: &BTreeSet<usize>, target: &BTreeSet<usize>) -> Result<Self> {
        let common: BTreeSet<usize> = source.intersection(target).copied().collect();
        let split = Self::new(
            source.len() - common.len(),
            common.len(),
            target.len() - common.len(),
        )?;
        if split.source_labels() != *source || split.target_labels() != *target {
            return Err(Error::Schema(
                "labels do not follow the common / source-private / target-private id blocks".into(),
            ));
        }
        Ok(split)
    }
}

/// `n_source_private / n_common`.
pub fn spcr(split: &LabelSplit) -> f64 {
    split.spcr()
}
