use crate::error::{Error, Result};
use crate::ndcore::{euclidean, Matrix};

/// Default number of steps between centroid refreshes.
pub const DEFAULT_UPDATE_INTERVAL: usize = 100;

/// Per-source-class feature centroids, refreshed every `update_interval` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidBank {
    centroids: Matrix,
    update_interval: usize,
    last_update: usize,
}

fn class_means(features: &Matrix, labels: &[usize], k: usize) -> Result<Vec<Option<Vec<f64>>>> {
    if features.rows() != labels.len() {
        return Err(Error::shape("centroids", "feature rows and labels differ"));
    }
    let mut sums = vec![vec![0.0; features.cols()]; k];
    let mut counts = vec![0usize; k];
    for (row, &y) in features.iter_rows().zip(labels) {
        if y >= k {
            return Err(Error::InvalidArgument(format!("label {y} ≥ class count {k}")));
        }
        counts[y] += 1;
        for (s, v) in sums[y].iter_mut().zip(row) {
            *s += v;
        }
    }
    Ok(sums
        .into_iter()
        .zip(counts)
        .map(|(s, c)| (c > 0).then(|| s.into_iter().map(|v| v / c as f64).collect()))
        .collect())
}

impl CentroidBank {
    pub fn new(centroids: Matrix, update_interval: usize, last_update: usize) -> Result<Self> {
        if centroids.rows() == 0 {
            return Err(Error::InvalidArgument("centroid bank is empty".into()));
        }
        if update_interval == 0 {
            return Err(Error::InvalidArgument("update interval must be ≥ 1".into()));
        }
        centroids.ensure_finite("centroids")?;
        Ok(Self {
            centroids,
            update_interval,
            last_update,
        })
    }

    /// Class means of a labelled feature batch. Every class in `0..num_classes` must occur.
    pub fn from_features(
        features: &Matrix,
        labels: &[usize],
        num_classes: usize,
        update_interval: usize,
        step: usize,
    ) -> Result<Self> {
        let means = class_means(features, labels, num_classes)?;
        let mut data = Vec::with_capacity(num_classes * features.cols());
        for (j, m) in means.into_iter().enumerate() {
            data.extend(m.ok_or_else(|| Error::InvalidArgument(format!("class {j} has no samples")))?);
        }
        Self::new(Matrix::new(num_classes, features.cols(), data)?, update_interval, step)
    }

    pub fn centroids(&self) -> &Matrix {
        &self.centroids
    }

    pub fn update_interval(&self) -> usize {
        self.update_interval
    }

    pub fn last_update(&self) -> usize {
        self.last_update
    }

    /// Replaces each centroid by its class mean in the batch once `update_interval`
    /// steps have passed; classes absent from the batch keep their centroid.
    /// Returns whether a refresh happened.
    pub fn update_centroids(&mut self, features: &Matrix, labels: &[usize], step: usize) -> Result<bool> {
        if step.saturating_sub(self.last_update) < self.update_interval {
            return Ok(false);
        }
        if features.cols() != self.centroids.cols() {
            return Err(Error::shape("update_centroids", "feature width differs from bank"));
        }
        for (j, m) in class_means(features, labels, self.centroids.rows())?.into_iter().enumerate() {
            if let Some(m) = m {
                self.centroids.row_mut(j).copy_from_slice(&m);
            }
        }
        self.last_update = step;
        Ok(true)
    }
}

/// Smallest Euclidean distance from `feature` to any centroid.
pub fn distance_uncertainty(feature: &[f64], bank: &CentroidBank) -> Result<f64> {
    if feature.len() != bank.centroids.cols() {
        return Err(Error::shape(
            "distance_uncertainty",
            format!("feature dim {} vs centroid dim {}", feature.len(), bank.centroids.cols()),
        ));
    }
    Ok(bank
        .centroids
        .iter_rows()
        .map(|c| euclidean(feature, c))
        .fold(f64::INFINITY, f64::min))
}
