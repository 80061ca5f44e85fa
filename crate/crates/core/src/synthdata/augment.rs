use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ndcore::{Matrix, SeededRng};

/// Additive-Gaussian augmentation with optional multiplicative jitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub sigma_aug: f64,
    /// When set, each view is scaled by a factor drawn uniformly from `[lo, hi]`.
    pub scale_jitter: Option<(f64, f64)>,
}

impl AugmentConfig {
    pub fn gaussian(sigma_aug: f64) -> Self {
        Self {
            sigma_aug,
            scale_jitter: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_aug > 0.0 && self.sigma_aug.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sigma_aug must be > 0, got {}",
                self.sigma_aug
            )));
        }
        if let Some((lo, hi)) = self.scale_jitter {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::InvalidArgument(format!("bad scale jitter range [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

/// One random view of `x`: `s·x + ε`, `ε ~ N(0, sigma_aug²·I)`, `s = 1` unless jitter is set.
pub fn augment(x: &[f64], cfg: &AugmentConfig, rng: &mut SeededRng) -> Vec<f64> {
    let s = match cfg.scale_jitter {
        Some((lo, hi)) => rng.uniform_range(lo, hi),
        None => 1.0,
    };
    x.iter().map(|v| s * v + cfg.sigma_aug * rng.normal()).collect()
}

/// Row-wise [`augment`].
pub fn augment_rows(x: &Matrix, cfg: &AugmentConfig, rng: &mut SeededRng) -> Matrix {
    let mut data = Vec::with_capacity(x.data().len());
    for r in x.iter_rows() {
        data.extend(augment(r, cfg, rng));
    }
    Matrix::new(x.rows(), x.cols(), data).expect("finite inputs give finite views")
}
