use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SIMPLEX_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UncertaintyKind {
    Entropy,
    Confidence,
    Energy,
    Distance,
}

impl UncertaintyKind {
    pub const ALL: [UncertaintyKind; 4] = [Self::Entropy, Self::Confidence, Self::Energy, Self::Distance];

    /// Whether a smaller raw score means the sample looks more like a common-class sample.
    pub fn lower_is_common(self) -> bool {
        !matches!(self, Self::Confidence)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Entropy => "entropy",
            Self::Confidence => "confidence",
            Self::Energy => "energy",
            Self::Distance => "distance",
        }
    }
}

fn check_simplex(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidArgument("empty probability vector".into()));
    }
    if p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidArgument("probabilities must be finite and ≥ 0".into()));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::InvalidArgument(format!("probabilities sum to {s}, not 1")));
    }
    Ok(())
}

/// Shannon entropy in nats, with `0·log 0 = 0`.
pub fn entropy(p: &[f64]) -> Result<f64> {
    check_simplex(p)?;
    Ok(-p.iter().filter(|&&v| v > 0.0).map(|v| v * v.ln()).sum::<f64>())
}

/// Probability of the most likely class.
pub fn confidence(p: &[f64]) -> Result<f64> {
    check_simplex(p)?;
    Ok(p.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// `−log Σ exp(p_i)`, taken over probabilities rather than logits.
pub fn energy(p: &[f64]) -> Result<f64> {
    check_simplex(p)?;
    Ok(-p.iter().map(|v| v.exp()).sum::<f64>().ln())
}

/// Range of [`energy`] over the `k`-simplex: `(one-hot value, uniform value)`.
pub fn energy_bounds(k: usize) -> (f64, f64) {
    let k = k as f64;
    (-(std::f64::consts::E + k - 1.0).ln(), -(k.ln() + 1.0 / k))
}
