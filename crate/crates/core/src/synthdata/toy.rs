//! The 2D toy problem: class clusters along rays in the positive quadrant,
//! with the target common class rotated onto the `e1` axis.

use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Domain};
use super::split::LabelSplit;
use crate::error::{Error, Result};
use crate::ndcore::{Matrix, SeededRng};

/// Toy generator settings.
///
/// A class with centroid `μ` draws `x = (1 + radial_spread·z)·μ + noise_sigma·ε`
/// with `z ~ N(0, 1)` and `ε ~ N(0, I)`, so each cluster is stretched along its
/// own ray. Target common-class samples are `R(theta)·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyConfig {
    pub tau: f64,
    pub gamma: f64,
    pub theta: f64,
    pub noise_sigma: f64,
    pub radial_spread: f64,
    pub samples_per_class: usize,
    pub split: LabelSplit,
}

impl ToyConfig {
    /// Defaults with the requested number of source-private classes and one common class.
    pub fn with_source_private(n_source_private: usize) -> Self {
        let (tau, gamma) = (3.0, 3.0);
        Self {
            tau,
            gamma,
            theta: -f64::atan2(gamma, tau),
            noise_sigma: 0.5,
            radial_spread: 0.2,
            samples_per_class: 200,
            split: LabelSplit {
                n_source_private,
                n_common: 1,
                n_target_private: 0,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.split.validate()?;
        if self.split.n_target_private != 0 {
            return Err(Error::InvalidArgument(
                "the toy problem has no target-private classes".into(),
            ));
        }
        if !(self.noise_sigma > 0.0) {
            return Err(Error::InvalidArgument("noise_sigma must be > 0".into()));
        }
        if self.radial_spread < 0.0 {
            return Err(Error::InvalidArgument("radial_spread must be ≥ 0".into()));
        }
        if !(self.tau > 0.0 && self.gamma > 0.0) {
            return Err(Error::InvalidArgument("tau and gamma must be > 0".into()));
        }
        if self.samples_per_class == 0 {
            return Err(Error::InvalidArgument("samples_per_class must be ≥ 1".into()));
        }
        Ok(())
    }

    /// Source class centroids, indexed by class id.
    ///
    /// All source classes sit on the circle of radius `‖(τ, γ)‖` at angles evenly
    /// spaced in (0°, 90°). Common classes take the slots nearest the angle of
    /// `(τ, γ)`, and the first common class sits exactly at `τ·e1 + γ·e2`.
    pub fn centroids(&self) -> Vec<[f64; 2]> {
        let k = self.split.num_source_classes();
        let radius = self.tau.hypot(self.gamma);
        let home = self.gamma.atan2(self.tau);
        let slots: Vec<f64> = (0..k)
            .map(|i| std::f64::consts::FRAC_PI_2 * (i + 1) as f64 / (k + 1) as f64)
            .collect();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| {
            (slots[a] - home)
                .abs()
                .total_cmp(&(slots[b] - home).abs())
                .then(a.cmp(&b))
        });
        let mut common_slots: Vec<usize> = order[..self.split.n_common].to_vec();
        let mut private_slots: Vec<usize> = order[self.split.n_common..].to_vec();
        common_slots.sort_unstable();
        private_slots.sort_unstable();
        let at = |angle: f64| [radius * angle.cos(), radius * angle.sin()];
        let mut out = Vec::with_capacity(k);
        for (i, &s) in common_slots.iter().enumerate() {
            out.push(if i == 0 { [self.tau, self.gamma] } else { at(slots[s]) });
        }
        // keep the exact common centroid first, followed by other common classes in slot order
        out.extend(private_slots.iter().map(|&s| at(slots[s])));
        out
    }
}

/// `[[cos θ, −sin θ], [sin θ, cos θ]]`.
pub fn rotation(theta: f64) -> Matrix {
    let (s, c) = theta.sin_cos();
    Matrix::new(2, 2, vec![c, -s, s, c]).expect("finite")
}

fn draw(centroid: [f64; 2], cfg: &ToyConfig, rng: &mut SeededRng) -> [f64; 2] {
    let scale = 1.0 + cfg.radial_spread * rng.normal();
    [
        scale * centroid[0] + cfg.noise_sigma * rng.normal(),
        scale * centroid[1] + cfg.noise_sigma * rng.normal(),
    ]
}

/// Draws the toy source and target sets. Target rows carry their (hidden) common-class labels.
pub fn make_toy_dataset(cfg: &ToyConfig, rng: &mut SeededRng) -> Result<(Dataset, Dataset)> {
    cfg.validate()?;
    let centroids = cfg.centroids();
    let n = cfg.samples_per_class;

    let mut src = Vec::with_capacity(centroids.len() * n * 2);
    let mut src_labels = Vec::with_capacity(centroids.len() * n);
    for (label, &c) in centroids.iter().enumerate() {
        for _ in 0..n {
            src.extend_from_slice(&draw(c, cfg, rng));
            src_labels.push(label);
        }
    }

    let rot = rotation(cfg.theta);
    let mut tgt = Vec::with_capacity(cfg.split.n_common * n * 2);
    let mut tgt_labels = Vec::with_capacity(cfg.split.n_common * n);
    for (label, &c) in centroids.iter().enumerate().take(cfg.split.n_common) {
        for _ in 0..n {
            let x = draw(c, cfg, rng);
            tgt.push(rot.get(0, 0) * x[0] + rot.get(0, 1) * x[1]);
            tgt.push(rot.get(1, 0) * x[0] + rot.get(1, 1) * x[1]);
            tgt_labels.push(label);
        }
    }

    let source = Dataset::new(Matrix::new(src_labels.len(), 2, src)?, src_labels, Domain::Source, cfg.split)?;
    let target = Dataset::new(Matrix::new(tgt_labels.len(), 2, tgt)?, tgt_labels, Domain::Target, cfg.split)?;
    Ok((source, target))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn apply(r: &Matrix, v: [f64; 2]) -> [f64; 2] {
        [r.get(0, 0) * v[0] + r.get(0, 1) * v[1], r.get(1, 0) * v[0] + r.get(1, 1) * v[1]]
    }

    #[test]
    fn rotation_examples() {
        assert_eq!(rotation(0.0), Matrix::identity(2));
        let q = apply(&rotation(std::f64::consts::FRAC_PI_2), [1.0, 0.0]);
        assert!(q[0].abs() < 1e-15 && (q[1] - 1.0).abs() < 1e-15);
        for th in [0.3, -1.2, 2.9] {
            let prod = rotation(th).matmul(&rotation(-th)).unwrap();
            for (a, b) in prod.data().iter().zip(Matrix::identity(2).data()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fig2_layout_has_five_source_classes_one_target() {
        let cfg = ToyConfig::with_source_private(4);
        assert_eq!(cfg.split.spcr(), 4.0);
        let (s, t) = make_toy_dataset(&cfg, &mut SeededRng::new(1)).unwrap();
        let src_classes: std::collections::BTreeSet<_> = s.hidden_labels().iter().copied().collect();
        let tgt_classes: std::collections::BTreeSet<_> = t.hidden_labels().iter().copied().collect();
        assert_eq!(src_classes.len(), 5);
        assert_eq!(tgt_classes.len(), 1);
        assert_eq!(cfg.centroids()[0], [3.0, 3.0]);
    }

    #[test]
    fn centroids_are_distinct_and_in_quadrant() {
        for sp in 0..8 {
            let cs = ToyConfig::with_source_private(sp).centroids();
            assert_eq!(cs.len(), sp + 1);
            for (i, a) in cs.iter().enumerate() {
                assert!(a[0] > 0.0 && a[1] > 0.0);
                for b in &cs[i + 1..] {
                    assert!((a[0] - b[0]).hypot(a[1] - b[1]) > 0.1);
                }
            }
        }
    }

    #[test]
    fn noiseless_target_lands_on_rotated_centroid() {
        let mut cfg = ToyConfig::with_source_private(0);
        cfg.noise_sigma = 1e-9;
        cfg.radial_spread = 0.0;
        cfg.samples_per_class = 3;
        let (_, t) = make_toy_dataset(&cfg, &mut SeededRng::new(3)).unwrap();
        let expect = apply(&rotation(cfg.theta), [cfg.tau, cfg.gamma]);
        for r in t.features().iter_rows() {
            assert!((r[0] - expect[0]).abs() < 1e-7 && (r[1] - expect[1]).abs() < 1e-7);
        }
        assert!(expect[1].abs() < 1e-12, "default theta rotates the common centroid onto e1");
    }

    #[test]
    fn rejects_target_private_and_bad_noise() {
        let mut cfg = ToyConfig::with_source_private(1);
        cfg.split.n_target_private = 1;
        assert!(make_toy_dataset(&cfg, &mut SeededRng::new(0)).is_err());
        let mut cfg = ToyConfig::with_source_private(1);
        cfg.noise_sigma = 0.0;
        assert!(cfg.validate().is_err());
    }
}
