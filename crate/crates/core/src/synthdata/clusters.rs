//! Multi-class Gaussian-cluster generator for arbitrary label splits.

use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Domain};
use super::split::LabelSplit;
use crate::error::{Error, Result};
use crate::ndcore::{dot, euclidean, Matrix, SeededRng};

const MAX_PLACEMENT_TRIES: usize = 10_000;

/// Domain shift applied to target common classes: a rotation by `rotation`
/// radians inside a random 2D subspace (about the origin), then a translation
/// of length `translation` along a random direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftSpec {
    pub rotation: f64,
    pub translation: f64,
}

impl ShiftSpec {
    pub const NONE: ShiftSpec = ShiftSpec {
        rotation: 0.0,
        translation: 0.0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub split: LabelSplit,
    pub dim: usize,
    /// Minimum pairwise distance between class means.
    pub separation: f64,
    /// Class means are drawn from `N(0, mean_spread²·I)` before the separation check.
    pub mean_spread: f64,
    /// Isotropic within-class standard deviation.
    pub cluster_sigma: f64,
    pub samples_per_class: usize,
    pub shift: ShiftSpec,
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<()> {
        self.split.validate()?;
        if self.dim < 2 {
            return Err(Error::InvalidArgument("dim must be ≥ 2".into()));
        }
        if !(self.separation > 0.0) {
            return Err(Error::InvalidArgument("separation must be > 0".into()));
        }
        if !(self.cluster_sigma > 0.0 && self.mean_spread > 0.0) {
            return Err(Error::InvalidArgument("cluster_sigma and mean_spread must be > 0".into()));
        }
        if self.samples_per_class == 0 {
            return Err(Error::InvalidArgument("samples_per_class must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Ground-truth geometry behind a generated pair of domains.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterGeometry {
    /// Source-domain mean of every class id (target-private classes included).
    pub means: Vec<Vec<f64>>,
    /// Orthonormal pair spanning the rotation plane.
    pub plane: (Vec<f64>, Vec<f64>),
    pub translation: Vec<f64>,
}

impl ClusterGeometry {
    /// Applies the domain shift to a point.
    pub fn shift(&self, x: &[f64], spec: &ShiftSpec) -> Vec<f64> {
        let (u, v) = &self.plane;
        let (a, b) = (dot(u, x), dot(v, x));
        let (s, c) = spec.rotation.sin_cos();
        let (ra, rb) = (a * c - b * s, a * s + b * c);
        x.iter()
            .zip(u.iter().zip(v))
            .zip(&self.translation)
            .map(|((&xi, (&ui, &vi)), &ti)| xi + (ra - a) * ui + (rb - b) * vi + ti)
            .collect()
    }
}

fn gaussian_vec(dim: usize, scale: f64, rng: &mut SeededRng) -> Vec<f64> {
    (0..dim).map(|_| scale * rng.normal()).collect()
}

fn unit_vec(dim: usize, rng: &mut SeededRng) -> Vec<f64> {
    loop {
        let v = gaussian_vec(dim, 1.0, rng);
        let n = dot(&v, &v).sqrt();
        if n > 1e-8 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn place_means(cfg: &ClusterConfig, rng: &mut SeededRng) -> Result<Vec<Vec<f64>>> {
    let k = cfg.split.num_classes();
    let mut means: Vec<Vec<f64>> = Vec::with_capacity(k);
    for class in 0..k {
        let mut placed = false;
        for _ in 0..MAX_PLACEMENT_TRIES {
            let m = gaussian_vec(cfg.dim, cfg.mean_spread, rng);
            if means.iter().all(|o| euclidean(o, &m) >= cfg.separation) {
                means.push(m);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::InvalidArgument(format!(
                "could not place class {class} at separation {} after {MAX_PLACEMENT_TRIES} tries \
                 (dim {}, mean_spread {}); increase mean_spread or lower separation",
                cfg.separation, cfg.dim, cfg.mean_spread
            )));
        }
    }
    Ok(means)
}

/// Generates source and target Gaussian-cluster domains for `cfg.split`.
///
/// Target common classes are the source clusters moved by `cfg.shift`;
/// source-private and target-private clusters are placed independently.
pub fn make_unida_dataset(cfg: &ClusterConfig, rng: &mut SeededRng) -> Result<(Dataset, Dataset, ClusterGeometry)> {
    cfg.validate()?;
    let means = place_means(cfg, rng)?;

    let u = unit_vec(cfg.dim, rng);
    let mut v = unit_vec(cfg.dim, rng);
    loop {
        let p = dot(&u, &v);
        let w: Vec<f64> = v.iter().zip(&u).map(|(vi, ui)| vi - p * ui).collect();
        let n = dot(&w, &w).sqrt();
        if n > 1e-6 {
            v = w.into_iter().map(|x| x / n).collect();
            break;
        }
        v = unit_vec(cfg.dim, rng);
    }
    let dir = unit_vec(cfg.dim, rng);
    let geometry = ClusterGeometry {
        means,
        plane: (u, v),
        translation: dir.iter().map(|d| d * cfg.shift.translation).collect(),
    };

    let split = cfg.split;
    let n = cfg.samples_per_class;
    let sample = |mean: &[f64], rng: &mut SeededRng| -> Vec<f64> {
        mean.iter().map(|m| m + cfg.cluster_sigma * rng.normal()).collect()
    };

    let mut src = Vec::with_capacity(split.num_source_classes() * n * cfg.dim);
    let mut src_labels = Vec::with_capacity(split.num_source_classes() * n);
    for class in split.source_labels() {
        for _ in 0..n {
            src.extend(sample(&geometry.means[class], rng));
            src_labels.push(class);
        }
    }

    let mut tgt = Vec::with_capacity(split.num_target_classes() * n * cfg.dim);
    let mut tgt_labels = Vec::with_capacity(split.num_target_classes() * n);
    for class in split.target_labels() {
        for _ in 0..n {
            let x = sample(&geometry.means[class], rng);
            if split.is_common(class) {
                tgt.extend(geometry.shift(&x, &cfg.shift));
            } else {
                tgt.extend(x);
            }
            tgt_labels.push(class);
        }
    }

    let source = Dataset::new(Matrix::new(src_labels.len(), cfg.dim, src)?, src_labels, Domain::Source, split)?;
    let target = Dataset::new(Matrix::new(tgt_labels.len(), cfg.dim, tgt)?, tgt_labels, Domain::Target, split)?;
    Ok((source, target, geometry))
}
