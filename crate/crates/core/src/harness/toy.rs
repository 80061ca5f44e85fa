//! The toy direction-preservation study: a bias-free two-layer ReLU network
//! trained on source labels alone, or jointly with the perturbation-consistency
//! loss on target inputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{toy_ssl_loss, toy_sup_loss};
use crate::metrics::principal_direction;
use crate::ndcore::{derive_seed, streams, Matrix, SeededRng};
use crate::synthdata::{make_toy_dataset, rotation, Dataset, ToyConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyTrainConfig {
    pub hidden: usize,
    pub steps: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// Perturbation scale of the consistency loss.
    pub ssl_sigma: f64,
    /// Weight of the consistency loss in the joint arm.
    pub ssl_weight: f64,
    /// Initial weights are `N(0, init_scale²/fan_in)`.
    pub init_scale: f64,
}

impl Default for ToyTrainConfig {
    fn default() -> Self {
        Self {
            hidden: 16,
            steps: 2000,
            batch_size: 64,
            lr: 0.01,
            ssl_sigma: 0.5,
            ssl_weight: 1.0,
            init_scale: 0.1,
        }
    }
}

impl ToyTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.steps == 0 || self.batch_size == 0 {
            return Err(Error::Config("toy hidden, steps and batch_size must be ≥ 1".into()));
        }
        if !(self.lr > 0.0 && self.ssl_sigma > 0.0 && self.ssl_weight >= 0.0 && self.init_scale > 0.0) {
            return Err(Error::Config("toy lr and ssl_sigma must be > 0, ssl_weight ≥ 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToyArm {
    Supervised,
    SupervisedSsl,
}

impl ToyArm {
    pub fn as_str(self) -> &'static str {
        match self {
            ToyArm::Supervised => "sup",
            ToyArm::SupervisedSsl => "sup_ssl",
        }
    }
}

/// Trained first-layer and second-layer weights of one arm.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyModel {
    pub w1: Matrix,
    pub w2: Matrix,
}

impl ToyModel {
    pub fn features(&self, x: &Matrix) -> Result<Matrix> {
        Ok(x.matmul(&self.w1)?.map(|v| v.max(0.0)))
    }
}

/// One row of the feature dump.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyPoint {
    pub arm: Option<ToyArm>,
    pub domain: &'static str,
    pub label: usize,
    pub x: [f64; 2],
    /// Learned features projected on the image of the target direction and its in-plane complement.
    pub z: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyOutcome {
    pub seed: u64,
    pub spcr: f64,
    pub alignment_sup: f64,
    pub alignment_ssl: f64,
    pub points: Vec<ToyPoint>,
}

/// Ground-truth direction of the target common data: the rotated common centroid.
pub fn target_direction(cfg: &ToyConfig) -> [f64; 2] {
    let r = rotation(cfg.theta);
    let (a, b) = (cfg.tau, cfg.gamma);
    let n = a.hypot(b);
    [
        (r.get(0, 0) * a + r.get(0, 1) * b) / n,
        (r.get(1, 0) * a + r.get(1, 1) * b) / n,
    ]
}

fn one_hot(labels: &[usize], k: usize) -> Matrix {
    let mut y = Matrix::zeros(labels.len(), k);
    for (r, &l) in labels.iter().enumerate() {
        y.set(r, l, 1.0);
    }
    y
}

fn init_weights(rows: usize, cols: usize, scale: f64, rng: &mut SeededRng) -> Matrix {
    let s = scale / (rows as f64).sqrt();
    Matrix::new(rows, cols, (0..rows * cols).map(|_| s * rng.normal()).collect()).expect("finite")
}

fn sample_rows(n: usize, k: usize, rng: &mut SeededRng) -> Vec<usize> {
    (0..k).map(|_| rng.below(n)).collect()
}

/// Trains one arm. Both arms draw identical initial weights and batches for a given seed.
pub fn train_toy_arm(
    source: &Dataset,
    target: &Dataset,
    cfg: &ToyTrainConfig,
    arm: ToyArm,
    seed: u64,
) -> Result<ToyModel> {
    cfg.validate()?;
    let k = source.split().num_source_classes();
    let mut init = SeededRng::with_stream(seed, streams::INIT);
    let mut batches = SeededRng::with_stream(seed, streams::BATCH);
    let mut aug = SeededRng::with_stream(seed, streams::AUGMENT);
    let mut w1 = init_weights(2, cfg.hidden, cfg.init_scale, &mut init);
    let mut w2 = init_weights(cfg.hidden, k, cfg.init_scale, &mut init);
    let y_all = one_hot(source.hidden_labels(), k);

    for step in 0..cfg.steps {
        let idx = sample_rows(source.len(), cfg.batch_size, &mut batches);
        let tidx = sample_rows(target.len(), cfg.batch_size, &mut batches);
        let x = source.features().select_rows(&idx);
        let y = y_all.select_rows(&idx);
        let (ls, mut g) = toy_sup_loss(&w1, &w2, &x, &y)?;
        let mut lssl = 0.0;
        if arm == ToyArm::SupervisedSsl && cfg.ssl_weight > 0.0 {
            let xt = target.features().select_rows(&tidx);
            let (l, g1) = toy_ssl_loss(&w1, &xt, &mut aug, cfg.ssl_sigma)?;
            lssl = l;
            g.w1.add_assign(&g1.scale(cfg.ssl_weight))?;
        }
        if !(ls.is_finite() && lssl.is_finite()) {
            return Err(Error::NumericAbort {
                step,
                ls,
                ladv: 0.0,
                lssl,
            });
        }
        w1 = w1.sub(&g.w1.scale(cfg.lr))?;
        w2 = w2.sub(&g.w2.scale(cfg.lr))?;
    }
    Ok(ToyModel { w1, w2 })
}

/// `|cos|` between the top principal axis of the target features and the feature
/// image of the target data direction. Collapsed features score `0`.
pub fn toy_alignment(model: &ToyModel, target: &Dataset, direction: [f64; 2]) -> Result<f64> {
    let feats = model.features(target.features())?;
    let reference = model.features(&Matrix::row_vector(&direction)?)?;
    if reference.data().iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    match principal_direction(&feats) {
        Ok(pd) => pd.alignment(reference.data()),
        Err(Error::InvalidArgument(_)) => Ok(0.0),
        Err(e) => Err(e),
    }
}

fn project(model: &ToyModel, ds: &Dataset, direction: [f64; 2]) -> Result<Vec<[f64; 2]>> {
    let u = model.features(&Matrix::row_vector(&direction)?)?.into_data();
    let orth = [-direction[1], direction[0]];
    let mut v = model.features(&Matrix::row_vector(&orth)?)?.into_data();
    let nu = crate::ndcore::dot(&u, &u).sqrt();
    let u: Vec<f64> = if nu > 0.0 { u.iter().map(|a| a / nu).collect() } else { u };
    let c = crate::ndcore::dot(&u, &v);
    v.iter_mut().zip(&u).for_each(|(b, a)| *b -= c * a);
    let nv = crate::ndcore::dot(&v, &v).sqrt();
    if nv > 0.0 {
        v.iter_mut().for_each(|b| *b /= nv);
    }
    let f = model.features(ds.features())?;
    Ok(f.iter_rows()
        .map(|r| [crate::ndcore::dot(r, &u), crate::ndcore::dot(r, &v)])
        .collect())
}

/// Generates the toy data for `seed`, trains both arms and measures direction preservation.
pub fn run_toy_experiment(data: &ToyConfig, train: &ToyTrainConfig, seed: u64) -> Result<ToyOutcome> {
    let mut rng = SeededRng::with_stream(seed, streams::DATA);
    let (source, target) = make_toy_dataset(data, &mut rng)?;
    let dir = target_direction(data);
    let mut points = Vec::new();
    for ds in [&source, &target] {
        for (r, &l) in ds.features().iter_rows().zip(ds.hidden_labels()) {
            points.push(ToyPoint {
                arm: None,
                domain: ds.domain().as_str(),
                label: l,
                x: [r[0], r[1]],
                z: [r[0], r[1]],
            });
        }
    }
    let mut align = [0.0; 2];
    for (i, arm) in [ToyArm::Supervised, ToyArm::SupervisedSsl].into_iter().enumerate() {
        let model = train_toy_arm(&source, &target, train, arm, seed)?;
        align[i] = toy_alignment(&model, &target, dir)?;
        for ds in [&source, &target] {
            let z = project(&model, ds, dir)?;
            for ((r, &l), z) in ds.features().iter_rows().zip(ds.hidden_labels()).zip(z) {
                points.push(ToyPoint {
                    arm: Some(arm),
                    domain: ds.domain().as_str(),
                    label: l,
                    x: [r[0], r[1]],
                    z,
                });
            }
        }
    }
    Ok(ToyOutcome {
        seed,
        spcr: data.split.spcr(),
        alignment_sup: align[0],
        alignment_ssl: align[1],
        points,
    })
}

/// Runs [`run_toy_experiment`] for `seeds` replicates with seeds derived from `master`.
pub fn run_toy_seeds(data: &ToyConfig, train: &ToyTrainConfig, master: u64, seeds: usize) -> Result<Vec<ToyOutcome>> {
    (0..seeds as u64)
        .map(|i| run_toy_experiment(data, train, derive_seed(master, i)))
        .collect()
}
