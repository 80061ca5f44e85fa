//! Flat TOML experiment configuration. Every key is optional; unknown keys are errors.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::toy::ToyTrainConfig;
use crate::error::{Error, Result};
use crate::losses::{LossWeights, ModelDims, SslConfig, SslVariant};
use crate::metrics::{RejectionKind, RejectionRule};
use crate::synthdata::{AugmentConfig, ClusterConfig, LabelSplit, ShiftSpec, ToyConfig};
use crate::weighting::{Normalization, UncertaintyKind, WeightConfig, DEFAULT_UPDATE_INTERVAL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Clusters,
    Toy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightingMode {
    /// Ground-truth 0/1 weights with optional flip noise.
    Oracle,
    /// Weights from classifier uncertainty.
    Learned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SslTarget {
    All,
    /// Restrict the SSL term to target-common rows using hidden labels (ablation only).
    CommonOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub steps: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub momentum: f64,
    pub lambda: f64,
    pub alpha: f64,

    pub dataset: DatasetKind,
    pub dim: usize,
    pub n_common: usize,
    pub n_source_private: usize,
    pub n_target_private: usize,
    pub separation: f64,
    pub mean_spread: f64,
    pub cluster_sigma: f64,
    pub samples_per_class: usize,
    pub shift_rotation: f64,
    pub shift_translation: f64,

    pub toy_tau: f64,
    pub toy_gamma: f64,
    /// Defaults to the angle that rotates the common centroid onto `e1`.
    pub toy_theta: Option<f64>,
    pub toy_noise_sigma: f64,
    pub toy_radial_spread: f64,
    pub toy_samples_per_class: usize,
    pub toy_source_private: Vec<usize>,
    pub toy_hidden: usize,
    pub toy_steps: usize,
    pub toy_batch_size: usize,
    pub toy_lr: f64,
    pub toy_ssl_sigma: f64,
    pub toy_ssl_weight: f64,
    pub toy_init_scale: f64,

    pub feature_widths: Vec<usize>,
    pub disc_hidden: usize,

    pub weighting: WeightingMode,
    pub uncertainty: UncertaintyKind,
    pub normalization: Normalization,
    pub weight_threshold: f64,
    pub centroid_interval: usize,
    pub flip_rate: f64,
    /// Also log the noise rate every uncertainty kind would have produced.
    pub track_uncertainty_noise: bool,

    pub ssl_variant: SslVariant,
    pub ssl_sigma: f64,
    pub ssl_scale_jitter: Option<[f64; 2]>,
    pub ssl_target: SslTarget,

    pub rejection: RejectionKind,
    /// Defaults to `0.5·ln|C_s|` for the entropy rule and `0.5` for the confidence rule.
    pub rejection_threshold: Option<f64>,

    pub seeds: usize,
    pub spcr_values: Vec<f64>,
    pub flip_rates: Vec<f64>,
    pub alpha_values: Vec<f64>,
    /// Approximate source class count used to realise each SPCR in sweeps.
    pub sweep_source_classes: usize,
    /// Target-private class counts for the SSL ablation.
    pub target_private_values: Vec<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let toy = ToyConfig::with_source_private(4);
        let toy_train = ToyTrainConfig::default();
        Self {
            seed: 0,
            steps: 2000,
            batch_size: 32,
            lr: 0.01,
            momentum: 0.9,
            lambda: 0.5,
            alpha: 0.5,

            dataset: DatasetKind::Clusters,
            dim: 16,
            n_common: 5,
            n_source_private: 10,
            n_target_private: 5,
            separation: 3.0,
            mean_spread: 1.0,
            cluster_sigma: 1.0,
            samples_per_class: 200,
            shift_rotation: 1.0,
            shift_translation: 2.5,

            toy_tau: toy.tau,
            toy_gamma: toy.gamma,
            toy_theta: None,
            toy_noise_sigma: toy.noise_sigma,
            toy_radial_spread: toy.radial_spread,
            toy_samples_per_class: toy.samples_per_class,
            toy_source_private: vec![4, 0],
            toy_hidden: toy_train.hidden,
            toy_steps: toy_train.steps,
            toy_batch_size: toy_train.batch_size,
            toy_lr: toy_train.lr,
            toy_ssl_sigma: toy_train.ssl_sigma,
            toy_ssl_weight: toy_train.ssl_weight,
            toy_init_scale: toy_train.init_scale,

            feature_widths: vec![32, 16],
            disc_hidden: 16,

            weighting: WeightingMode::Learned,
            uncertainty: UncertaintyKind::Entropy,
            normalization: Normalization::ClosedForm,
            weight_threshold: 0.5,
            centroid_interval: DEFAULT_UPDATE_INTERVAL,
            flip_rate: 0.0,
            track_uncertainty_noise: false,

            ssl_variant: SslVariant::StopGradOneBranch,
            ssl_sigma: 0.2,
            ssl_scale_jitter: None,
            ssl_target: SslTarget::All,

            rejection: RejectionKind::EntropyThreshold,
            rejection_threshold: None,

            seeds: 5,
            spcr_values: vec![0.2, 1.0 / 3.0, 1.0, 3.0, 5.0],
            flip_rates: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
            alpha_values: vec![0.0, 0.3, 0.5, 0.7],
            sweep_source_classes: 18,
            target_private_values: vec![1, 3, 5, 10],
        }
    }
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| cfg_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| cfg_err(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.batch_size == 0 {
            return Err(cfg_err("steps and batch_size must be ≥ 1"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) || !(0.0..1.0).contains(&self.momentum) {
            return Err(cfg_err("lr must be > 0 and momentum in [0, 1)"));
        }
        LossWeights::new(self.lambda, self.alpha).map_err(|e| cfg_err(e.to_string()))?;
        if self.feature_widths.is_empty() || self.feature_widths.contains(&0) || self.disc_hidden == 0 {
            return Err(cfg_err("network widths must be nonempty and ≥ 1"));
        }
        if !(0.0..=1.0).contains(&self.flip_rate) {
            return Err(cfg_err("flip_rate must lie in [0, 1]"));
        }
        if self.centroid_interval == 0 {
            return Err(cfg_err("centroid_interval must be ≥ 1"));
        }
        if self.seeds == 0 {
            return Err(cfg_err("seeds must be ≥ 1"));
        }
        self.weight_config().validate()?;
        self.ssl_config().augment.validate().map_err(|e| cfg_err(e.to_string()))?;
        match self.dataset {
            DatasetKind::Clusters => self.cluster_config()?.validate().map_err(|e| cfg_err(e.to_string()))?,
            DatasetKind::Toy => self.toy_config(self.n_source_private)?.validate().map_err(|e| cfg_err(e.to_string()))?,
        }
        self.toy_train_config().validate()?;
        self.rejection_rule(self.label_split()?.num_source_classes())?;
        if self.alpha_values.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(cfg_err("alpha_values must lie in [0, 1]"));
        }
        if self.flip_rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(cfg_err("flip_rates must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Fails when a sweep axis needed by an experiment is empty.
    pub fn require_axis(&self, name: &str, len: usize) -> Result<()> {
        if len == 0 {
            return Err(cfg_err(format!("sweep axis `{name}` is empty")));
        }
        Ok(())
    }

    pub fn label_split(&self) -> Result<LabelSplit> {
        let split = match self.dataset {
            DatasetKind::Toy => LabelSplit::new(self.n_source_private, 1, 0),
            DatasetKind::Clusters => LabelSplit::new(self.n_source_private, self.n_common, self.n_target_private),
        };
        split.map_err(|e| cfg_err(e.to_string()))
    }

    pub fn cluster_config(&self) -> Result<ClusterConfig> {
        Ok(ClusterConfig {
            split: self.label_split()?,
            dim: self.dim,
            separation: self.separation,
            mean_spread: self.mean_spread,
            cluster_sigma: self.cluster_sigma,
            samples_per_class: self.samples_per_class,
            shift: ShiftSpec {
                rotation: self.shift_rotation,
                translation: self.shift_translation,
            },
        })
    }

    /// Toy data with one common class and `n_source_private` source-private classes.
    pub fn toy_config(&self, n_source_private: usize) -> Result<ToyConfig> {
        let mut toy = ToyConfig::with_source_private(n_source_private);
        toy.tau = self.toy_tau;
        toy.gamma = self.toy_gamma;
        toy.theta = self.toy_theta.unwrap_or(-self.toy_gamma.atan2(self.toy_tau));
        toy.noise_sigma = self.toy_noise_sigma;
        toy.radial_spread = self.toy_radial_spread;
        toy.samples_per_class = self.toy_samples_per_class;
        Ok(toy)
    }

    pub fn toy_train_config(&self) -> ToyTrainConfig {
        ToyTrainConfig {
            hidden: self.toy_hidden,
            steps: self.toy_steps,
            batch_size: self.toy_batch_size,
            lr: self.toy_lr,
            ssl_sigma: self.toy_ssl_sigma,
            ssl_weight: self.toy_ssl_weight,
            init_scale: self.toy_init_scale,
        }
    }

    pub fn loss_weights(&self) -> LossWeights {
        LossWeights {
            lambda: self.lambda,
            alpha: self.alpha,
        }
    }

    pub fn weight_config(&self) -> WeightConfig {
        WeightConfig {
            kind: self.uncertainty,
            normalization: self.normalization,
            threshold: self.weight_threshold,
        }
    }

    pub fn ssl_config(&self) -> SslConfig {
        SslConfig {
            variant: self.ssl_variant,
            augment: AugmentConfig {
                sigma_aug: self.ssl_sigma,
                scale_jitter: self.ssl_scale_jitter.map(|[a, b]| (a, b)),
            },
        }
    }

    pub fn model_dims(&self, input: usize, classes: usize) -> ModelDims {
        ModelDims {
            input,
            feature: self.feature_widths.clone(),
            classes,
            disc_hidden: self.disc_hidden,
        }
    }

    pub fn rejection_rule(&self, num_source_classes: usize) -> Result<RejectionRule> {
        let threshold = match (self.rejection_threshold, self.rejection) {
            (Some(t), _) => t,
            (None, RejectionKind::EntropyThreshold) => RejectionRule::default_for(num_source_classes).threshold,
            (None, RejectionKind::ConfidenceThreshold) => 0.5,
        };
        let rule = RejectionRule {
            kind: self.rejection,
            threshold,
        };
        if num_source_classes > 1 {
            rule.validate(num_source_classes)?;
        }
        Ok(rule)
    }

    /// SHA-256 over the canonical TOML form with the seed zeroed, as 16 hex digits.
    pub fn config_hash(&self) -> String {
        let mut c = self.clone();
        c.seed = 0;
        let digest = Sha256::digest(c.to_toml_string().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
