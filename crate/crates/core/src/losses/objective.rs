//! The unified training objective `L_s − λ·L_adv + α·L_ssl` with gradient reversal.

use serde::{Deserialize, Serialize};

use super::basic::{adv_alignment_loss, source_ce_loss, ssl_loss, SslVariant};
use crate::error::{Error, Result};
use crate::ndcore::{
    grad_reverse, mlp_backward, mlp_forward, Activation, GradBundle, Matrix, MlpParams, SeededRng,
};
use crate::synthdata::{augment_rows, AugmentConfig};

/// `λ` weights the adversarial term, `α` the SSL term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub lambda: f64,
    pub alpha: f64,
}

impl LossWeights {
    pub fn new(lambda: f64, alpha: f64) -> Result<Self> {
        if !(lambda >= 0.0 && alpha >= 0.0 && lambda.is_finite() && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "loss weights must be finite and ≥ 0 (lambda {lambda}, alpha {alpha})"
            )));
        }
        Ok(Self { lambda, alpha })
    }
}

/// Paired source/target minibatch with per-row alignment weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedBatch {
    pub source_x: Matrix,
    pub source_y: Vec<usize>,
    pub target_x: Matrix,
    pub w_source: Vec<f64>,
    pub w_target: Vec<f64>,
    /// Target rows that enter the SSL term; `None` means all of them.
    pub ssl_rows: Option<Vec<usize>>,
}

impl WeightedBatch {
    pub fn validate(&self) -> Result<()> {
        if self.source_y.len() != self.source_x.rows() || self.w_source.len() != self.source_x.rows() {
            return Err(Error::shape("WeightedBatch", "source labels/weights do not match rows"));
        }
        if self.w_target.len() != self.target_x.rows() {
            return Err(Error::shape("WeightedBatch", "target weights do not match rows"));
        }
        if let Some(bad) = self.w_source.iter().chain(&self.w_target).find(|w| !(0.0..=1.0).contains(*w)) {
            return Err(Error::InvalidArgument(format!("alignment weight {bad} outside [0, 1]")));
        }
        if let Some(rows) = &self.ssl_rows {
            if rows.iter().any(|&r| r >= self.target_x.rows()) {
                return Err(Error::shape("WeightedBatch", "SSL row index out of range"));
            }
        }
        Ok(())
    }

    fn ssl_input(&self) -> Matrix {
        match &self.ssl_rows {
            Some(rows) => self.target_x.select_rows(rows),
            None => self.target_x.clone(),
        }
    }
}

/// Layer widths of the three networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDims {
    pub input: usize,
    /// Hidden widths of the feature extractor; its last entry is the feature width.
    pub feature: Vec<usize>,
    pub classes: usize,
    pub disc_hidden: usize,
}

/// Feature extractor `θ_f`, label classifier `θ_c` and domain discriminator `θ_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub feature: MlpParams,
    pub classifier: MlpParams,
    pub discriminator: MlpParams,
}

impl ModelBundle {
    /// ReLU feature extractor, linear classifier (logits), one-hidden-layer sigmoid discriminator.
    pub fn init(dims: &ModelDims, rng: &mut SeededRng) -> Result<Self> {
        if dims.feature.is_empty() {
            return Err(Error::InvalidArgument("feature extractor needs at least one layer".into()));
        }
        let mut f_dims = vec![dims.input];
        f_dims.extend(&dims.feature);
        let f_acts = vec![Activation::Relu; dims.feature.len()];
        let feat_dim = *dims.feature.last().expect("nonempty");
        let feature = MlpParams::init(&f_dims, &f_acts, rng)?;
        let classifier = MlpParams::init(&[feat_dim, dims.classes], &[Activation::Identity], rng)?;
        let discriminator = MlpParams::init(
            &[feat_dim, dims.disc_hidden, 1],
            &[Activation::Relu, Activation::Sigmoid],
            rng,
        )?;
        Self::new(feature, classifier, discriminator)
    }

    pub fn new(feature: MlpParams, classifier: MlpParams, discriminator: MlpParams) -> Result<Self> {
        if classifier.in_dim() != feature.out_dim() || discriminator.in_dim() != feature.out_dim() {
            return Err(Error::shape(
                "ModelBundle",
                "classifier and discriminator must read the feature width",
            ));
        }
        if discriminator.out_dim() != 1 {
            return Err(Error::shape("ModelBundle", "discriminator must output one probability"));
        }
        Ok(Self {
            feature,
            classifier,
            discriminator,
        })
    }

    /// All parameters, feature then classifier then discriminator.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.feature.to_flat();
        v.extend(self.classifier.to_flat());
        v.extend(self.discriminator.to_flat());
        v
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        let (nf, nc) = (self.feature.num_params(), self.classifier.num_params());
        if flat.len() != nf + nc + self.discriminator.num_params() {
            return Err(Error::shape("ModelBundle::set_flat", "wrong parameter count"));
        }
        self.feature.set_flat(&flat[..nf])?;
        self.classifier.set_flat(&flat[nf..nf + nc])?;
        self.discriminator.set_flat(&flat[nf + nc..])
    }
}

/// Per-network gradients. Each is a descent direction for its own network:
/// `∂J/∂θ_f` and `∂J/∂θ_c` for `J = L_s − λ·L_adv + α·L_ssl`, and
/// `−∂J/∂θ_d = λ·∂L_adv/∂θ_d` for the discriminator, which plays the max side.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrads {
    pub feature: GradBundle,
    pub classifier: GradBundle,
    pub discriminator: GradBundle,
}

impl ModelGrads {
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.feature.to_flat();
        v.extend(self.classifier.to_flat());
        v.extend(self.discriminator.to_flat());
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossComponents {
    pub source: f64,
    pub adversarial: f64,
    pub ssl: f64,
}

impl LossComponents {
    /// `L_s − λ·L_adv + α·L_ssl`.
    pub fn objective(&self, w: &LossWeights) -> f64 {
        self.source - w.lambda * self.adversarial + w.alpha * self.ssl
    }

    pub fn is_finite(&self) -> bool {
        self.source.is_finite() && self.adversarial.is_finite() && self.ssl.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub components: LossComponents,
    pub grads: ModelGrads,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SslConfig {
    pub variant: SslVariant,
    pub augment: AugmentConfig,
}

/// The two augmented views fed to the SSL term.
#[derive(Debug, Clone, PartialEq)]
pub struct SslViews {
    pub view1: Matrix,
    pub view2: Matrix,
}

impl SslViews {
    pub fn draw(x: &Matrix, aug: &AugmentConfig, rng: &mut SeededRng) -> Self {
        let view1 = augment_rows(x, aug, rng);
        let view2 = augment_rows(x, aug, rng);
        Self { view1, view2 }
    }
}

/// Evaluates the unified objective and its gradients on one batch.
///
/// Augmentations are drawn from `rng` only when `α > 0`.
pub fn total_objective(
    batch: &WeightedBatch,
    models: &ModelBundle,
    weights: &LossWeights,
    ssl: &SslConfig,
    rng: &mut SeededRng,
) -> Result<Objective> {
    let views = if weights.alpha > 0.0 {
        ssl.augment.validate()?;
        Some(SslViews::draw(&batch.ssl_input(), &ssl.augment, rng))
    } else {
        None
    };
    total_objective_with_views(batch, models, weights, ssl.variant, views.as_ref())
}

/// [`total_objective`] with explicit SSL views (ignored when `α = 0`).
pub fn total_objective_with_views(
    batch: &WeightedBatch,
    models: &ModelBundle,
    weights: &LossWeights,
    variant: SslVariant,
    views: Option<&SslViews>,
) -> Result<Objective> {
    batch.validate()?;
    let LossWeights { lambda, alpha } = *weights;

    // source supervision
    let (fs, cache_fs) = mlp_forward(&models.feature, &batch.source_x)?;
    let (logits, cache_c) = mlp_forward(&models.classifier, &fs)?;
    let (l_source, dlogits) = source_ce_loss(&logits, &batch.source_y)?;
    let mut grad_c = mlp_backward(&models.classifier, &cache_c, &dlogits)?;
    let mut upstream_fs = grad_c.input.take().expect("backward returns input grad");

    // weighted adversarial alignment
    let (ft, cache_ft) = mlp_forward(&models.feature, &batch.target_x)?;
    let (ds, cache_ds) = mlp_forward(&models.discriminator, &fs)?;
    let (dt, cache_dt) = mlp_forward(&models.discriminator, &ft)?;
    let adv = adv_alignment_loss(ds.data(), dt.data(), &batch.w_source, &batch.w_target)?;
    let mut grad_d = GradBundle::zeros_like(&models.discriminator);
    let mut grad_f_target = None;
    if lambda > 0.0 {
        let gs = Matrix::new(ds.rows(), 1, adv.grad_source.clone())?;
        let gt = Matrix::new(dt.rows(), 1, adv.grad_target.clone())?;
        let mut bs = mlp_backward(&models.discriminator, &cache_ds, &gs)?;
        let mut bt = mlp_backward(&models.discriminator, &cache_dt, &gt)?;
        let to_fs = bs.input.take().expect("input grad");
        let to_ft = bt.input.take().expect("input grad");
        bs.accumulate(&bt)?;
        for l in &mut bs.layers {
            l.weight = l.weight.scale(lambda);
            l.bias.iter_mut().for_each(|b| *b *= lambda);
        }
        grad_d = bs;
        upstream_fs.add_assign(&grad_reverse(&to_fs, lambda))?;
        grad_f_target = Some(mlp_backward(&models.feature, &cache_ft, &grad_reverse(&to_ft, lambda))?);
    }

    let mut grad_f = mlp_backward(&models.feature, &cache_fs, &upstream_fs)?;
    grad_f.input = None;
    if let Some(g) = grad_f_target {
        grad_f.accumulate(&GradBundle { input: None, ..g })?;
    }

    // self-supervised consistency on target views
    let mut l_ssl = 0.0;
    if alpha > 0.0 {
        let views = views.ok_or_else(|| Error::InvalidArgument("α > 0 requires SSL views".into()))?;
        let (f1, c1) = mlp_forward(&models.feature, &views.view1)?;
        let (f2, c2) = mlp_forward(&models.feature, &views.view2)?;
        let s = ssl_loss(&f1, &f2, variant)?;
        l_ssl = s.value;
        for (cache, g) in [(&c1, &s.grad_view1), (&c2, &s.grad_view2)] {
            let mut b = mlp_backward(&models.feature, cache, &g.scale(alpha))?;
            b.input = None;
            grad_f.accumulate(&b)?;
        }
    }

    grad_c.input = None;
    Ok(Objective {
        components: LossComponents {
            source: l_source,
            adversarial: adv.value,
            ssl: l_ssl,
        },
        grads: ModelGrads {
            feature: grad_f,
            classifier: grad_c,
            discriminator: grad_d,
        },
    })
}

/// Loss components only (no gradients), with explicit views. Used by finite-difference checks.
pub fn objective_components(
    batch: &WeightedBatch,
    models: &ModelBundle,
    views: Option<&SslViews>,
) -> Result<LossComponents> {
    let fs = crate::ndcore::mlp_predict(&models.feature, &batch.source_x)?;
    let logits = crate::ndcore::mlp_predict(&models.classifier, &fs)?;
    let (source, _) = source_ce_loss(&logits, &batch.source_y)?;
    let ft = crate::ndcore::mlp_predict(&models.feature, &batch.target_x)?;
    let ds = crate::ndcore::mlp_predict(&models.discriminator, &fs)?;
    let dt = crate::ndcore::mlp_predict(&models.discriminator, &ft)?;
    let adversarial = adv_alignment_loss(ds.data(), dt.data(), &batch.w_source, &batch.w_target)?.value;
    let ssl = match views {
        Some(v) => {
            let f1 = crate::ndcore::mlp_predict(&models.feature, &v.view1)?;
            let f2 = crate::ndcore::mlp_predict(&models.feature, &v.view2)?;
            ssl_loss(&f1, &f2, SslVariant::PlainL2)?.value
        }
        None => 0.0,
    };
    Ok(LossComponents {
        source,
        adversarial,
        ssl,
    })
}
