//! The adversarial-alignment training loop with optional SSL.

use std::collections::BTreeSet;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{DatasetKind, ExperimentConfig, SslTarget, WeightingMode};
use crate::error::{Error, Result};
use crate::losses::{total_objective, ModelBundle, WeightedBatch};
use crate::metrics::{batch_noise_rate, evaluate, predict_proba, EvalReport};
use crate::ndcore::{mlp_predict, sgd_step, streams, Matrix, SeededRng, Velocity};
use crate::synthdata::{make_toy_dataset, make_unida_dataset, Dataset};
use crate::weighting::{
    flip_mask, apply_flip_mask, oracle_weights, score_batch, source_distance_scores, to_weight, CentroidBank,
    UncertaintyKind, WeightConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub step: usize,
    pub l_s: f64,
    pub l_adv: f64,
    pub l_ssl: f64,
    pub noise_src: f64,
    pub noise_tgt: f64,
    pub noise_pool: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub config_hash: String,
    pub seed: u64,
    pub log: Vec<StepLog>,
    pub eval: EvalReport,
    /// Mean target-side noise rate each uncertainty kind would have produced
    /// (filled when `track_uncertainty_noise` is set).
    pub observed_noise: Vec<(UncertaintyKind, f64)>,
    pub wall_time_secs: f64,
}

impl RunRecord {
    /// Mean of a logged noise rate over all steps.
    pub fn mean_noise(&self, pick: impl Fn(&StepLog) -> f64) -> f64 {
        self.log.iter().map(pick).sum::<f64>() / self.log.len().max(1) as f64
    }
}

/// Source and target sets for the configured data generator, drawn from the data stream of `cfg.seed`.
pub fn make_datasets(cfg: &ExperimentConfig) -> Result<(Dataset, Dataset)> {
    let mut rng = SeededRng::with_stream(cfg.seed, streams::DATA);
    match cfg.dataset {
        DatasetKind::Clusters => {
            let (s, t, _) = make_unida_dataset(&cfg.cluster_config()?, &mut rng)?;
            Ok((s, t))
        }
        DatasetKind::Toy => make_toy_dataset(&cfg.toy_config(cfg.n_source_private)?, &mut rng),
    }
}

/// `k` row indices drawn uniformly with replacement.
pub fn sample_indices(n: usize, k: usize, rng: &mut SeededRng) -> Vec<usize> {
    (0..k).map(|_| rng.below(n)).collect()
}

/// Learned target weights (and source weights for the distance kind).
fn learned_weights(
    wc: &WeightConfig,
    models: &ModelBundle,
    probs: &Matrix,
    xs: &Matrix,
    ft: &Matrix,
    bank: Option<&CentroidBank>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = models.classifier.out_dim();
    let w_t = to_weight(&score_batch(wc.kind, probs, ft, bank)?, wc, k)?;
    let w_s = if wc.kind == UncertaintyKind::Distance {
        let fs = mlp_predict(&models.feature, xs)?;
        to_weight(&source_distance_scores(&fs, ft)?, wc, k)?
    } else {
        vec![1.0; xs.rows()]
    };
    Ok((w_s, w_t))
}

fn uses_bank(cfg: &ExperimentConfig) -> bool {
    cfg.track_uncertainty_noise || (cfg.weighting == WeightingMode::Learned && cfg.uncertainty == UncertaintyKind::Distance)
}

/// Trains on the configured data and evaluates on the full target set.
pub fn train_unida(cfg: &ExperimentConfig) -> Result<RunRecord> {
    train_unida_with_model(cfg).map(|(r, _)| r)
}

/// [`train_unida`], also returning the trained networks.
pub fn train_unida_with_model(cfg: &ExperimentConfig) -> Result<(RunRecord, ModelBundle)> {
    cfg.validate()?;
    let (source, target) = make_datasets(cfg)?;
    train_on(cfg, &source, &target)
}

/// Runs the training loop on the given domains. Target labels are read only for
/// oracle weights, common-only SSL and noise-rate logging.
pub fn train_on(cfg: &ExperimentConfig, source: &Dataset, target: &Dataset) -> Result<(RunRecord, ModelBundle)> {
    let started = Instant::now();
    let split = source.split();
    let k = split.num_source_classes();
    let common: BTreeSet<usize> = split.common_set();
    let weights = cfg.loss_weights();
    let ssl = cfg.ssl_config();
    let wc = cfg.weight_config();
    let rule = cfg.rejection_rule(k)?;

    let mut init_rng = SeededRng::with_stream(cfg.seed, streams::INIT);
    let mut batch_rng = SeededRng::with_stream(cfg.seed, streams::BATCH);
    let mut aug_rng = SeededRng::with_stream(cfg.seed, streams::AUGMENT);
    let mut noise_rng = SeededRng::with_stream(cfg.seed, streams::WEIGHT_NOISE);

    let mut models = ModelBundle::init(&cfg.model_dims(source.dim(), k), &mut init_rng)?;
    let mut vel = [
        Velocity::zeros_like(&models.feature),
        Velocity::zeros_like(&models.classifier),
        Velocity::zeros_like(&models.discriminator),
    ];
    let mut bank = if uses_bank(cfg) {
        let fs = mlp_predict(&models.feature, source.features())?;
        Some(CentroidBank::from_features(&fs, source.hidden_labels(), k, cfg.centroid_interval, 0)?)
    } else {
        None
    };

    let tracked = if cfg.track_uncertainty_noise { UncertaintyKind::ALL.to_vec() } else { Vec::new() };
    let mut tracked_sum = vec![0.0; tracked.len()];
    let mut log = Vec::with_capacity(cfg.steps);
    let src_labels = source.hidden_labels();
    let tgt_labels = target.hidden_labels();

    for step in 0..cfg.steps {
        let si = sample_indices(source.len(), cfg.batch_size, &mut batch_rng);
        let ti = sample_indices(target.len(), cfg.batch_size, &mut batch_rng);
        let xs = source.features().select_rows(&si);
        let xt = target.features().select_rows(&ti);
        let ys: Vec<usize> = si.iter().map(|&i| src_labels[i]).collect();
        let yt: Vec<usize> = ti.iter().map(|&i| tgt_labels[i]).collect();

        if let Some(b) = bank.as_mut() {
            if step > 0 {
                let fs = mlp_predict(&models.feature, &xs)?;
                b.update_centroids(&fs, &ys, step)?;
            }
        }
        let needs_probs = cfg.weighting == WeightingMode::Learned || !tracked.is_empty();
        let (probs, ft) = if needs_probs {
            (predict_proba(&models, &xt)?, mlp_predict(&models.feature, &xt)?)
        } else {
            (Matrix::zeros(0, 0), Matrix::zeros(0, 0))
        };
        if !(probs.is_finite() && ft.is_finite()) {
            // Overflow in the forward pass; report the last logged losses.
            let last = log.last().map_or((f64::NAN, f64::NAN, f64::NAN), |s: &StepLog| (s.l_s, s.l_adv, s.l_ssl));
            return Err(Error::NumericAbort {
                step,
                ls: last.0,
                ladv: last.1,
                lssl: last.2,
            });
        }

        let (w_source, w_target) = match cfg.weighting {
            WeightingMode::Oracle => {
                let ms = flip_mask(ys.len(), cfg.flip_rate, &mut noise_rng)?;
                let mt = flip_mask(yt.len(), cfg.flip_rate, &mut noise_rng)?;
                (
                    apply_flip_mask(&oracle_weights(&ys, &common), &ms)?,
                    apply_flip_mask(&oracle_weights(&yt, &common), &mt)?,
                )
            }
            WeightingMode::Learned => learned_weights(&wc, &models, &probs, &xs, &ft, bank.as_ref())?,
        };
        for (sum, &kind) in tracked_sum.iter_mut().zip(&tracked) {
            let twc = WeightConfig { kind, ..wc };
            let w = to_weight(&score_batch(kind, &probs, &ft, bank.as_ref())?, &twc, k)?;
            *sum += batch_noise_rate(&w, &yt, &common, wc.threshold)?;
        }

        let ssl_rows = match cfg.ssl_target {
            SslTarget::All => None,
            SslTarget::CommonOnly => Some((0..yt.len()).filter(|&r| common.contains(&yt[r])).collect()),
        };
        let noise_src = batch_noise_rate(&w_source, &ys, &common, wc.threshold)?;
        let noise_tgt = batch_noise_rate(&w_target, &yt, &common, wc.threshold)?;
        let pooled_w: Vec<f64> = w_source.iter().chain(&w_target).copied().collect();
        let pooled_y: Vec<usize> = ys.iter().chain(&yt).copied().collect();
        let noise_pool = batch_noise_rate(&pooled_w, &pooled_y, &common, wc.threshold)?;

        let batch = WeightedBatch {
            source_x: xs,
            source_y: ys,
            target_x: xt,
            w_source,
            w_target,
            ssl_rows,
        };
        let obj = total_objective(&batch, &models, &weights, &ssl, &mut aug_rng)?;
        let c = obj.components;
        if !c.is_finite() {
            return Err(Error::NumericAbort {
                step,
                ls: c.source,
                ladv: c.adversarial,
                lssl: c.ssl,
            });
        }
        let [vf, vc, vd] = &mut vel;
        sgd_step(&mut models.feature, &obj.grads.feature, cfg.lr, cfg.momentum, vf)?;
        sgd_step(&mut models.classifier, &obj.grads.classifier, cfg.lr, cfg.momentum, vc)?;
        sgd_step(&mut models.discriminator, &obj.grads.discriminator, cfg.lr, cfg.momentum, vd)?;

        log.push(StepLog {
            step,
            l_s: c.source,
            l_adv: c.adversarial,
            l_ssl: c.ssl,
            noise_src,
            noise_tgt,
            noise_pool,
        });
    }

    let eval = evaluate(&models, target, &rule)?;
    let steps = cfg.steps as f64;
    Ok((
        RunRecord {
            config_hash: cfg.config_hash(),
            seed: cfg.seed,
            log,
            eval,
            observed_noise: tracked.into_iter().zip(tracked_sum.into_iter().map(|s| s / steps)).collect(),
            wall_time_secs: started.elapsed().as_secs_f64(),
        },
        models,
    ))
}
