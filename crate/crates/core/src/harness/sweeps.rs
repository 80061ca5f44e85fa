//! Sweep runners. Every cell trains independently from a seed derived from
//! `(master seed, replicate index)`, so cells can run in parallel and rows are
//! returned in canonical order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, SslTarget, WeightingMode};
use super::train::{train_unida, RunRecord};
use crate::error::Result;
use crate::ndcore::derive_seed;
use crate::synthdata::LabelSplit;
use crate::weighting::UncertaintyKind;

/// One evaluation row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub config_hash: String,
    pub seed: u64,
    pub spcr: f64,
    pub flip_rate: f64,
    pub alpha: f64,
    pub acc_common: f64,
    pub acc_private: Option<f64>,
    pub h_score: f64,
    pub misclass_sp: f64,
    pub arm: String,
    /// Fraction of target classes that are target-private.
    pub tp_prop: f64,
    /// Mean target-side batch noise rate over training.
    pub noise_tgt: f64,
}

impl EvalRow {
    pub fn from_record(rec: &RunRecord, cfg: &ExperimentConfig, arm: &str) -> Self {
        let split = cfg.label_split().expect("validated config");
        Self {
            config_hash: rec.config_hash.clone(),
            seed: rec.seed,
            spcr: split.spcr(),
            flip_rate: if cfg.weighting == WeightingMode::Oracle { cfg.flip_rate } else { 0.0 },
            alpha: cfg.alpha,
            acc_common: rec.eval.acc_common,
            acc_private: rec.eval.acc_private,
            h_score: rec.eval.h_score,
            misclass_sp: rec.eval.misclass_into_source_private,
            arm: arm.to_string(),
            tp_prop: split.n_target_private as f64 / split.num_target_classes() as f64,
            noise_tgt: rec.mean_noise(|s| s.noise_tgt),
        }
    }

    fn sort_key(&self) -> (&str, f64, f64, f64, f64, u64) {
        (&self.arm, self.spcr, self.tp_prop, self.flip_rate, self.alpha, self.seed)
    }
}

/// Sorts rows by arm, SPCR, target-private proportion, flip rate, α and seed.
pub fn sort_rows(rows: &mut [EvalRow]) {
    rows.sort_by(|a, b| {
        let (ka, kb) = (a.sort_key(), b.sort_key());
        ka.0.cmp(kb.0)
            .then(ka.1.total_cmp(&kb.1))
            .then(ka.2.total_cmp(&kb.2))
            .then(ka.3.total_cmp(&kb.3))
            .then(ka.4.total_cmp(&kb.4))
            .then(ka.5.cmp(&kb.5))
    });
}

/// Observed noise rate of one uncertainty kind in one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRow {
    pub config_hash: String,
    pub seed: u64,
    pub spcr: f64,
    pub flip_rate: f64,
    pub kind: UncertaintyKind,
    pub mean_noise: f64,
}

/// A training cell: a fully specified config plus the arm label for its row.
#[derive(Debug, Clone)]
pub struct Cell {
    pub cfg: ExperimentConfig,
    pub arm: String,
}

/// Runs all cells in parallel and returns their records in input order.
pub fn run_cells(cells: &[Cell]) -> Result<Vec<RunRecord>> {
    cells.par_iter().map(|c| train_unida(&c.cfg)).collect()
}

fn seeds(cfg: &ExperimentConfig) -> Vec<u64> {
    (0..cfg.seeds as u64).map(|i| derive_seed(cfg.seed, i)).collect()
}

fn with_spcr(base: &ExperimentConfig, spcr: f64) -> Result<ExperimentConfig> {
    let split = LabelSplit::for_spcr(spcr, base.sweep_source_classes, base.n_target_private)?;
    let mut c = base.clone();
    c.n_source_private = split.n_source_private;
    c.n_common = split.n_common;
    Ok(c)
}

fn rows_of(cells: &[Cell], records: &[RunRecord]) -> Vec<EvalRow> {
    let mut rows: Vec<EvalRow> = cells
        .iter()
        .zip(records)
        .map(|(c, r)| EvalRow::from_record(r, &c.cfg, &c.arm))
        .collect();
    sort_rows(&mut rows);
    rows
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSweep {
    pub rows: Vec<EvalRow>,
    pub noise_rows: Vec<NoiseRow>,
}

/// Oracle weights with flip noise at every `(SPCR, flip rate, seed)`, plus a
/// source-only baseline (`λ = 0`) per `(SPCR, seed)`. The SSL term is off.
/// Arms: `oracle` and `source_only`.
pub fn run_noise_tolerance_sweep(base: &ExperimentConfig) -> Result<NoiseSweep> {
    base.require_axis("spcr_values", base.spcr_values.len())?;
    base.require_axis("flip_rates", base.flip_rates.len())?;
    let mut cells = Vec::new();
    for &spcr in &base.spcr_values {
        let c0 = with_spcr(base, spcr)?;
        for seed in seeds(base) {
            let mut b = c0.clone();
            b.seed = seed;
            b.alpha = 0.0;
            b.weighting = WeightingMode::Oracle;
            let mut src_only = b.clone();
            src_only.lambda = 0.0;
            src_only.flip_rate = 0.0;
            cells.push(Cell {
                cfg: src_only,
                arm: "source_only".into(),
            });
            for &rate in &base.flip_rates {
                let mut c = b.clone();
                c.flip_rate = rate;
                c.track_uncertainty_noise = true;
                cells.push(Cell {
                    cfg: c,
                    arm: "oracle".into(),
                });
            }
        }
    }
    let records = run_cells(&cells)?;
    let mut noise_rows = Vec::new();
    for (c, r) in cells.iter().zip(&records) {
        for &(kind, mean_noise) in &r.observed_noise {
            noise_rows.push(NoiseRow {
                config_hash: r.config_hash.clone(),
                seed: r.seed,
                spcr: c.cfg.label_split()?.spcr(),
                flip_rate: c.cfg.flip_rate,
                kind,
                mean_noise,
            });
        }
    }
    noise_rows.sort_by(|a, b| {
        a.spcr
            .total_cmp(&b.spcr)
            .then(a.flip_rate.total_cmp(&b.flip_rate))
            .then(a.kind.as_str().cmp(b.kind.as_str()))
            .then(a.seed.cmp(&b.seed))
    });
    Ok(NoiseSweep {
        rows: rows_of(&cells, &records),
        noise_rows,
    })
}

/// Three SSL arms per target-private class count and seed: `ssl_all`,
/// `ssl_common` (restricted to target-common rows) and `no_ssl` (`α = 0`).
pub fn run_ssl_ablation(base: &ExperimentConfig) -> Result<Vec<EvalRow>> {
    base.require_axis("target_private_values", base.target_private_values.len())?;
    let mut cells = Vec::new();
    for &tp in &base.target_private_values {
        for seed in seeds(base) {
            let mut b = base.clone();
            b.seed = seed;
            b.n_target_private = tp;
            b.weighting = WeightingMode::Learned;
            for (arm, alpha, target) in [
                ("ssl_all", base.alpha, SslTarget::All),
                ("ssl_common", base.alpha, SslTarget::CommonOnly),
                ("no_ssl", 0.0, SslTarget::All),
            ] {
                let mut c = b.clone();
                c.alpha = alpha;
                c.ssl_target = target;
                cells.push(Cell { cfg: c, arm: arm.into() });
            }
        }
    }
    let records = run_cells(&cells)?;
    Ok(rows_of(&cells, &records))
}

/// H-score for every `α` in `alpha_values` and seed. Arm: `alpha`.
pub fn run_alpha_sensitivity(base: &ExperimentConfig) -> Result<Vec<EvalRow>> {
    base.require_axis("alpha_values", base.alpha_values.len())?;
    let mut cells = Vec::new();
    for &alpha in &base.alpha_values {
        for seed in seeds(base) {
            let mut c = base.clone();
            c.seed = seed;
            c.alpha = alpha;
            c.weighting = WeightingMode::Learned;
            cells.push(Cell {
                cfg: c,
                arm: "alpha".into(),
            });
        }
    }
    let records = run_cells(&cells)?;
    Ok(rows_of(&cells, &records))
}

/// Alignment only (`align`, `α = 0`), alignment plus SSL (`align_ssl`) and a
/// source-only reference (`source_only`, `λ = α = 0`) at every SPCR and seed.
pub fn run_spcr_robustness_sweep(base: &ExperimentConfig) -> Result<Vec<EvalRow>> {
    base.require_axis("spcr_values", base.spcr_values.len())?;
    let mut cells = Vec::new();
    for &spcr in &base.spcr_values {
        let c0 = with_spcr(base, spcr)?;
        for seed in seeds(base) {
            let mut b = c0.clone();
            b.seed = seed;
            b.weighting = WeightingMode::Learned;
            for (arm, lambda, alpha) in [
                ("align", base.lambda, 0.0),
                ("align_ssl", base.lambda, base.alpha),
                ("source_only", 0.0, 0.0),
            ] {
                let mut c = b.clone();
                c.lambda = lambda;
                c.alpha = alpha;
                cells.push(Cell { cfg: c, arm: arm.into() });
            }
        }
    }
    let records = run_cells(&cells)?;
    Ok(rows_of(&cells, &records))
}

/// Seed-averaged value of `pick` over rows matching `filter`.
pub fn mean_over(rows: &[EvalRow], filter: impl Fn(&EvalRow) -> bool, pick: impl Fn(&EvalRow) -> f64) -> f64 {
    let v: Vec<f64> = rows.iter().filter(|r| filter(r)).map(pick).collect();
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}
