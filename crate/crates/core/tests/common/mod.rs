//! Acceptance criteria, shared by the `acceptance` target and the focused tests.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::Instant;

use unida_core::harness::{
    emit_plots, mean_over, run_alpha_sensitivity, run_cells, run_noise_tolerance_sweep, run_spcr_robustness_sweep,
    run_ssl_ablation, run_toy_seeds, train_unida, write_eval_rows, write_step_log, Cell, EvalRow, ExperimentConfig,
    WeightingMode,
};
use unida_core::losses::{
    objective_components, toy_ssl_loss_with_noise, toy_sup_loss, total_objective_with_views, LossWeights,
    ModelBundle, ModelDims, SslVariant, SslViews, WeightedBatch,
};
use unida_core::metrics::{batch_noise_rate, evaluate, h_score, predict_proba, RejectionKind, RejectionRule};
use unida_core::ndcore::{finite_diff_flat, max_relative_error, mlp_predict, Matrix, SeededRng};
use unida_core::synthdata::{read_dataset_csv, write_dataset_csv, Dataset, Domain, LabelSplit, TargetRows};
use unida_core::weighting::{
    confidence, distance_uncertainty, energy, entropy, to_weight, CentroidBank, Normalization, UncertaintyKind,
    WeightConfig,
};

pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden")
}

pub fn random_matrix(rows: usize, cols: usize, scale: f64, rng: &mut SeededRng) -> Matrix {
    Matrix::new(rows, cols, (0..rows * cols).map(|_| scale * rng.normal()).collect()).unwrap()
}

/// Random probability rows with varied sharpness.
pub fn random_probs(rows: usize, k: usize, rng: &mut SeededRng) -> Matrix {
    let mut m = Matrix::zeros(rows, k);
    for r in 0..rows {
        let temp = 0.2 + 4.0 * rng.uniform();
        let e: Vec<f64> = (0..k).map(|_| (temp * rng.normal()).exp()).collect();
        let s: f64 = e.iter().sum();
        for (c, v) in e.iter().enumerate() {
            m.set(r, c, v / s);
        }
    }
    m
}

// ---------------------------------------------------------------------------
// 1. gradients

const FD_STEP: f64 = 1e-5;
const GRAD_TOL: f64 = 1e-4;

fn small_models(rng: &mut SeededRng) -> ModelBundle {
    let dims = ModelDims {
        input: 5,
        feature: vec![8, 8],
        classes: 4,
        disc_hidden: 8,
    };
    ModelBundle::init(&dims, rng).unwrap()
}

fn small_batch(rng: &mut SeededRng) -> WeightedBatch {
    let n = 6;
    WeightedBatch {
        source_x: random_matrix(n, 5, 1.0, rng),
        source_y: (0..n).map(|_| rng.below(4)).collect(),
        target_x: random_matrix(n, 5, 1.0, rng),
        w_source: (0..n).map(|_| rng.uniform()).collect(),
        w_target: (0..n).map(|_| rng.uniform()).collect(),
        ssl_rows: None,
    }
}

/// Finite-difference gradient of `loss` over the flat parameters of `models`,
/// split into (feature, classifier, discriminator) blocks.
fn fd_blocks(models: &ModelBundle, loss: impl Fn(&ModelBundle) -> f64) -> [Vec<f64>; 3] {
    let mut scratch = models.clone();
    let g = finite_diff_flat(
        |p| {
            scratch.set_flat(p).unwrap();
            loss(&scratch)
        },
        &models.to_flat(),
        FD_STEP,
    )
    .unwrap();
    let nf = models.feature.num_params();
    let nc = models.classifier.num_params();
    [g[..nf].to_vec(), g[nf..nf + nc].to_vec(), g[nf + nc..].to_vec()]
}

/// Worst relative error per loss family over five seeds.
pub fn gradient_errors() -> Vec<(&'static str, f64)> {
    let mut worst = vec![
        ("source cross-entropy", 0.0f64),
        ("weighted adversarial", 0.0),
        ("ssl plain_l2", 0.0),
        ("ssl stop_grad", 0.0),
        ("composite objective", 0.0),
        ("toy supervised", 0.0),
        ("toy ssl", 0.0),
    ];
    for seed in 0..5u64 {
        let mut rng = SeededRng::new(1000 + seed);
        let models = small_models(&mut rng);
        let batch = small_batch(&mut rng);
        let views = SslViews {
            view1: random_matrix(6, 5, 1.0, &mut rng),
            view2: random_matrix(6, 5, 1.0, &mut rng),
        };
        let comps = |m: &ModelBundle| objective_components(&batch, m, Some(&views)).unwrap();
        let analytic = |lambda: f64, alpha: f64, variant: SslVariant| {
            let w = LossWeights::new(lambda, alpha).unwrap();
            let o = total_objective_with_views(&batch, &models, &w, variant, Some(&views)).unwrap();
            [o.grads.feature.to_flat(), o.grads.classifier.to_flat(), o.grads.discriminator.to_flat()]
        };
        let mut note = |i: usize, e: f64| worst[i].1 = worst[i].1.max(e);

        // L_s drives F and C.
        let a = analytic(0.0, 0.0, SslVariant::PlainL2);
        let fd = fd_blocks(&models, |m| comps(m).source);
        note(0, max_relative_error(&a[0], &fd[0]).max(max_relative_error(&a[1], &fd[1])));

        // D descends λ·L_adv; F sees the reversed gradient.
        let lambda = 0.7;
        let a = analytic(lambda, 0.0, SslVariant::PlainL2);
        let fd_adv = fd_blocks(&models, |m| comps(m).adversarial);
        let fd_f = fd_blocks(&models, |m| {
            let c = comps(m);
            c.source - lambda * c.adversarial
        });
        let d_expect: Vec<f64> = fd_adv[2].iter().map(|g| lambda * g).collect();
        note(1, max_relative_error(&a[2], &d_expect).max(max_relative_error(&a[0], &fd_f[0])));

        // Plain L2 SSL on F.
        let alpha = 0.6;
        let a = analytic(0.0, alpha, SslVariant::PlainL2);
        let fd = fd_blocks(&models, |m| {
            let c = comps(m);
            c.source + alpha * c.ssl
        });
        note(2, max_relative_error(&a[0], &fd[0]));

        // Stop-grad: average of the two orderings with the other branch frozen.
        let a = analytic(0.0, alpha, SslVariant::StopGradOneBranch);
        let f1 = mlp_predict(&models.feature, &views.view1).unwrap();
        let f2 = mlp_predict(&models.feature, &views.view2).unwrap();
        let n = views.view1.rows() as f64;
        let frozen = |m: &ModelBundle| {
            let g1 = mlp_predict(&m.feature, &views.view1).unwrap();
            let g2 = mlp_predict(&m.feature, &views.view2).unwrap();
            let l1 = g1.sub(&f2).unwrap().norm_sq() / n;
            let l2 = f1.sub(&g2).unwrap().norm_sq() / n;
            comps(m).source + alpha * 0.5 * (l1 + l2)
        };
        let fd = fd_blocks(&models, frozen);
        note(3, max_relative_error(&a[0], &fd[0]));

        // Full objective J = L_s − λ L_adv + α L_ssl.
        let (lambda, alpha) = (0.5, 0.5);
        let a = analytic(lambda, alpha, SslVariant::PlainL2);
        let fd_j = fd_blocks(&models, |m| {
            let c = comps(m);
            c.source - lambda * c.adversarial + alpha * c.ssl
        });
        let fd_s = fd_blocks(&models, |m| comps(m).source);
        let fd_adv = fd_blocks(&models, |m| comps(m).adversarial);
        let d_expect: Vec<f64> = fd_adv[2].iter().map(|g| lambda * g).collect();
        note(
            4,
            max_relative_error(&a[0], &fd_j[0])
                .max(max_relative_error(&a[1], &fd_s[1]))
                .max(max_relative_error(&a[2], &d_expect)),
        );

        // Toy two-layer bias-free net.
        let (h, k) = (8, 3);
        let w1 = random_matrix(2, h, 0.8, &mut rng);
        let w2 = random_matrix(h, k, 0.8, &mut rng);
        let x = random_matrix(7, 2, 1.5, &mut rng);
        let y = random_matrix(7, k, 1.0, &mut rng);
        let (_, g) = toy_sup_loss(&w1, &w2, &x, &y).unwrap();
        let mut flat = w1.data().to_vec();
        flat.extend_from_slice(w2.data());
        let fd = finite_diff_flat(
            |p| {
                let a = Matrix::new(2, h, p[..2 * h].to_vec()).unwrap();
                let b = Matrix::new(h, k, p[2 * h..].to_vec()).unwrap();
                toy_sup_loss(&a, &b, &x, &y).unwrap().0
            },
            &flat,
            FD_STEP,
        )
        .unwrap();
        let mut an = g.w1.data().to_vec();
        an.extend_from_slice(g.w2.data());
        note(5, max_relative_error(&an, &fd));

        let e1 = random_matrix(7, 2, 0.5, &mut rng);
        let e2 = random_matrix(7, 2, 0.5, &mut rng);
        let (_, g) = toy_ssl_loss_with_noise(&w1, &x, &e1, &e2).unwrap();
        let fd = finite_diff_flat(
            |p| {
                let a = Matrix::new(2, h, p.to_vec()).unwrap();
                toy_ssl_loss_with_noise(&a, &x, &e1, &e2).unwrap().0
            },
            w1.data(),
            FD_STEP,
        )
        .unwrap();
        note(6, max_relative_error(g.data(), &fd));
    }
    worst
}

pub fn criterion_1() -> Outcome {
    let errs = gradient_errors();
    let pass = errs.iter().all(|(_, e)| *e < GRAD_TOL);
    let detail = errs
        .iter()
        .map(|(n, e)| format!("{n} {e:.1e}"))
        .collect::<Vec<_>>()
        .join(", ");
    Outcome::new(pass, format!("max rel err: {detail} (tol {GRAD_TOL:.0e})"))
}

// ---------------------------------------------------------------------------
// 2. metric oracles

fn brute_entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum::<f64>()
}

/// Mismatch count of h_score, batch_noise_rate and evaluate against per-sample recounts.
pub fn metric_mismatches(instances: usize) -> usize {
    let mut bad = 0;
    let mut rng = SeededRng::new(2024);
    for i in 0..instances {
        // h_score
        let a = rng.below(11) as f64 / 10.0;
        let b = rng.below(11) as f64 / 10.0;
        let want = if a + b == 0.0 { 0.0 } else { 2.0 * a * b / (a + b) };
        bad += usize::from(h_score(a, b) != want);

        // noise rate
        let n = 1 + rng.below(40);
        let n_classes = 2 + rng.below(6);
        let common: BTreeSet<usize> = (0..n_classes).filter(|_| rng.bernoulli(0.5)).collect();
        let labels: Vec<usize> = (0..n).map(|_| rng.below(n_classes)).collect();
        let weights: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
        let wrong = (0..n)
            .filter(|&j| (weights[j] >= 0.5) != common.contains(&labels[j]))
            .count();
        bad += usize::from(batch_noise_rate(&weights, &labels, &common, 0.5).unwrap() != wrong as f64 / n as f64);

        // evaluate
        let split = LabelSplit::new(rng.below(3), 1 + rng.below(3), rng.below(3)).unwrap();
        let k = split.num_source_classes();
        let dims = ModelDims {
            input: 3,
            feature: vec![4],
            classes: k,
            disc_hidden: 2,
        };
        let models = ModelBundle::init(&dims, &mut rng).unwrap();
        let targets: Vec<usize> = split.target_labels().into_iter().collect();
        let m = 1 + rng.below(30);
        let y: Vec<usize> = (0..m).map(|_| targets[rng.below(targets.len())]).collect();
        let x = random_matrix(m, 3, 2.0, &mut rng);
        let target = Dataset::new(x.clone(), y.clone(), Domain::Target, split).unwrap();
        let rule = if i % 2 == 0 || k == 1 {
            RejectionRule {
                kind: RejectionKind::ConfidenceThreshold,
                threshold: 0.3 + 0.6 * rng.uniform(),
            }
        } else {
            RejectionRule {
                kind: RejectionKind::EntropyThreshold,
                threshold: (0.1 + 0.8 * rng.uniform()) * (k as f64).ln(),
            }
        };
        let report = evaluate(&models, &target, &rule).unwrap();
        let probs = predict_proba(&models, &x).unwrap();
        let (mut nc, mut cc, mut sp, mut np, mut rp) = (0u64, 0u64, 0u64, 0u64, 0u64);
        for (p, &yy) in probs.iter_rows().zip(&y) {
            let rejected = match rule.kind {
                RejectionKind::EntropyThreshold => brute_entropy(p) >= rule.threshold,
                RejectionKind::ConfidenceThreshold => p.iter().copied().fold(0.0, f64::max) < rule.threshold,
            };
            let argmax = (0..p.len()).fold(0, |b, j| if p[j] > p[b] { j } else { b });
            if yy < split.n_common {
                nc += 1;
                cc += u64::from(!rejected && argmax == yy);
                sp += u64::from(!rejected && argmax >= split.n_common);
            } else {
                np += 1;
                rp += u64::from(rejected);
            }
        }
        let r = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let acc_p = (np > 0).then(|| r(rp, np));
        let ok = report.acc_common == r(cc, nc)
            && report.acc_private == acc_p
            && report.misclass_into_source_private == r(sp, nc)
            && report.h_score == acc_p.map_or(r(cc, nc), |ap| h_score(r(cc, nc), ap));
        bad += usize::from(!ok);
    }
    bad
}

pub fn criterion_2() -> Outcome {
    let bad = metric_mismatches(1000);
    Outcome::new(bad == 0, format!("{bad} mismatches over 1000 instances"))
}

// ---------------------------------------------------------------------------
// 3. uncertainty closed forms

pub fn closed_form_errors() -> f64 {
    let ln = f64::ln;
    let e = std::f64::consts::E;
    let checks = [
        (entropy(&[0.25; 4]).unwrap(), ln(4.0)),
        (entropy(&[1.0, 0.0, 0.0]).unwrap(), 0.0),
        (entropy(&[0.5, 0.5]).unwrap(), ln(2.0)),
        (confidence(&[0.0, 1.0, 0.0]).unwrap(), 1.0),
        (confidence(&[0.2; 5]).unwrap(), 0.2),
        (confidence(&[0.7, 0.2, 0.1]).unwrap(), 0.7),
        (energy(&[1.0]).unwrap(), -1.0),
        (energy(&[0.5, 0.5]).unwrap(), -(ln(2.0) + 0.5)),
        (energy(&[1.0, 0.0]).unwrap(), -ln(e + 1.0)),
    ];
    let mut worst = checks.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let bank = CentroidBank::new(Matrix::new(1, 2, vec![0.0, 0.0]).unwrap(), 100, 0).unwrap();
    worst = worst.max((distance_uncertainty(&[3.0, 4.0], &bank).unwrap() - 5.0).abs());
    let bank = CentroidBank::new(Matrix::new(2, 2, vec![1.0, 2.0, -3.0, 0.5]).unwrap(), 100, 0).unwrap();
    worst = worst.max(distance_uncertainty(&[-3.0, 0.5], &bank).unwrap().abs());
    worst
}

/// Batches in which a strictly less uncertain sample received a smaller weight.
pub fn orientation_violations(batches: usize) -> usize {
    let mut rng = SeededRng::new(77);
    let mut bad = 0;
    for b in 0..batches {
        let k = 2 + rng.below(8);
        let n = 2 + rng.below(30);
        let kind = UncertaintyKind::ALL[b % 4];
        let normalization = if rng.bernoulli(0.5) { Normalization::ClosedForm } else { Normalization::BatchMinmax };
        let (scores, uncertainty): (Vec<f64>, Vec<f64>) = match kind {
            UncertaintyKind::Distance => {
                let s: Vec<f64> = (0..n).map(|_| 5.0 * rng.uniform()).collect();
                (s.clone(), s)
            }
            _ => {
                let p = random_probs(n, k, &mut rng);
                let s: Vec<f64> = p
                    .iter_rows()
                    .map(|r| match kind {
                        UncertaintyKind::Entropy => entropy(r).unwrap(),
                        UncertaintyKind::Confidence => confidence(r).unwrap(),
                        _ => energy(r).unwrap(),
                    })
                    .collect();
                let u = s.iter().map(|&v| if kind == UncertaintyKind::Confidence { -v } else { v }).collect();
                (s, u)
            }
        };
        let cfg = WeightConfig {
            kind,
            normalization,
            threshold: 0.5,
        };
        let w = to_weight(&scores, &cfg, k).unwrap();
        let violated = (0..n).any(|i| (0..n).any(|j| uncertainty[i] < uncertainty[j] && w[i] < w[j]));
        let in_range = w.iter().all(|v| (0.0..=1.0).contains(v));
        bad += usize::from(violated || !in_range);
    }
    bad
}

pub fn criterion_3() -> Outcome {
    let err = closed_form_errors();
    let bad = orientation_violations(1000);
    Outcome::new(
        err <= 1e-10 && bad == 0,
        format!("closed-form max abs err {err:.1e}; orientation violations {bad}/1000"),
    )
}

// ---------------------------------------------------------------------------
// 4. toy

pub fn criterion_4() -> Outcome {
    let cfg = ExperimentConfig::default();
    let train = cfg.toy_train_config();
    let spcr4 = run_toy_seeds(&cfg.toy_config(4).unwrap(), &train, cfg.seed, 5).unwrap();
    let spcr0 = run_toy_seeds(&cfg.toy_config(0).unwrap(), &train, cfg.seed, 5).unwrap();
    let wins = spcr4.iter().filter(|o| o.alignment_ssl > o.alignment_sup).count();
    let min0 = spcr0
        .iter()
        .map(|o| o.alignment_sup.min(o.alignment_ssl))
        .fold(f64::INFINITY, f64::min);
    let mean = |v: &[unida_core::harness::ToyOutcome], f: fn(&unida_core::harness::ToyOutcome) -> f64| {
        v.iter().map(f).sum::<f64>() / v.len() as f64
    };
    Outcome::new(
        wins >= 4 && min0 > 0.9,
        format!(
            "SPCR=4: SSL wins {wins}/5 (mean {:.3} vs {:.3}); SPCR=0: min alignment {min0:.3}",
            mean(&spcr4, |o| o.alignment_ssl),
            mean(&spcr4, |o| o.alignment_sup)
        ),
    )
}

// ---------------------------------------------------------------------------
// 5. noise tolerance

/// Spearman rank correlation, average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

pub fn noise_sweep_config() -> ExperimentConfig {
    ExperimentConfig {
        n_target_private: 0,
        spcr_values: vec![2.0, 5.0],
        flip_rates: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
        ..ExperimentConfig::default()
    }
}

pub fn criterion_5() -> Outcome {
    let cfg = noise_sweep_config();
    let rows = run_noise_tolerance_sweep(&cfg).unwrap().rows;
    let mut parts = Vec::new();
    let mut rhos = Vec::new();
    let mut crossings = Vec::new();
    for &spcr in &cfg.spcr_values {
        let at = |r: &EvalRow| (r.spcr - spcr).abs() < 1e-9;
        let base = mean_over(&rows, |r| at(r) && r.arm == "source_only", |r| r.misclass_sp);
        let curve: Vec<f64> = cfg
            .flip_rates
            .iter()
            .map(|&f| mean_over(&rows, |r| at(r) && r.arm == "oracle" && r.flip_rate == f, |r| r.misclass_sp))
            .collect();
        let rho = spearman(&cfg.flip_rates, &curve);
        let cross = cfg
            .flip_rates
            .iter()
            .zip(&curve)
            .find(|(_, &m)| m > base)
            .map_or(f64::INFINITY, |(&f, _)| f);
        let pts: Vec<String> = curve.iter().map(|m| format!("{m:.3}")).collect();
        parts.push(format!(
            "SPCR={spcr}: base {base:.3}, curve [{}], rho {rho:.3}, crossing {cross}",
            pts.join(" ")
        ));
        rhos.push(rho);
        crossings.push(cross);
    }
    let pass = rhos.iter().all(|&r| r > 0.9) && crossings[1] < crossings[0];
    Outcome::new(pass, parts.join("; "))
}

// ---------------------------------------------------------------------------
// 6-7. SSL noise reduction and common-vs-all ablation

/// SPCR = 5 with five common classes.
pub fn spcr5_config() -> ExperimentConfig {
    ExperimentConfig {
        n_common: 5,
        n_source_private: 25,
        ..ExperimentConfig::default()
    }
}

pub fn criterion_6() -> Outcome {
    let base = spcr5_config();
    let mut cells = Vec::new();
    for i in 0..base.seeds as u64 {
        let mut c = base.clone();
        c.seed = unida_core::ndcore::derive_seed(base.seed, i);
        c.weighting = WeightingMode::Learned;
        let mut off = c.clone();
        off.alpha = 0.0;
        cells.push(Cell { cfg: c, arm: "ssl".into() });
        cells.push(Cell { cfg: off, arm: "no_ssl".into() });
    }
    let recs = run_cells(&cells).unwrap();
    let pairs: Vec<(f64, f64)> = recs
        .chunks(2)
        .map(|p| (p[0].mean_noise(|s| s.noise_tgt), p[1].mean_noise(|s| s.noise_tgt)))
        .collect();
    let wins = pairs.iter().filter(|(a, b)| a < b).count();
    let shown: Vec<String> = pairs.iter().map(|(a, b)| format!("{a:.3}/{b:.3}")).collect();
    Outcome::new(
        wins >= 4,
        format!("SSL lower on {wins}/{} seeds (with/without: {})", pairs.len(), shown.join(" ")),
    )
}

/// Least-squares slope of y on x.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let num: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    num / den
}

pub fn criterion_7() -> Outcome {
    let base = spcr5_config();
    let rows = run_ssl_ablation(&base).unwrap();
    let mut props: Vec<f64> = rows.iter().map(|r| r.tp_prop).collect();
    props.sort_by(f64::total_cmp);
    props.dedup();
    let h = |arm: &str, p: f64| mean_over(&rows, |r| r.arm == arm && r.tp_prop == p, |r| r.h_score);
    let gaps: Vec<f64> = props.iter().map(|&p| h("ssl_common", p) - h("ssl_all", p)).collect();
    let s = slope(&props, &gaps);
    let last = *gaps.last().unwrap();
    let shown: Vec<String> = props
        .iter()
        .zip(&gaps)
        .map(|(p, g)| format!("{p:.2}: {:.3}-{:.3}={g:+.3}", h("ssl_common", *p), h("ssl_all", *p)))
        .collect();
    Outcome::new(
        last >= 0.0 && s >= 0.0,
        format!("H(common)-H(all) by target-private proportion [{}]; slope {s:+.3}", shown.join(", ")),
    )
}

// ---------------------------------------------------------------------------
// 8. SPCR robustness

pub fn criterion_8() -> Outcome {
    let base = ExperimentConfig {
        spcr_values: vec![0.2, 3.0, 5.0],
        ..ExperimentConfig::default()
    };
    let rows = run_spcr_robustness_sweep(&base).unwrap();
    let h = |arm: &str, s: f64| mean_over(&rows, |r| r.arm == arm && (r.spcr - s).abs() < 1e-9, |r| r.h_score);
    let gap = |s: f64| h("align_ssl", s) - h("align", s);
    let (g02, g3, g5) = (gap(0.2), gap(3.0), gap(5.0));
    let shown: Vec<String> = [0.2, 3.0, 5.0]
        .iter()
        .map(|&s| format!("SPCR={s}: {:.3} vs {:.3}", h("align_ssl", s), h("align", s)))
        .collect();
    Outcome::new(
        g3 >= 0.0 && g5 >= 0.0 && g5 >= g02,
        format!(
            "+SSL vs align-only H [{}]; gaps 1/5 {g02:+.3}, 3 {g3:+.3}, 5 {g5:+.3}",
            shown.join(", ")
        ),
    )
}

// ---------------------------------------------------------------------------
// 9. α sensitivity

pub fn criterion_9() -> Outcome {
    let base = ExperimentConfig {
        alpha_values: vec![0.0, 0.3, 0.5, 0.7],
        ..ExperimentConfig::default()
    };
    let rows = run_alpha_sensitivity(&base).unwrap();
    let h = |a: f64| mean_over(&rows, |r| r.alpha == a, |r| r.h_score);
    let mid = [h(0.3), h(0.5), h(0.7)];
    let spread = mid.iter().copied().fold(f64::NEG_INFINITY, f64::max) - mid.iter().copied().fold(f64::INFINITY, f64::min);
    let gain = h(0.5) - h(0.0);
    Outcome::new(
        spread < gain,
        format!(
            "H at alpha 0/0.3/0.5/0.7 = {:.3}/{:.3}/{:.3}/{:.3}; spread {spread:.3} vs gain {gain:.3}",
            h(0.0),
            mid[0],
            mid[1],
            mid[2]
        ),
    )
}

// ---------------------------------------------------------------------------
// 10. determinism and plumbing

pub fn short_config() -> ExperimentConfig {
    ExperimentConfig {
        steps: 150,
        samples_per_class: 40,
        ..ExperimentConfig::default()
    }
}

fn run_csv(cfg: &ExperimentConfig) -> (Vec<u8>, Vec<u8>) {
    let rec = train_unida(cfg).unwrap();
    let (mut steps, mut eval) = (Vec::new(), Vec::new());
    write_step_log(&mut steps, &rec.log).unwrap();
    write_eval_rows(&mut eval, &[EvalRow::from_record(&rec, cfg, "train")]).unwrap();
    (steps, eval)
}

pub fn logs_are_bitwise_identical() -> bool {
    let cfg = short_config();
    run_csv(&cfg) == run_csv(&cfg)
}

pub fn dataset_round_trip_is_exact() -> bool {
    let cfg = short_config();
    let (s, t) = unida_core::harness::make_datasets(&cfg).unwrap();
    let mut buf = Vec::new();
    write_dataset_csv(&mut buf, &s, &t, false).unwrap();
    let back = read_dataset_csv(&buf[..], None).unwrap();
    let same = matches!(&back.target, TargetRows::Labeled(t2) if *t2 == t) && back.source == s;
    let mut again = Vec::new();
    if let TargetRows::Labeled(t2) = &back.target {
        write_dataset_csv(&mut again, &back.source, t2, false).unwrap();
    }
    same && again == buf
}

pub const GOLDEN_INPUTS: [&str; 3] = ["spcr.csv", "noise_eval.csv", "toy_points.csv"];

/// Golden SVG names that differ from the rendered output.
pub fn golden_mismatches() -> Vec<String> {
    let dir = golden_dir();
    let mut bad = Vec::new();
    for input in GOLDEN_INPUTS {
        let csv = std::fs::read(dir.join(input)).unwrap();
        for f in emit_plots(&csv[..], None).unwrap() {
            match std::fs::read(dir.join(&f.name)) {
                Ok(want) if want == f.svg.as_bytes() => {}
                _ => bad.push(f.name),
            }
        }
    }
    bad
}

pub fn criterion_10() -> Outcome {
    let logs = logs_are_bitwise_identical();
    let round = dataset_round_trip_is_exact();
    let golden = golden_mismatches();
    Outcome::new(
        logs && round && golden.is_empty(),
        format!(
            "identical logs {logs}; dataset round trip {round}; golden mismatches {:?}",
            golden
        ),
    )
}

pub fn timed(f: fn() -> Outcome) -> (Outcome, f64) {
    let t = Instant::now();
    let o = f();
    (o, t.elapsed().as_secs_f64())
}
