use std::collections::BTreeSet;

use proptest::prelude::*;

use unida_core::harness::{read_eval_rows, read_step_log, write_eval_rows, write_step_log, EvalRow, StepLog};
use unida_core::losses::{adv_alignment_loss, source_ce_loss, ssl_loss, SslVariant};
use unida_core::metrics::{batch_noise_rate, h_score, principal_direction};
use unida_core::ndcore::{
    grad_reverse, mlp_forward, sgd_step, Activation, GradBundle, Matrix, MlpParams, SeededRng, Velocity,
};
use unida_core::synthdata::{make_unida_dataset, ClusterConfig, LabelSplit, ShiftSpec};
use unida_core::weighting::{
    apply_flip_mask, confidence, energy, entropy, flip_mask, oracle_weights, to_weight, Normalization,
    UncertaintyKind, WeightConfig,
};

fn probs(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-6.0f64..6.0, k).prop_map(|z| {
        let e: Vec<f64> = z.iter().map(|v| v.exp()).collect();
        let s: f64 = e.iter().sum();
        e.iter().map(|v| v / s).collect()
    })
}

fn prob_batch() -> impl Strategy<Value = (usize, Vec<Vec<f64>>)> {
    (2usize..8).prop_flat_map(|k| (Just(k), prop::collection::vec(probs(k), 2..20)))
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-3.0f64..3.0, rows * cols).prop_map(move |d| Matrix::new(rows, cols, d).unwrap())
}

fn kind() -> impl Strategy<Value = UncertaintyKind> {
    prop::sample::select(UncertaintyKind::ALL.to_vec())
}

proptest! {
    #[test]
    fn less_uncertain_never_weighs_less((k, batch) in prob_batch(), kind in kind(), minmax in any::<bool>()) {
        let (scores, u): (Vec<f64>, Vec<f64>) = batch.iter().map(|p| match kind {
            UncertaintyKind::Entropy => { let s = entropy(p).unwrap(); (s, s) }
            UncertaintyKind::Confidence => { let s = confidence(p).unwrap(); (s, -s) }
            UncertaintyKind::Energy => { let s = energy(p).unwrap(); (s, s) }
            // any nonnegative score stands in for a centroid distance
            UncertaintyKind::Distance => { let s = 10.0 * p[0]; (s, s) }
        }).unzip();
        let cfg = WeightConfig {
            kind,
            normalization: if minmax { Normalization::BatchMinmax } else { Normalization::ClosedForm },
            threshold: 0.5,
        };
        let w = to_weight(&scores, &cfg, k).unwrap();
        for i in 0..w.len() {
            prop_assert!((0.0..=1.0).contains(&w[i]));
            for j in 0..w.len() {
                if u[i] < u[j] {
                    prop_assert!(w[i] >= w[j], "u {} < {} but w {} < {}", u[i], u[j], w[i], w[j]);
                }
            }
        }
    }

    #[test]
    fn scores_are_permutation_invariant(p in probs(6), seed in any::<u64>()) {
        let mut q = p.clone();
        SeededRng::new(seed).shuffle(&mut q);
        prop_assert!((entropy(&p).unwrap() - entropy(&q).unwrap()).abs() < 1e-12);
        prop_assert_eq!(confidence(&p).unwrap(), confidence(&q).unwrap());
        prop_assert!((energy(&p).unwrap() - energy(&q).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn same_flip_mask_twice_is_identity(bits in prop::collection::vec(any::<bool>(), 1..200), rate in 0.0f64..=1.0, seed in any::<u64>()) {
        let w: Vec<f64> = bits.iter().map(|&b| f64::from(u8::from(b))).collect();
        let mask = flip_mask(w.len(), rate, &mut SeededRng::new(seed)).unwrap();
        let twice = apply_flip_mask(&apply_flip_mask(&w, &mask).unwrap(), &mask).unwrap();
        prop_assert_eq!(twice, w);
    }

    #[test]
    fn oracle_weights_have_zero_noise(labels in prop::collection::vec(0usize..10, 1..100), common in prop::collection::btree_set(0usize..10, 0..10)) {
        let w = oracle_weights(&labels, &common);
        prop_assert_eq!(batch_noise_rate(&w, &labels, &common, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn h_score_bounds(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let h = h_score(a, b);
        prop_assert_eq!(h, h_score(b, a));
        prop_assert!(h <= (a + b) / 2.0 + 1e-15);
        let (lo, hi) = (a.min(b), a.max(b));
        if hi > 0.0 {
            prop_assert!(h <= 2.0 * lo / (1.0 + lo / hi) + 1e-15);
        }
    }

    #[test]
    fn noise_rate_ignores_partition_preserving_reweighting(
        w in prop::collection::vec(0.0f64..=1.0, 1..60),
        labels in prop::collection::vec(0usize..6, 60),
        gamma in 0.2f64..5.0,
    ) {
        let labels = &labels[..w.len()];
        let common: BTreeSet<usize> = [0, 2, 3].into();
        // strictly increasing, fixes 0.5
        let f = |v: f64| if v >= 0.5 { 0.5 + 0.5 * ((v - 0.5) / 0.5).powf(gamma) } else { 0.5 * (v / 0.5).powf(gamma) };
        let w2: Vec<f64> = w.iter().map(|&v| f(v)).collect();
        prop_assert_eq!(
            batch_noise_rate(&w, labels, &common, 0.5).unwrap(),
            batch_noise_rate(&w2, labels, &common, 0.5).unwrap()
        );
    }

    #[test]
    fn principal_direction_is_unit_and_signed(m in matrix(12, 4)) {
        if let Ok(pd) = principal_direction(&m) {
            let n: f64 = pd.direction.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!((n - 1.0).abs() < 1e-12);
            let first = pd.direction.iter().find(|v| **v != 0.0).copied().unwrap();
            prop_assert!(first > 0.0);
        }
    }

    #[test]
    fn adversarial_loss_is_homogeneous_in_weights(
        ds in prop::collection::vec(0.01f64..0.99, 1..20),
        dt in prop::collection::vec(0.01f64..0.99, 1..20),
        c in 0.01f64..=1.0,
        seed in any::<u64>(),
    ) {
        let mut rng = SeededRng::new(seed);
        let ws: Vec<f64> = ds.iter().map(|_| rng.uniform()).collect();
        let wt: Vec<f64> = dt.iter().map(|_| rng.uniform()).collect();
        let scaled = |w: &[f64]| w.iter().map(|v| c * v).collect::<Vec<_>>();
        let zero_t = vec![0.0; dt.len()];
        let zero_s = vec![0.0; ds.len()];
        // source and target terms separately
        for (a, b, a2, b2) in [
            (ws.clone(), zero_t.clone(), scaled(&ws), zero_t.clone()),
            (zero_s.clone(), wt.clone(), zero_s.clone(), scaled(&wt)),
        ] {
            let base = adv_alignment_loss(&ds, &dt, &a, &b).unwrap().value;
            let s = adv_alignment_loss(&ds, &dt, &a2, &b2).unwrap().value;
            prop_assert!(base >= 0.0);
            prop_assert!((s - c * base).abs() <= 1e-12 * base.max(1e-300));
        }
    }

    #[test]
    fn plain_ssl_is_symmetric_and_nonnegative(a in matrix(5, 3), b in matrix(5, 3)) {
        let ab = ssl_loss(&a, &b, SslVariant::PlainL2).unwrap().value;
        let ba = ssl_loss(&b, &a, SslVariant::PlainL2).unwrap().value;
        prop_assert_eq!(ab, ba);
        prop_assert!(ab >= 0.0);
    }

    #[test]
    fn cross_entropy_is_nonnegative(z in matrix(6, 4), labels in prop::collection::vec(0usize..4, 6)) {
        prop_assert!(source_ce_loss(&z, &labels).unwrap().0 >= 0.0);
    }

    #[test]
    fn double_reversal_is_identity(g in matrix(4, 3)) {
        prop_assert_eq!(grad_reverse(&grad_reverse(&g, 1.0), 1.0), g);
    }

    #[test]
    fn vanishing_learning_rate_is_bitwise_noop(seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let params = MlpParams::init(&[3, 5, 2], &[Activation::Relu, Activation::Identity], &mut rng).unwrap();
        let x = Matrix::new(4, 3, (0..12).map(|_| rng.normal()).collect()).unwrap();
        let (_, cache) = mlp_forward(&params, &x).unwrap();
        let g = unida_core::ndcore::mlp_backward(&params, &cache, &Matrix::new(4, 2, vec![0.3; 8]).unwrap()).unwrap();
        let mut p = params.clone();
        let mut v = Velocity::zeros_like(&p);
        sgd_step(&mut p, &GradBundle { input: None, ..g }, 1e-300, 0.0, &mut v).unwrap();
        // zero-initialised biases legitimately move; everything else is far above 1e-300
        for (a, b) in p.to_flat().iter().zip(params.to_flat()) {
            if b != 0.0 {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn forward_is_deterministic(seed in any::<u64>(), x in matrix(3, 3)) {
        let params = MlpParams::init(&[3, 4, 2], &[Activation::Relu, Activation::Sigmoid], &mut SeededRng::new(seed)).unwrap();
        prop_assert_eq!(mlp_forward(&params, &x).unwrap().0, mlp_forward(&params, &x).unwrap().0);
    }

    #[test]
    fn step_log_round_trips(rows in prop::collection::vec((any::<f64>(), any::<f64>(), 0.0f64..1.0), 0..20)) {
        let log: Vec<StepLog> = rows.iter().enumerate().filter(|(_, r)| r.0.is_finite() && r.1.is_finite()).map(|(i, r)| StepLog {
            step: i, l_s: r.0, l_adv: r.1.abs(), l_ssl: r.2, noise_src: r.2, noise_tgt: 1.0 - r.2, noise_pool: r.2 / 3.0,
        }).collect();
        let mut buf = Vec::new();
        write_step_log(&mut buf, &log).unwrap();
        prop_assert_eq!(read_step_log(&buf[..]).unwrap(), log);
    }

    #[test]
    fn eval_rows_round_trip(vals in prop::collection::vec((any::<u64>(), 0.0f64..=1.0, prop::option::of(0.0f64..=1.0), "[a-z_]{1,12}"), 0..10)) {
        let rows: Vec<EvalRow> = vals.iter().map(|(seed, a, p, arm)| EvalRow {
            config_hash: format!("{seed:016x}"), seed: *seed, spcr: a * 7.0, flip_rate: *a, alpha: 1.0 - a,
            acc_common: *a, acc_private: *p, h_score: p.map_or(*a, |q| h_score(*a, q)), misclass_sp: a / 3.0,
            arm: arm.clone(), tp_prop: a / 2.0, noise_tgt: a * a,
        }).collect();
        let mut buf = Vec::new();
        write_eval_rows(&mut buf, &rows).unwrap();
        prop_assert_eq!(read_eval_rows(&buf[..]).unwrap(), rows);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_data_is_reproducible_and_labelled(seed in any::<u64>(), sp in 0usize..4, c in 1usize..4, tp in 0usize..4) {
        let cfg = ClusterConfig {
            split: LabelSplit::new(sp, c, tp).unwrap(),
            dim: 4,
            separation: 2.0,
            mean_spread: 3.0,
            cluster_sigma: 0.5,
            samples_per_class: 10,
            shift: ShiftSpec { rotation: 0.4, translation: 1.0 },
        };
        let a = make_unida_dataset(&cfg, &mut SeededRng::new(seed)).unwrap();
        let b = make_unida_dataset(&cfg, &mut SeededRng::new(seed)).unwrap();
        prop_assert_eq!(&a.0, &b.0);
        prop_assert_eq!(&a.1, &b.1);
        prop_assert_eq!(a.1.common_set().len(), c);
        prop_assert!(a.1.hidden_labels().iter().all(|&y| !cfg.split.is_source_private(y)));
    }
}
