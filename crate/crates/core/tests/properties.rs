use bcresnet_asc::augment::{mixup, time_roll};
use bcresnet_asc::compress::prune;
use bcresnet_asc::compress::quant::{dequantize, fake_quant_values, quantize, INT8_LIMIT};
use bcresnet_asc::config::ExperimentConfig;
use bcresnet_asc::data::{Split, SyntheticConfig, SyntheticGenerator};
use bcresnet_asc::frontend::MelConfig;
use bcresnet_asc::model::{Checkpoint, Model, ModelConfig, ParamKind, Params};
use bcresnet_asc::norm::{freq_in, res_norm, ResNorm};
use bcresnet_asc::tensor::Tensor;
use bcresnet_asc::train::{evaluate, lr_at, sgd_step, SgdState, TrainConfig};
use proptest::prelude::*;

fn tensor4(n: usize, c: usize, f: usize, t: usize) -> impl Strategy<Value = Tensor<f64>> {
    prop::collection::vec(-50.0f64..50.0, n * c * f * t).prop_map(move |d| Tensor::new(vec![n, c, f, t], d).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn frame_count_matches_loop(len in 2080usize..40_000) {
        let cfg = MelConfig::default();
        let mut frames = 0;
        let mut start = 0;
        while start + cfg.win_samples() <= len {
            frames += 1;
            start += cfg.hop_samples();
        }
        prop_assert_eq!(cfg.frames(len), frames);
    }

    #[test]
    fn freq_in_standardizes_rows(x in tensor4(2, 3, 4, 5)) {
        let eps = 1e-5;
        let y = freq_in(&x, eps).unwrap();
        let (c, f, t) = (3, 4, 5);
        for n in 0..2 {
            for fi in 0..f {
                let idx: Vec<usize> = (0..c).flat_map(|ci| (0..t).map(move |ti| ((n * c + ci) * f + fi) * t + ti)).collect();
                let m = idx.len() as f64;
                let mx = idx.iter().map(|&i| x.data()[i]).sum::<f64>() / m;
                let var_x = idx.iter().map(|&i| (x.data()[i] - mx).powi(2)).sum::<f64>() / m;
                let my = idx.iter().map(|&i| y.data()[i]).sum::<f64>() / m;
                let var_y = idx.iter().map(|&i| (y.data()[i] - my).powi(2)).sum::<f64>() / m;
                prop_assert!(my.abs() < 1e-9);
                prop_assert!((var_y - var_x / (var_x + eps)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn res_norm_is_shortcut_plus_freq_in(x in tensor4(1, 2, 3, 4), lambda in 0.0f64..2.0) {
        let r = res_norm(&x, &ResNorm::new(lambda, 1e-5).unwrap()).unwrap();
        let f = freq_in(&x, 1e-5).unwrap();
        for ((a, b), v) in r.data().iter().zip(f.data()).zip(x.data()) {
            prop_assert!((a - (lambda * v + b)).abs() < 1e-9);
        }
    }

    #[test]
    fn quantization_bounded_and_idempotent(w in prop::collection::vec(-3.0f32..3.0, 1..200)) {
        let q = quantize(&w);
        prop_assert!(q.codes.iter().all(|c| c.unsigned_abs() as i32 <= INT8_LIMIT));
        let (fq, scale) = fake_quant_values(&w);
        prop_assert_eq!(&fq, &dequantize::<f32>(&q));
        for (a, b) in w.iter().zip(&fq) {
            prop_assert!((a - b).abs() <= 0.5 * scale * (1.0 + 1e-5));
        }
        let (again, _) = fake_quant_values(&fq);
        for (a, b) in fq.iter().zip(&again) {
            prop_assert!((a - b).abs() <= scale * 1e-5);
        }
    }

    #[test]
    fn time_roll_inverts(x in tensor4(1, 1, 3, 7), s in -20isize..20) {
        let back = time_roll(&time_roll(&x, s).unwrap(), -s).unwrap();
        prop_assert_eq!(back, x);
    }

    #[test]
    fn mixup_weight_one_is_identity(a in tensor4(1, 1, 2, 3), b in tensor4(1, 1, 2, 3)) {
        let ya = Tensor::new(vec![1, 2], vec![1.0, 0.0]).unwrap();
        let yb = Tensor::new(vec![1, 2], vec![0.0, 1.0]).unwrap();
        let (x, y) = mixup(&a, &b, &ya, &yb, 1.0).unwrap();
        prop_assert_eq!(x, a);
        prop_assert_eq!(y, ya);
    }

    #[test]
    fn lr_stays_in_range(step in 0usize..1000, spe in 1usize..20) {
        let cfg = TrainConfig::default();
        let lr = lr_at(step.min(cfg.epochs * spe - 1), spe, &cfg);
        prop_assert!((0.0..=cfg.peak_lr).contains(&lr));
    }

    #[test]
    fn plain_sgd_is_gradient_descent(p in prop::collection::vec(-5.0f64..5.0, 1..20), lr in 0.0f64..1.0, seed in 0u64..1000) {
        let mut params: Params<f64> = Params::new();
        let id = params.register("w".into(), ParamKind::ConvWeight, Tensor::new(vec![p.len()], p.clone()).unwrap()).unwrap();
        let g: Vec<f64> = p.iter().enumerate().map(|(i, v)| v * 0.3 + (seed + i as u64) as f64 * 1e-3).collect();
        sgd_step(&mut params, &[(id, g.clone())], &mut SgdState::new(), lr, 0.0, 0.0).unwrap();
        for ((new, old), gi) in params.value(id).data().iter().zip(&p).zip(&g) {
            prop_assert_eq!(*new, old - lr * gi);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn pruning_cuts_smallest(ratio in 0.0f64..0.99, seed in 0u64..50) {
        let mut m = Model::new(ModelConfig::asc1(), seed).unwrap();
        let state = prune(&mut m, ratio).unwrap();
        let total = state.total();
        prop_assert_eq!(state.kept(), total - (ratio * total as f64).round() as usize);
        let (mut max_cut, mut min_kept) = (0.0f32, f32::INFINITY);
        for (id, mask) in &state.masks {
            for (w, &k) in m.params().value(*id).data().iter().zip(mask) {
                if k == 0.0 {
                    prop_assert_eq!(*w, 0.0);
                } else {
                    min_kept = min_kept.min(w.abs());
                }
            }
        }
        let fresh = Model::new(ModelConfig::asc1(), seed).unwrap();
        for (id, mask) in &state.masks {
            for (w, &k) in fresh.params().value(*id).data().iter().zip(mask) {
                if k == 0.0 {
                    max_cut = max_cut.max(w.abs());
                }
            }
        }
        prop_assert!(max_cut <= min_kept);
    }

    #[test]
    fn checkpoint_round_trip(seed in 0u64..100, compressed in any::<bool>()) {
        let m = Model::new(ModelConfig::asc1(), seed).unwrap();
        let ck = if compressed { Checkpoint::compressed(&m) } else { Checkpoint::full_precision(&m) };
        let back = Checkpoint::decode(&ck.encode()).unwrap();
        prop_assert_eq!(&back, &ck);
        if !compressed {
            let restored = back.to_model().unwrap();
            prop_assert_eq!(restored.params(), m.params());
        }
    }
}

#[test]
fn config_text_round_trip() {
    let c = ExperimentConfig::parse("model.variant = asc8\nmodel.placement = input\ncompress.ratio = 0.5\n").unwrap();
    assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
}

#[test]
fn evaluate_ignores_example_order() {
    let cfg = SyntheticConfig { train_sizes: [4, 2, 2, 2, 2, 2, 0, 0, 0], test_per_device: 6, ..SyntheticConfig::default() };
    let mut ds = SyntheticGenerator::new(cfg).unwrap().generate();
    let m = Model::new(ModelConfig::asc1(), 4).unwrap();
    let before = evaluate(&m, &ds, Split::Test).unwrap();
    ds.examples.reverse();
    ds.examples.rotate_left(7);
    assert_eq!(evaluate(&m, &ds, Split::Test).unwrap(), before);
}

#[test]
fn train_and_test_ids_disjoint() {
    let ds = SyntheticGenerator::new(SyntheticConfig::default()).unwrap().generate();
    let train: std::collections::HashSet<_> = ds.indices(Split::Train).into_iter().map(|i| ds.examples[i].id.clone()).collect();
    assert!(ds.indices(Split::Test).into_iter().all(|i| !train.contains(&ds.examples[i].id)));
    assert_eq!(train.len(), ds.indices(Split::Train).len());
}
