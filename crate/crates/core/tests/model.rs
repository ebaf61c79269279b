mod common;

use agebo::model::{scaled_hp, train, LabeledData, LrSchedule, NetworkPlan, TrainConfig, TrainData};
use agebo::space::{Activation, ACTIVATIONS};
use agebo::{ArchConfig, ArchSpace, Status};
use common::{data_parallel_gap, max_gradient_error, random_batch, small_plan, toy_data};
use ndarray::{s, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn parameter_counting() {
    let space = ArchSpace::new(1, 54, 7).unwrap();
    let logistic = NetworkPlan::build(&ArchConfig::new(vec![0, 0]), &space).unwrap();
    assert_eq!(logistic.num_params(), 54 * 7 + 7);
    // choice 3 is Dense(16, ReLU)
    let one = NetworkPlan::build(&ArchConfig::new(vec![3, 0]), &space).unwrap();
    assert_eq!(one.num_params(), (54 * 16 + 16) + (16 * 7 + 7));
    let with_skip = NetworkPlan::build(&ArchConfig::new(vec![3, 1]), &space).unwrap();
    assert_eq!(with_skip.num_projections(), 1);
    assert_eq!(with_skip.num_params(), one.num_params() + 54 * 16 + 16);
}

#[test]
fn zero_plan_is_uniform() {
    let space = ArchSpace::new(2, 6, 4).unwrap();
    let plan = NetworkPlan::build(&ArchConfig::new(vec![0, 0, 0, 0, 0]), &space).unwrap();
    let (x, y) = random_batch(10, 6, 4, 1);
    let p = plan.forward(x.view()).unwrap();
    assert!(p.iter().all(|&v| (v - 0.25).abs() < 1e-15));
    let (loss, _) = plan.loss_and_grad(x.view(), &y).unwrap();
    assert!((loss - 4f64.ln()).abs() < 1e-12);
}

#[test]
fn gradients_match_finite_differences() {
    for k in 0..20u64 {
        let (_, _, plan) = small_plan(100 + k, (k % 5) as u8);
        assert!(plan.num_projections() >= 1);
        let (x, y) = random_batch(8, 5, 3, k);
        let err = max_gradient_error(&plan, &x, &y);
        assert!(err < 1e-4, "plan {k}: relative error {err}");
    }
}

#[test]
fn activation_derivatives() {
    let h = 1e-6;
    for act in ACTIVATIONS {
        for i in -40..=40 {
            let x = i as f64 * 0.1 + 0.013;
            let numeric = (act.apply(x + h) - act.apply(x - h)) / (2.0 * h);
            assert!((numeric - act.derivative(x)).abs() < 1e-6, "{act} at {x}");
        }
    }
    assert_eq!(Activation::Swish.apply(0.0), 0.0);
    let x: f64 = 1.3;
    assert!((Activation::Swish.apply(x) - x / (1.0 + (-x).exp())).abs() < 1e-15);
}

#[test]
fn doubled_batch_is_invariant() {
    let (_, _, plan) = small_plan(7, 2);
    let (x, y) = random_batch(6, 5, 3, 3);
    let x2 = ndarray::concatenate![ndarray::Axis(0), x, x];
    let y2: Vec<usize> = y.iter().chain(&y).copied().collect();
    let (l1, g1) = plan.loss_and_grad(x.view(), &y).unwrap();
    let (l2, g2) = plan.loss_and_grad(x2.view(), &y2).unwrap();
    assert!((l1 - l2).abs() < 1e-12);
    for (a, b) in g1.iter().zip(&g2) {
        assert!((&a.weight - &b.weight).iter().all(|d| d.abs() < 1e-12));
        assert!((&a.bias - &b.bias).iter().all(|d| d.abs() < 1e-12));
    }
}

/// One Adam step on `n` shards of `bs1` rows against one step on the
/// concatenated batch; returns the largest parameter difference.
#[test]
fn shard_average_equals_full_batch() {
    for n in [2, 4] {
        for seed in 0..3 {
            let gap = data_parallel_gap(n, 16, seed);
            assert!(gap < 1e-10, "n = {n}: gap {gap}");
        }
    }
    assert_eq!(scaled_hp(0.01, 256, 8), (0.08, 2048));
    assert_eq!(scaled_hp(0.01, 256, 1), (0.01, 256));
    assert_eq!(scaled_hp(0.02, 64, 4).1, 256);
}

fn separable(n: usize, seed: u64) -> LabeledData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Array2::zeros((n, 2));
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % 2;
        let offset = if label == 0 { -1.0 } else { 1.0 };
        x[[i, 0]] = offset + rng.gen_range(-0.4..0.4);
        x[[i, 1]] = rng.gen_range(-1.0..1.0);
        y.push(label);
    }
    LabeledData { x, y }
}

#[test]
fn overfits_a_separable_set() {
    let space = ArchSpace::new(1, 2, 2).unwrap();
    // choice 13 is Dense(48, ReLU)
    let mut plan = NetworkPlan::build(&ArchConfig::new(vec![13, 0]), &space).unwrap();
    plan.init_params(&mut ChaCha8Rng::seed_from_u64(0));
    let data = separable(50, 1);
    let train_data = TrainData {
        train: data.clone(),
        valid: data.clone(),
        n_classes: 2,
    };
    let cfg = TrainConfig {
        bs1: 10,
        epochs: 60,
        ..Default::default()
    };
    let result = train(&mut plan, &train_data, &cfg).unwrap();
    assert_eq!(result.status, Status::Ok);
    assert_eq!(plan.accuracy(data.x.view(), &data.y).unwrap(), 1.0);
}

#[test]
fn protocol_warmup_and_plateau() {
    let space = ArchSpace::new(1, 4, 3).unwrap();
    let data = toy_data(false);
    let cfg = TrainConfig {
        n_shards: 4,
        bs1: 8,
        threaded: false,
        ..Default::default()
    };
    let mut plan = NetworkPlan::build(&ArchConfig::new(vec![8, 0]), &space).unwrap();
    plan.init_params(&mut ChaCha8Rng::seed_from_u64(1));
    let result = train(&mut plan, &data, &cfg).unwrap();
    assert_eq!(result.history.len(), 20);
    let lr_n = cfg.scaled_hp().0;
    assert_eq!(result.history[4].lr, lr_n);
    assert_eq!(result.history[0].lr, cfg.lr1);
    assert!(result.history.iter().all(|e| e.lr <= lr_n));
    assert!((0.0..=1.0).contains(&result.valid_accuracy));

    // constant inputs and a single class: validation accuracy is 1 from the
    // first epoch on and never improves
    let mut plan = NetworkPlan::build(&ArchConfig::new(vec![0, 0]), &space).unwrap();
    let result = train(&mut plan, &toy_data(true), &cfg).unwrap();
    let lrs: Vec<f64> = result.history.iter().map(|e| e.lr).collect();
    assert_eq!(lrs[5], lr_n);
    assert!((lrs[6] - 0.1 * lr_n).abs() < 1e-15);
    assert!((lrs[11] - 0.01 * lr_n).abs() < 1e-15);

    let mut schedule = LrSchedule::new(&cfg);
    assert!(!schedule.observe(0.5));
    let reductions: Vec<bool> = (0..5).map(|_| schedule.observe(0.5)).collect();
    assert_eq!(reductions, vec![false, false, false, false, true]);
}

#[test]
fn single_threaded_training_is_deterministic() {
    let space = ArchSpace::new(2, 4, 3).unwrap();
    let arch = ArchConfig::new(vec![9, 22, 1, 0, 1]);
    let cfg = TrainConfig {
        n_shards: 2,
        bs1: 16,
        epochs: 6,
        threaded: false,
        ..Default::default()
    };
    let run = || {
        let mut plan = NetworkPlan::build(&arch, &space).unwrap();
        plan.init_params(&mut ChaCha8Rng::seed_from_u64(3));
        let r = train(&mut plan, &toy_data(false), &cfg).unwrap();
        (r.history, r.valid_accuracy, plan.params)
    };
    assert_eq!(run(), run());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn probabilities_sum_to_one(seed in any::<u64>(), act in 0u8..5) {
        let (_, _, plan) = small_plan(seed, act);
        let (x, _) = random_batch(20, 5, 3, seed);
        let p = plan.forward(x.view()).unwrap();
        for row in p.rows() {
            prop_assert!((row.sum() - 1.0).abs() < 1e-12);
            prop_assert!(row.iter().all(|&v| v >= 0.0));
        }
        let twin = ndarray::concatenate![ndarray::Axis(0), x.slice(s![..1, ..]), x.slice(s![..1, ..])];
        let q = plan.forward(twin.view()).unwrap();
        prop_assert_eq!(q.row(0), q.row(1));
    }
}
