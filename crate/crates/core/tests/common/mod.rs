#![allow(dead_code)]

use agebo::evolution::{EvaluationRecord, Status};
use agebo::{ArchConfig, HpConfig};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Pearson statistic against equal expected counts.
pub fn chi_square_uniform(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum()
}

/// Upper 1% critical value for `df` degrees of freedom.
pub fn chi_square_critical_99(df: usize) -> f64 {
    ChiSquared::new(df as f64).unwrap().inverse_cdf(0.99)
}

pub fn record(job_id: u64, objective: f64, finish_time: f64) -> EvaluationRecord {
    EvaluationRecord {
        job_id,
        arch: ArchConfig::new(vec![(job_id % 31) as u8, 0]),
        hp: HpConfig::default(),
        objective,
        status: Status::Ok,
        submit_time: 0.0,
        finish_time,
        train_time: finish_time,
        worker_id: 0,
        note: None,
    }
}

use agebo::model::{averaged_gradients, scaled_hp, Adam, Gradients, LabeledData, NetworkPlan, TrainData};
use agebo::space::{Decision, NUM_LAYER_CHOICES};
use agebo::ArchSpace;
use ndarray::{s, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random plan with at most 3 nodes, widths up to 32, `activation_index`
/// forced on node 1 and at least one active skip.
pub fn small_plan(seed: u64, activation_index: u8) -> (ArchSpace, ArchConfig, NetworkPlan) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.gen_range(2..=3);
    let space = ArchSpace::new(m, 5, 3).unwrap();
    let layout = space.layout();
    let mut decisions: Vec<u8> = layout
        .iter()
        .map(|d| match d {
            // choices 1..=10 are the 16- and 32-unit layers
            Decision::Layer { .. } => rng.gen_range(0..=10),
            Decision::Skip { .. } => rng.gen_range(0..2),
        })
        .collect();
    let first_layer = layout.iter().position(|d| matches!(d, Decision::Layer { node: 1 })).unwrap();
    decisions[first_layer] = 1 + 5 * rng.gen_range(0..2u8) + activation_index;
    let first_skip = layout.iter().position(|d| matches!(d, Decision::Skip { .. })).unwrap();
    decisions[first_skip] = 1;
    assert!(decisions.iter().all(|&v| v < NUM_LAYER_CHOICES));
    let arch = ArchConfig::new(decisions);
    let mut plan = NetworkPlan::build(&arch, &space).unwrap();
    plan.init_params(&mut rng);
    // nonzero biases so every bias gradient path is exercised
    for p in &mut plan.params {
        p.bias.mapv_inplace(|_| rng.gen_range(-0.1..0.1));
    }
    (space, arch, plan)
}

pub fn random_batch(rows: usize, cols: usize, classes: usize, seed: u64) -> (Array2<f64>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-1.5..1.5));
    let y = (0..rows).map(|_| rng.gen_range(0..classes)).collect();
    (x, y)
}

fn param_mut(plan: &mut NetworkPlan, t: usize, idx: usize) -> &mut f64 {
    let layer = &mut plan.params[t];
    let n_w = layer.weight.len();
    if idx < n_w {
        &mut layer.weight.as_slice_mut().unwrap()[idx]
    } else {
        &mut layer.bias.as_slice_mut().unwrap()[idx - n_w]
    }
}

fn grad_at(grads: &Gradients, t: usize, idx: usize) -> f64 {
    let g = &grads[t];
    let n_w = g.weight.len();
    if idx < n_w {
        g.weight.as_slice().unwrap()[idx]
    } else {
        g.bias.as_slice().unwrap()[idx - n_w]
    }
}

/// Largest elementwise relative error between analytic gradients and a
/// five-point central difference. Denominators are floored at `1e-6`, below
/// which the difference quotient is dominated by rounding of the loss.
pub fn max_gradient_error(plan: &NetworkPlan, x: &Array2<f64>, y: &[usize]) -> f64 {
    let (_, analytic) = plan.loss_and_grad(x.view(), y).unwrap();
    let h = 1e-5;
    let mut probe = plan.clone();
    let mut worst: f64 = 0.0;
    for t in 0..plan.params.len() {
        for idx in 0..plan.params[t].num_params() {
            let original = *param_mut(&mut probe, t, idx);
            let mut at = |offset: f64| {
                *param_mut(&mut probe, t, idx) = original + offset;
                probe.loss_and_grad(x.view(), y).unwrap().0
            };
            let numeric = (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h);
            *param_mut(&mut probe, t, idx) = original;
            let a = grad_at(&analytic, t, idx);
            worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6));
        }
    }
    worst
}

use agebo::executor::Executor;
use std::collections::BTreeMap;

pub struct PoolAudit {
    /// How many times each submitted job id was delivered.
    pub deliveries: BTreeMap<u64, usize>,
    pub max_running_seen: usize,
    pub records: Vec<EvaluationRecord>,
}

impl PoolAudit {
    pub fn exactly_once(&self) -> bool {
        self.deliveries.values().all(|&c| c == 1)
    }
}

/// Keeps `pool` saturated with `jobs` submissions (at most `2 W` waiting),
/// polls until everything is delivered and checks the running count at
/// every step.
pub fn audit_pool(pool: &mut dyn Executor, jobs: usize, seed: u64) -> PoolAudit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = pool.workers();
    let mut deliveries = BTreeMap::new();
    let mut max_running_seen = 0;
    let mut records = Vec::new();
    let mut submitted = 0;
    while records.len() < jobs {
        while submitted < jobs && submitted - records.len() < 2 * w {
            let arch = ArchConfig::new(vec![rng.gen_range(0..31), rng.gen_range(0..2)]);
            let id = pool.submit(arch, HpConfig::default()).unwrap();
            deliveries.insert(id, 0);
            submitted += 1;
            max_running_seen = max_running_seen.max(pool.running());
        }
        let done = pool.get_finished();
        max_running_seen = max_running_seen.max(pool.running());
        if done.is_empty() {
            pool.wait_for_progress();
        }
        for rec in done {
            *deliveries.entry(rec.job_id).or_insert(0) += 1;
            records.push(rec);
        }
    }
    pool.shutdown(true);
    for rec in pool.get_finished() {
        *deliveries.entry(rec.job_id).or_insert(0) += 1;
        records.push(rec);
    }
    PoolAudit {
        deliveries,
        max_running_seen: max_running_seen.max(pool.peak_running()),
        records,
    }
}

/// Busy time over `W` times the span from the first start to the last
/// finish.
pub fn utilization(records: &[EvaluationRecord], workers: usize) -> f64 {
    let start = records
        .iter()
        .map(|r| r.finish_time - r.train_time)
        .fold(f64::INFINITY, f64::min);
    let end = records.iter().map(|r| r.finish_time).fold(f64::NEG_INFINITY, f64::max);
    let busy: f64 = records.iter().map(|r| r.train_time).sum();
    busy / (workers as f64 * (end - start))
}

/// Top-two explained-variance ratios from nalgebra's symmetric eigensolver.
pub fn dense_eigen_ratios(vectors: &[Vec<f64>]) -> [f64; 2] {
    let n = vectors.len();
    let d = vectors[0].len();
    let data = nalgebra::DMatrix::from_fn(n, d, |i, j| vectors[i][j]);
    let mean = data.row_mean();
    let centered = nalgebra::DMatrix::from_fn(n, d, |i, j| data[(i, j)] - mean[j]);
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    let eig = nalgebra::SymmetricEigen::new(cov);
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = values.iter().sum();
    [values[0] / total, values.get(1).copied().unwrap_or(0.0) / total]
}

/// Every ok record of a run, for analysis tests.
pub fn synthetic_log(seed: u64, len: usize) -> Vec<EvaluationRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let space = agebo::HpSpace::default();
    (0..len)
        .map(|i| EvaluationRecord {
            job_id: i as u64,
            arch: ArchConfig::new((0..5).map(|_| rng.gen_range(0..31)).collect()),
            hp: space.random_hp(&mut rng),
            objective: rng.gen_range(0.0..1.0),
            status: if rng.gen_bool(0.1) { Status::Failed } else { Status::Ok },
            submit_time: i as f64,
            finish_time: i as f64 + rng.gen_range(0.5..3.0),
            train_time: 1.0,
            worker_id: i % 4,
            note: None,
        }
        .normalized())
        .collect()
}

/// Largest parameter difference between one Adam step on `n` averaged shard
/// gradients and one step on the concatenated batch.
pub fn data_parallel_gap(n: usize, bs1: usize, seed: u64) -> f64 {
    let (_, _, plan) = small_plan(seed, (seed % 5) as u8);
    let (x, y) = random_batch(n * bs1, 5, 3, seed + 1);
    let (lr, _) = scaled_hp(0.01, bs1, n);

    let mut sharded = plan.clone();
    let shards: Vec<_> = (0..n)
        .map(|k| (x.slice(s![k * bs1..(k + 1) * bs1, ..]), &y[k * bs1..(k + 1) * bs1]))
        .collect();
    let (_, g) = averaged_gradients(&sharded, &shards, true).unwrap();
    let mut adam = Adam::new(&sharded.params, 0.9, 0.999, 1e-8);
    adam.step(&mut sharded.params, &g, lr);

    let mut whole = plan.clone();
    let (_, g) = whole.loss_and_grad(x.view(), &y).unwrap();
    let mut adam = Adam::new(&whole.params, 0.9, 0.999, 1e-8);
    adam.step(&mut whole.params, &g, lr);

    sharded
        .params
        .iter()
        .zip(&whole.params)
        .flat_map(|(a, b)| {
            (&a.weight - &b.weight)
                .into_iter()
                .chain(&a.bias - &b.bias)
                .collect::<Vec<_>>()
        })
        .fold(0.0, |m, d| m.max(d.abs()))
}

/// 80/40 train/validation split of a random toy problem; `stagnant` zeroes
/// the inputs and collapses the labels to one class.
pub fn toy_data(stagnant: bool) -> TrainData {
    let (x, y) = random_batch(120, 4, 3, 9);
    let (x, y) = if stagnant { (Array2::zeros(x.raw_dim()), vec![0; y.len()]) } else { (x, y) };
    let train = LabeledData {
        x: x.slice(s![..80, ..]).to_owned(),
        y: y[..80].to_vec(),
    };
    let valid = LabeledData {
        x: x.slice(s![80.., ..]).to_owned(),
        y: y[80..].to_vec(),
    };
    TrainData {
        train,
        valid,
        n_classes: 3,
    }
}
