//! Dense networks with skip connections, and their data-parallel training.
//!
//! A plan follows the node chain of an [`ArchSpace`]. Node `j` reads the
//! output of node `j - 1`; when skip connections into `j` are active, every
//! skip source goes through its own linear projection, the projections are
//! summed with the output of `j - 1` and the sum is passed through ReLU
//! before entering node `j`. The output node is a softmax classifier.
//!
//! Training runs Adam on synchronously averaged shard gradients, with the
//! learning rate and batch size scaled linearly in the shard count, a linear
//! warmup and a reduce-on-plateau schedule.

use std::time::Instant;

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::Status;
use crate::space::{Activation, ArchConfig, ArchSpace, Decision, LayerChoice, LayerKind};

/// Affine map `x W + b` with `W` stored as `[in, out]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Linear {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weight: Array2::zeros((fan_in, fan_out)),
            bias: Array1::zeros(fan_out),
        }
    }

    pub fn fan_in(&self) -> usize {
        self.weight.nrows()
    }

    pub fn fan_out(&self) -> usize {
        self.weight.ncols()
    }

    pub fn num_params(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    fn apply(&self, x: &ArrayView2<f64>) -> Array2<f64> {
        x.dot(&self.weight) + &self.bias
    }

    fn zeros_like(&self) -> Self {
        Self::zeros(self.fan_in(), self.fan_out())
    }
}

/// Per-parameter-tensor gradients, aligned with [`NetworkPlan::params`].
pub type Gradients = Vec<Linear>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeSpec {
    PassThrough,
    Dense {
        units: usize,
        activation: Activation,
        linear: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SkipEdge {
    pub source: usize,
    pub dest: usize,
    /// Index of the projection in [`NetworkPlan::params`].
    pub projection: usize,
}

#[derive(Debug, Clone)]
pub struct NetworkPlan {
    pub input_dim: usize,
    pub output_dim: usize,
    /// Variable nodes `1..=m`, stored at `nodes[j - 1]`.
    pub nodes: Vec<NodeSpec>,
    /// Index of the softmax layer in `params`.
    pub output_linear: usize,
    pub skip_edges: Vec<SkipEdge>,
    pub params: Vec<Linear>,
    /// Output width of nodes `0..=m`.
    widths: Vec<usize>,
}

struct Trace {
    /// Output of nodes `0..=m`.
    outputs: Vec<Array2<f64>>,
    /// Input of nodes `1..=m+1` after the skip merge.
    inputs: Vec<Array2<f64>>,
    /// Pre-ReLU merge sum, for nodes with active skips.
    merged: Vec<Option<Array2<f64>>>,
    /// Dense pre-activations of nodes `1..=m+1`.
    pre: Vec<Option<Array2<f64>>>,
    logits: Array2<f64>,
}

impl NetworkPlan {
    /// Materializes `arch` with zero-valued parameters.
    pub fn build(arch: &ArchConfig, space: &ArchSpace) -> Result<Self> {
        space.validate(arch)?;
        let m = space.num_nodes;
        let mut layers = vec![LayerKind::PassThrough; m];
        let mut active: Vec<Vec<usize>> = vec![Vec::new(); m + 2];
        for (decision, &value) in space.layout().iter().zip(&arch.decisions) {
            match *decision {
                Decision::Layer { node } => layers[node - 1] = LayerChoice::new(value)?.decode(),
                Decision::Skip { source, dest } if value == 1 => active[dest].push(source),
                Decision::Skip { .. } => {}
            }
        }

        let mut widths = vec![space.input_dim];
        let mut params = Vec::new();
        let mut nodes = Vec::with_capacity(m);
        let mut skip_edges = Vec::new();
        for dest in 1..=m + 1 {
            let in_width = widths[dest - 1];
            for &source in &active[dest] {
                skip_edges.push(SkipEdge {
                    source,
                    dest,
                    projection: params.len(),
                });
                params.push(Linear::zeros(widths[source], in_width));
            }
            if dest == m + 1 {
                break;
            }
            match layers[dest - 1] {
                LayerKind::PassThrough => {
                    nodes.push(NodeSpec::PassThrough);
                    widths.push(in_width);
                }
                LayerKind::Dense { units, activation } => {
                    nodes.push(NodeSpec::Dense {
                        units,
                        activation,
                        linear: params.len(),
                    });
                    params.push(Linear::zeros(in_width, units));
                    widths.push(units);
                }
            }
        }
        let output_linear = params.len();
        params.push(Linear::zeros(widths[m], space.output_dim));
        Ok(Self {
            input_dim: space.input_dim,
            output_dim: space.output_dim,
            nodes,
            output_linear,
            skip_edges,
            params,
            widths,
        })
    }

    pub fn num_params(&self) -> usize {
        self.params.iter().map(Linear::num_params).sum()
    }

    pub fn num_projections(&self) -> usize {
        self.skip_edges.len()
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init_params<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for p in &mut self.params {
            let limit = (6.0 / (p.fan_in() + p.fan_out()) as f64).sqrt();
            p.weight.mapv_inplace(|_| rng.gen_range(-limit..=limit));
            p.bias.fill(0.0);
        }
    }

    fn skips_into(&self, dest: usize) -> impl Iterator<Item = &SkipEdge> {
        self.skip_edges.iter().filter(move |e| e.dest == dest)
    }

    fn check_batch(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim {
            return Err(Error::Shape {
                expected: format!("{} input columns", self.input_dim),
                actual: format!("{} columns", x.ncols()),
            });
        }
        Ok(())
    }

    fn trace(&self, x: ArrayView2<f64>) -> Trace {
        let m = self.nodes.len();
        let mut outputs: Vec<Array2<f64>> = vec![x.to_owned()];
        let mut inputs = Vec::with_capacity(m + 1);
        let mut merged = Vec::with_capacity(m + 1);
        let mut pre = Vec::with_capacity(m + 1);
        for dest in 1..=m + 1 {
            let mut sum: Option<Array2<f64>> = None;
            for edge in self.skips_into(dest) {
                let projected = self.params[edge.projection].apply(&outputs[edge.source].view());
                sum = Some(match sum {
                    Some(acc) => acc + projected,
                    None => projected + &outputs[dest - 1],
                });
            }
            let input = match &sum {
                Some(s) => s.mapv(|v| v.max(0.0)),
                None => outputs[dest - 1].clone(),
            };
            merged.push(sum);
            if dest == m + 1 {
                let z = self.params[self.output_linear].apply(&input.view());
                inputs.push(input);
                pre.push(None);
                return Trace {
                    outputs,
                    inputs,
                    merged,
                    pre,
                    logits: z,
                };
            }
            match self.nodes[dest - 1] {
                NodeSpec::PassThrough => {
                    outputs.push(input.clone());
                    pre.push(None);
                }
                NodeSpec::Dense {
                    activation, linear, ..
                } => {
                    let z = self.params[linear].apply(&input.view());
                    outputs.push(z.mapv(|v| activation.apply(v)));
                    pre.push(Some(z));
                }
            }
            inputs.push(input);
        }
        unreachable!("loop returns at the output node")
    }

    /// Class probabilities, one row per input row.
    pub fn forward(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_batch(&x)?;
        let mut p = self.trace(x).logits;
        softmax_rows(&mut p);
        Ok(p)
    }

    pub fn predict_classes(&self, x: ArrayView2<f64>) -> Result<Vec<usize>> {
        self.check_batch(&x)?;
        let logits = self.trace(x).logits;
        Ok(logits.rows().into_iter().map(|r| argmax(r.iter().copied())).collect())
    }

    /// Fraction of rows whose arg-max class matches `labels`.
    pub fn accuracy(&self, x: ArrayView2<f64>, labels: &[usize]) -> Result<f64> {
        if labels.is_empty() {
            return Err(Error::EmptyInput("accuracy labels"));
        }
        let pred = self.predict_classes(x)?;
        let hits = pred.iter().zip(labels).filter(|(p, y)| p == y).count();
        Ok(hits as f64 / labels.len() as f64)
    }

    /// Mean softmax cross-entropy and its gradient with respect to `params`.
    pub fn loss_and_grad(&self, x: ArrayView2<f64>, labels: &[usize]) -> Result<(f64, Gradients)> {
        self.check_batch(&x)?;
        if x.nrows() != labels.len() || labels.is_empty() {
            return Err(Error::Shape {
                expected: format!("{} labels", x.nrows()),
                actual: format!("{} labels", labels.len()),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= self.output_dim) {
            return Err(Error::InvalidInput(format!("label {bad} outside [0, {})", self.output_dim)));
        }
        let trace = self.trace(x);
        let batch = labels.len() as f64;

        let mut loss = 0.0;
        let mut g_z = trace.logits.clone();
        for (mut row, &y) in g_z.rows_mut().into_iter().zip(labels) {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            loss += lse - row[y];
            row.mapv_inplace(|v| (v - lse).exp() / batch);
            row[y] -= 1.0 / batch;
        }
        loss /= batch;
        if !loss.is_finite() || g_z.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged(format!("non-finite loss {loss}")));
        }

        let m = self.nodes.len();
        let mut grads: Gradients = self.params.iter().map(Linear::zeros_like).collect();
        let mut g_out: Vec<Option<Array2<f64>>> = vec![None; m + 1];
        for dest in (1..=m + 1).rev() {
            let input = &trace.inputs[dest - 1];
            let g_in = if dest == m + 1 {
                dense_backward(&self.params[self.output_linear], input, g_z.view(), &mut grads[self.output_linear])
            } else {
                let Some(g) = g_out[dest].take() else {
                    // nothing downstream depends on this node
                    continue;
                };
                match self.nodes[dest - 1] {
                    NodeSpec::PassThrough => g,
                    NodeSpec::Dense {
                        activation, linear, ..
                    } => {
                        let z = trace.pre[dest - 1].as_ref().expect("dense node keeps its pre-activation");
                        let mut g_pre = g;
                        Zip::from(&mut g_pre).and(z).for_each(|g, &z| *g *= activation.derivative(z));
                        dense_backward(&self.params[linear], input, g_pre.view(), &mut grads[linear])
                    }
                }
            };
            match &trace.merged[dest - 1] {
                Some(sum) => {
                    let mut g_sum = g_in;
                    Zip::from(&mut g_sum).and(sum).for_each(|g, &s| {
                        if s <= 0.0 {
                            *g = 0.0;
                        }
                    });
                    for edge in self.skips_into(dest) {
                        let g_src = dense_backward(
                            &self.params[edge.projection],
                            &trace.outputs[edge.source],
                            g_sum.view(),
                            &mut grads[edge.projection],
                        );
                        accumulate(&mut g_out[edge.source], g_src);
                    }
                    accumulate(&mut g_out[dest - 1], g_sum);
                }
                None => accumulate(&mut g_out[dest - 1], g_in),
            }
        }
        Ok((loss, grads))
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }
}

fn dense_backward(layer: &Linear, input: &Array2<f64>, g_z: ArrayView2<f64>, grad: &mut Linear) -> Array2<f64> {
    grad.weight += &input.t().dot(&g_z);
    grad.bias += &g_z.sum_axis(Axis(0));
    g_z.dot(&layer.weight.t())
}

fn accumulate(slot: &mut Option<Array2<f64>>, g: Array2<f64>) {
    match slot {
        Some(acc) => *acc += &g,
        None => *slot = Some(g),
    }
}

fn softmax_rows(z: &mut Array2<f64>) {
    for mut row in z.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
}

fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Averages per-shard mean gradients with equal weight.
///
/// Shards are evaluated on scoped threads when `threaded` is set; the
/// reduction always runs in shard order.
pub fn averaged_gradients(
    plan: &NetworkPlan,
    shards: &[(ArrayView2<f64>, &[usize])],
    threaded: bool,
) -> Result<(f64, Gradients)> {
    if shards.is_empty() {
        return Err(Error::EmptyInput("shard batches"));
    }
    let results: Vec<Result<(f64, Gradients)>> = if threaded && shards.len() > 1 {
        std::thread::scope(|s| {
            let handles: Vec<_> = shards
                .iter()
                .map(|(x, y)| s.spawn(move || plan.loss_and_grad(x.view(), y)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("shard worker panicked"))
                .collect()
        })
    } else {
        shards.iter().map(|(x, y)| plan.loss_and_grad(x.view(), y)).collect()
    };
    let scale = 1.0 / shards.len() as f64;
    let mut iter = results.into_iter();
    let (mut loss, mut total) = iter.next().expect("at least one shard")?;
    for r in iter {
        let (l, g) = r?;
        loss += l;
        for (acc, g) in total.iter_mut().zip(g) {
            acc.weight += &g.weight;
            acc.bias += &g.bias;
        }
    }
    for g in &mut total {
        g.weight *= scale;
        g.bias *= scale;
    }
    Ok((loss * scale, total))
}

#[derive(Debug, Clone)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: i32,
    first: Vec<Linear>,
    second: Vec<Linear>,
}

impl Adam {
    pub fn new(params: &[Linear], beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            beta1,
            beta2,
            eps,
            step: 0,
            first: params.iter().map(Linear::zeros_like).collect(),
            second: params.iter().map(Linear::zeros_like).collect(),
        }
    }

    pub fn steps_taken(&self) -> i32 {
        self.step
    }

    pub fn step(&mut self, params: &mut [Linear], grads: &[Linear], lr: f64) {
        self.step += 1;
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let c1 = 1.0 - b1.powi(self.step);
        let c2 = 1.0 - b2.powi(self.step);
        let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
        };
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.first).zip(&mut self.second) {
            Zip::from(&mut p.weight)
                .and(&mut m.weight)
                .and(&mut v.weight)
                .and(&g.weight)
                .for_each(|p, m, v, &g| update(p, m, v, g));
            Zip::from(&mut p.bias)
                .and(&mut m.bias)
                .and(&mut v.bias)
                .and(&g.bias)
                .for_each(|p, m, v, &g| update(p, m, v, g));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr1: f64,
    pub bs1: usize,
    pub n_shards: usize,
    pub epochs: usize,
    pub warmup_epochs: usize,
    pub plateau_patience: usize,
    pub plateau_factor: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
    /// Run shard gradients on separate threads.
    pub threaded: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr1: 0.01,
            bs1: 256,
            n_shards: 1,
            epochs: 20,
            warmup_epochs: 5,
            plateau_patience: 5,
            plateau_factor: 0.1,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
            threaded: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.warmup_epochs > self.epochs {
            return Err(Error::InvalidConfig("warmup_epochs exceeds epochs".into()));
        }
        if !(self.plateau_factor > 0.0 && self.plateau_factor < 1.0) {
            return Err(Error::InvalidConfig("plateau_factor must lie in (0, 1)".into()));
        }
        if self.bs1 == 0 || self.n_shards == 0 {
            return Err(Error::InvalidConfig("bs1 and n_shards must be positive".into()));
        }
        if !(self.lr1 >= 0.0 && self.lr1.is_finite()) {
            return Err(Error::InvalidConfig(format!("learning rate {} is invalid", self.lr1)));
        }
        Ok(())
    }

    /// Linearly scaled `(lr_n, bs_n)` for `n_shards` processes.
    pub fn scaled_hp(&self) -> (f64, usize) {
        scaled_hp(self.lr1, self.bs1, self.n_shards)
    }
}

pub fn scaled_hp(lr1: f64, bs1: usize, n: usize) -> (f64, usize) {
    (n as f64 * lr1, n * bs1)
}

/// Warmup followed by reduce-on-plateau on validation accuracy.
#[derive(Debug, Clone)]
pub struct LrSchedule {
    lr1: f64,
    lr_n: f64,
    warmup_epochs: usize,
    patience: usize,
    factor: f64,
    best: f64,
    wait: usize,
    decay: f64,
}

impl LrSchedule {
    pub fn new(cfg: &TrainConfig) -> Self {
        Self {
            lr1: cfg.lr1,
            lr_n: cfg.scaled_hp().0,
            warmup_epochs: cfg.warmup_epochs,
            patience: cfg.plateau_patience,
            factor: cfg.plateau_factor,
            best: f64::NEG_INFINITY,
            wait: 0,
            decay: 1.0,
        }
    }

    /// Learning rate used during 1-based `epoch`. Warmup ramps linearly from
    /// `lr1` in the first epoch to `lr_n` in epoch `warmup_epochs`.
    pub fn lr(&self, epoch: usize) -> f64 {
        let base = if epoch >= self.warmup_epochs || self.warmup_epochs <= 1 {
            self.lr_n
        } else {
            let t = (epoch.max(1) - 1) as f64 / (self.warmup_epochs - 1) as f64;
            self.lr1 + (self.lr_n - self.lr1) * t
        };
        base * self.decay
    }

    /// Records an epoch's validation accuracy; returns `true` when the
    /// learning rate was reduced.
    pub fn observe(&mut self, accuracy: f64) -> bool {
        if accuracy > self.best {
            self.best = accuracy;
            self.wait = 0;
            return false;
        }
        self.wait += 1;
        if self.wait >= self.patience {
            self.decay *= self.factor;
            self.wait = 0;
            return true;
        }
        false
    }
}

/// Feature rows with class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledData {
    pub x: Array2<f64>,
    pub y: Vec<usize>,
}

impl LabeledData {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainData {
    pub train: LabeledData,
    pub valid: LabeledData,
    pub n_classes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub train_loss: f64,
    pub valid_accuracy: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainResult {
    /// Validation accuracy after the final epoch; `0` when failed.
    pub valid_accuracy: f64,
    pub history: Vec<EpochStats>,
    pub wall_time: f64,
    pub status: Status,
}

/// Splits `0..len` after a seeded shuffle into `n` contiguous shards whose
/// sizes differ by at most one.
pub fn make_shards(len: usize, n: usize, rng: &mut impl Rng) -> Vec<Vec<usize>> {
    let mut perm: Vec<usize> = (0..len).collect();
    perm.shuffle(rng);
    let n = n.clamp(1, len.max(1));
    let (base, extra) = (len / n, len % n);
    let mut shards = Vec::with_capacity(n);
    let mut start = 0;
    for s in 0..n {
        let size = base + usize::from(s < extra);
        shards.push(perm[start..start + size].to_vec());
        start += size;
    }
    shards
}

/// Trains `plan` in place. Parameters are used as given, so callers
/// initialize them first.
pub fn train(plan: &mut NetworkPlan, data: &TrainData, cfg: &TrainConfig) -> Result<TrainResult> {
    cfg.validate()?;
    if data.train.is_empty() || data.valid.is_empty() {
        return Err(Error::InvalidData("training and validation splits must be non-empty".into()));
    }
    for split in [&data.train, &data.valid] {
        if split.x.nrows() != split.len() {
            return Err(Error::InvalidData("feature rows and labels disagree".into()));
        }
        plan.check_batch(&split.x.view())?;
    }
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut shards = make_shards(data.train.len(), cfg.n_shards, &mut rng);
    let steps = shards.iter().map(Vec::len).min().unwrap_or(0).div_ceil(cfg.bs1);

    let mut adam = Adam::new(&plan.params, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    let mut schedule = LrSchedule::new(cfg);
    let mut history = Vec::with_capacity(cfg.epochs);
    let failed = |history: Vec<EpochStats>, started: Instant| TrainResult {
        valid_accuracy: 0.0,
        history,
        wall_time: started.elapsed().as_secs_f64(),
        status: Status::Failed,
    };

    for epoch in 1..=cfg.epochs {
        let lr = schedule.lr(epoch);
        for shard in &mut shards {
            shard.shuffle(&mut rng);
        }
        let mut loss_sum = 0.0;
        for step in 0..steps {
            let batches: Vec<(Array2<f64>, Vec<usize>)> = shards
                .iter()
                .map(|shard| {
                    let start = step * cfg.bs1;
                    let end = if step + 1 == steps { shard.len() } else { start + cfg.bs1 };
                    let idx = &shard[start..end];
                    (
                        data.train.x.select(Axis(0), idx),
                        idx.iter().map(|&i| data.train.y[i]).collect(),
                    )
                })
                .collect();
            let views: Vec<(ArrayView2<f64>, &[usize])> =
                batches.iter().map(|(x, y)| (x.view(), y.as_slice())).collect();
            let (loss, grads) = match averaged_gradients(plan, &views, cfg.threaded) {
                Ok(r) => r,
                Err(Error::Diverged(_)) => return Ok(failed(history, started)),
                Err(e) => return Err(e),
            };
            loss_sum += loss;
            adam.step(&mut plan.params, &grads, lr);
        }
        let valid_accuracy = plan.accuracy(data.valid.x.view(), &data.valid.y)?;
        if plan.params.iter().any(|p| p.weight.iter().any(|v| !v.is_finite())) {
            return Ok(failed(history, started));
        }
        history.push(EpochStats {
            train_loss: loss_sum / steps.max(1) as f64,
            valid_accuracy,
            lr,
        });
        schedule.observe(valid_accuracy);
    }
    Ok(TrainResult {
        valid_accuracy: history.last().map_or(0.0, |h| h.valid_accuracy),
        history,
        wall_time: started.elapsed().as_secs_f64(),
        status: Status::Ok,
    })
}
