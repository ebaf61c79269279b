//! Nonblocking manager/worker evaluation.
//!
//! The controller talks to an [`Executor`]: `submit` returns immediately,
//! `get_finished` hands back whatever completed since the previous poll, in
//! completion order. Two pools implement it:
//!
//! * [`ThreadPool`] runs `W` worker threads against the wall clock.
//! * [`SimulatedPool`] is a discrete-event simulation on a virtual clock; job
//!   durations come from the backend, so runs are reproducible and cost no
//!   real time.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::panic::{self, AssertUnwindSafe};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::evolution::{EvaluationRecord, Status};
use crate::model::{train, NetworkPlan, TrainConfig, TrainData};
use crate::space::{Activation, ArchConfig, ArchSpace, Decision, HpConfig, LayerChoice, LayerKind};

pub type JobId = u64;

#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub id: JobId,
    pub arch: ArchConfig,
    pub hp: HpConfig,
    pub submit_time: f64,
}

/// Outcome of evaluating one joint configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub objective: f64,
    pub status: Status,
    /// Seconds of work, real or simulated.
    pub duration: f64,
    pub note: Option<String>,
}

impl Evaluation {
    pub fn failed(note: impl Into<String>) -> Self {
        Self {
            objective: 0.0,
            status: Status::Failed,
            duration: 0.0,
            note: Some(note.into()),
        }
    }
}

pub trait Evaluator: Send + Sync {
    fn evaluate(&self, arch: &ArchConfig, hp: &HpConfig) -> Evaluation;
}

impl<E: Evaluator + ?Sized> Evaluator for Arc<E> {
    fn evaluate(&self, arch: &ArchConfig, hp: &HpConfig) -> Evaluation {
        (**self).evaluate(arch, hp)
    }
}

fn guarded_evaluate<E: Evaluator + ?Sized>(evaluator: &E, arch: &ArchConfig, hp: &HpConfig) -> Evaluation {
    match panic::catch_unwind(AssertUnwindSafe(|| evaluator.evaluate(arch, hp))) {
        Ok(e) => e,
        Err(_) => Evaluation::failed("evaluation panicked"),
    }
}

fn record(job: Job, eval: Evaluation, start: f64, finish: f64, worker_id: usize) -> EvaluationRecord {
    EvaluationRecord {
        job_id: job.id,
        arch: job.arch,
        hp: job.hp,
        objective: eval.objective,
        status: eval.status,
        submit_time: job.submit_time,
        finish_time: finish,
        train_time: finish - start,
        worker_id,
        note: eval.note,
    }
    .normalized()
}

fn cancelled(job: Job, now: f64) -> EvaluationRecord {
    EvaluationRecord {
        job_id: job.id,
        arch: job.arch,
        hp: job.hp,
        objective: 0.0,
        status: Status::Failed,
        submit_time: job.submit_time,
        finish_time: now,
        train_time: 0.0,
        worker_id: usize::MAX,
        note: Some("cancelled at shutdown".into()),
    }
    .normalized()
}

/// Manager side of the evaluation service.
pub trait Executor {
    fn workers(&self) -> usize;

    /// Queues a job and returns without waiting for it.
    fn submit(&mut self, arch: ArchConfig, hp: HpConfig) -> Result<JobId>;

    /// Results completed since the previous call, in completion order.
    fn get_finished(&mut self) -> Vec<EvaluationRecord>;

    /// Lets time pass after an empty poll: sleeps up to the poll interval on
    /// a real pool, jumps to the next completion on a simulated one.
    fn wait_for_progress(&mut self);

    /// Stops accepting work. With `drain` running and queued jobs finish;
    /// without it queued jobs come back as failed records. Idempotent.
    fn shutdown(&mut self, drain: bool);

    /// Seconds since the pool started.
    fn now(&self) -> f64;

    fn running(&self) -> usize;

    fn queued(&self) -> usize;

    /// Largest running count observed so far.
    fn peak_running(&self) -> usize;

    fn is_idle(&self) -> bool {
        self.running() == 0 && self.queued() == 0
    }
}

struct Running {
    job: Job,
    worker: usize,
    start: f64,
    finish: f64,
    eval: Evaluation,
}

/// Discrete-event pool on a virtual clock.
pub struct SimulatedPool<E> {
    evaluator: E,
    workers: usize,
    clock: f64,
    next_id: JobId,
    queue: VecDeque<Job>,
    running: Vec<Running>,
    free: BTreeSet<usize>,
    ready: Vec<EvaluationRecord>,
    peak: usize,
    closed: bool,
}

impl<E: Evaluator> SimulatedPool<E> {
    pub fn new(evaluator: E, workers: usize) -> Self {
        assert!(workers >= 1, "pool needs at least one worker");
        Self {
            evaluator,
            workers,
            clock: 0.0,
            next_id: 0,
            queue: VecDeque::new(),
            running: Vec::new(),
            free: (0..workers).collect(),
            ready: Vec::new(),
            peak: 0,
            closed: false,
        }
    }

    fn start(&mut self, job: Job, at: f64) {
        let worker = self.free.pop_first().expect("start called with a free worker");
        let eval = guarded_evaluate(&self.evaluator, &job.arch, &job.hp);
        let finish = at + eval.duration.max(0.0);
        self.running.push(Running {
            job,
            worker,
            start: at,
            finish,
            eval,
        });
        self.peak = self.peak.max(self.running.len());
    }

    /// Completes every job finishing at or before the clock, refilling freed
    /// slots from the queue at each completion instant.
    fn settle(&mut self) {
        loop {
            let next = self
                .running
                .iter()
                .enumerate()
                .filter(|(_, r)| r.finish <= self.clock)
                .min_by(|(_, a), (_, b)| a.finish.total_cmp(&b.finish).then(a.job.id.cmp(&b.job.id)))
                .map(|(i, _)| i);
            let Some(i) = next else { break };
            let done = self.running.swap_remove(i);
            self.free.insert(done.worker);
            let finish = done.finish;
            self.ready.push(record(done.job, done.eval, done.start, finish, done.worker));
            if let Some(job) = self.queue.pop_front() {
                self.start(job, finish);
            }
        }
    }

    fn next_finish(&self) -> Option<f64> {
        self.running.iter().map(|r| r.finish).min_by(f64::total_cmp)
    }
}

impl<E: Evaluator> Executor for SimulatedPool<E> {
    fn workers(&self) -> usize {
        self.workers
    }

    fn submit(&mut self, arch: ArchConfig, hp: HpConfig) -> Result<JobId> {
        if self.closed {
            return Err(Error::RejectedSubmission);
        }
        let job = Job {
            id: self.next_id,
            arch,
            hp,
            submit_time: self.clock,
        };
        self.next_id += 1;
        let id = job.id;
        if self.free.is_empty() {
            self.queue.push_back(job);
        } else {
            self.start(job, self.clock);
        }
        Ok(id)
    }

    fn get_finished(&mut self) -> Vec<EvaluationRecord> {
        self.settle();
        std::mem::take(&mut self.ready)
    }

    fn wait_for_progress(&mut self) {
        if let Some(t) = self.next_finish() {
            self.clock = self.clock.max(t);
        }
    }

    fn shutdown(&mut self, drain: bool) {
        if self.closed {
            return;
        }
        self.closed = true;
        if !drain {
            let now = self.clock;
            let cancelled: Vec<_> = self.queue.drain(..).map(|job| cancelled(job, now)).collect();
            self.ready.extend(cancelled);
        }
        while let Some(t) = self.next_finish() {
            self.clock = self.clock.max(t);
            self.settle();
        }
    }

    fn now(&self) -> f64 {
        self.clock
    }

    fn running(&self) -> usize {
        self.running.len()
    }

    fn queued(&self) -> usize {
        self.queue.len()
    }

    fn peak_running(&self) -> usize {
        self.peak
    }
}

#[derive(Default)]
struct PoolState {
    queue: VecDeque<Job>,
    completed: VecDeque<EvaluationRecord>,
    running: usize,
    peak: usize,
    closing: bool,
}

struct Shared {
    state: Mutex<PoolState>,
    work: Condvar,
    done: Condvar,
    epoch: Instant,
}

impl Shared {
    fn lock(&self) -> MutexGuard<'_, PoolState> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn now(&self) -> f64 {
        self.epoch.elapsed().as_secs_f64()
    }
}

#[derive(Debug, Clone)]
pub struct ThreadPoolConfig {
    pub workers: usize,
    /// Upper bound of one `wait_for_progress` call.
    pub poll_interval: Duration,
    /// When set, each worker additionally sleeps `duration * time_scale`
    /// real seconds, which turns simulated durations into wall time.
    pub time_scale: Option<f64>,
}

impl ThreadPoolConfig {
    pub fn new(workers: usize) -> Self {
        Self {
            workers,
            poll_interval: Duration::from_millis(100),
            time_scale: None,
        }
    }
}

/// Worker threads on the wall clock.
pub struct ThreadPool {
    shared: Arc<Shared>,
    handles: Vec<JoinHandle<()>>,
    workers: usize,
    poll_interval: Duration,
    next_id: JobId,
    closed: bool,
}

impl ThreadPool {
    pub fn new<E: Evaluator + 'static>(evaluator: E, config: ThreadPoolConfig) -> Self {
        assert!(config.workers >= 1, "pool needs at least one worker");
        let shared = Arc::new(Shared {
            state: Mutex::new(PoolState::default()),
            work: Condvar::new(),
            done: Condvar::new(),
            epoch: Instant::now(),
        });
        let evaluator = Arc::new(evaluator);
        let handles = (0..config.workers)
            .map(|worker_id| {
                let shared = Arc::clone(&shared);
                let evaluator = Arc::clone(&evaluator);
                let time_scale = config.time_scale;
                std::thread::Builder::new()
                    .name(format!("eval-worker-{worker_id}"))
                    .spawn(move || worker_loop(&shared, evaluator.as_ref(), worker_id, time_scale))
                    .expect("spawn worker thread")
            })
            .collect();
        Self {
            shared,
            handles,
            workers: config.workers,
            poll_interval: config.poll_interval,
            next_id: 0,
            closed: false,
        }
    }
}

fn worker_loop<E: Evaluator + ?Sized>(shared: &Shared, evaluator: &E, worker_id: usize, time_scale: Option<f64>) {
    loop {
        let job = {
            let mut state = shared.lock();
            loop {
                if let Some(job) = state.queue.pop_front() {
                    state.running += 1;
                    state.peak = state.peak.max(state.running);
                    break job;
                }
                if state.closing {
                    return;
                }
                state = shared.work.wait(state).unwrap_or_else(|e| e.into_inner());
            }
        };
        let start = shared.now();
        let eval = guarded_evaluate(evaluator, &job.arch, &job.hp);
        if let Some(scale) = time_scale {
            let secs = (eval.duration * scale).max(0.0);
            if secs > 0.0 {
                std::thread::sleep(Duration::from_secs_f64(secs));
            }
        }
        let finish = shared.now();
        let rec = record(job, eval, start, finish, worker_id);
        let mut state = shared.lock();
        state.running -= 1;
        state.completed.push_back(rec);
        shared.done.notify_all();
    }
}

impl Executor for ThreadPool {
    fn workers(&self) -> usize {
        self.workers
    }

    fn submit(&mut self, arch: ArchConfig, hp: HpConfig) -> Result<JobId> {
        if self.closed {
            return Err(Error::RejectedSubmission);
        }
        let id = self.next_id;
        self.next_id += 1;
        let job = Job {
            id,
            arch,
            hp,
            submit_time: self.shared.now(),
        };
        self.shared.lock().queue.push_back(job);
        self.shared.work.notify_one();
        Ok(id)
    }

    fn get_finished(&mut self) -> Vec<EvaluationRecord> {
        self.shared.lock().completed.drain(..).collect()
    }

    fn wait_for_progress(&mut self) {
        let state = self.shared.lock();
        if state.completed.is_empty() && (state.running > 0 || !state.queue.is_empty()) {
            let _ = self
                .shared
                .done
                .wait_timeout(state, self.poll_interval)
                .unwrap_or_else(|e| e.into_inner());
        }
    }

    fn shutdown(&mut self, drain: bool) {
        if self.closed {
            return;
        }
        self.closed = true;
        {
            let mut state = self.shared.lock();
            state.closing = true;
            if !drain {
                let now = self.shared.now();
                let jobs: Vec<Job> = state.queue.drain(..).collect();
                state.completed.extend(jobs.into_iter().map(|job| cancelled(job, now)));
            }
        }
        self.shared.work.notify_all();
        for handle in self.handles.drain(..) {
            let _ = handle.join();
        }
    }

    fn now(&self) -> f64 {
        self.shared.now()
    }

    fn running(&self) -> usize {
        self.shared.lock().running
    }

    fn queued(&self) -> usize {
        self.shared.lock().queue.len()
    }

    fn peak_running(&self) -> usize {
        self.shared.lock().peak
    }
}

impl Drop for ThreadPool {
    fn drop(&mut self) {
        self.shutdown(false);
    }
}

type ScoreFn = dyn Fn(&ArchConfig, &HpConfig) -> f64 + Send + Sync;

/// Test double: deterministic objective and duration functions.
#[derive(Clone)]
pub struct SimulatedBackend {
    pub name: String,
    objective: Arc<ScoreFn>,
    duration: Arc<ScoreFn>,
}

impl fmt::Debug for SimulatedBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SimulatedBackend").field("name", &self.name).finish()
    }
}

/// Names accepted by [`SimulatedBackend::builtin`].
pub const BUILTIN_OBJECTIVES: [&str; 4] = ["constant", "arch-only", "joint", "joint-uniform"];

impl SimulatedBackend {
    pub fn new(
        name: impl Into<String>,
        objective: impl Fn(&ArchConfig, &HpConfig) -> f64 + Send + Sync + 'static,
        duration: impl Fn(&ArchConfig, &HpConfig) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            objective: Arc::new(objective),
            duration: Arc::new(duration),
        }
    }

    /// Built-in synthetic objectives:
    ///
    /// * `constant`: 0.5 everywhere, unit duration.
    /// * `arch-only`: [`synthetic_arch_score`], unit duration.
    /// * `joint`: arch score times [`synthetic_hp_score`]; more processes and
    ///   fewer dense layers run faster.
    /// * `joint-uniform`: the `joint` objective with unit duration.
    pub fn builtin(name: &str) -> Option<Self> {
        let unit = |_: &ArchConfig, _: &HpConfig| 1.0;
        Some(match name {
            "constant" => Self::new(name, |_, _| 0.5, unit),
            "arch-only" => Self::new(name, |a, _| synthetic_arch_score(a), unit),
            "joint" => Self::new(name, synthetic_joint_score, synthetic_duration),
            "joint-uniform" => Self::new(name, synthetic_joint_score, unit),
            _ => return None,
        })
    }

    pub fn objective(&self, arch: &ArchConfig, hp: &HpConfig) -> f64 {
        (self.objective)(arch, hp)
    }

    pub fn duration(&self, arch: &ArchConfig, hp: &HpConfig) -> f64 {
        (self.duration)(arch, hp)
    }
}

impl Evaluator for SimulatedBackend {
    fn evaluate(&self, arch: &ArchConfig, hp: &HpConfig) -> Evaluation {
        Evaluation {
            objective: self.objective(arch, hp),
            status: Status::Ok,
            duration: self.duration(arch, hp),
            note: None,
        }
    }
}

fn space_for(arch: &ArchConfig) -> Option<ArchSpace> {
    (1..=arch.len())
        .map(|m| ArchSpace::new(m, 1, 1).expect("positive dims"))
        .find(|s| s.num_decision_variables() == arch.len())
}

/// Synthetic architecture quality in `[0, 1]`, maximal (exactly `1.0`) when
/// every variable node is a ReLU layer of any width and exactly the skips
/// from node `j - 2` into node `j` are active. Layer positions weigh twice
/// as much as skip positions.
pub fn synthetic_arch_score(arch: &ArchConfig) -> f64 {
    let Some(space) = space_for(arch) else {
        return 0.0;
    };
    let mut total = 0.0;
    let mut weight = 0.0;
    for (decision, &value) in space.layout().iter().zip(&arch.decisions) {
        match *decision {
            Decision::Layer { .. } => {
                let score = match LayerChoice::new(value).map(LayerChoice::decode) {
                    Ok(LayerKind::Dense { activation, .. }) => match activation {
                        Activation::Relu => 1.0,
                        Activation::Swish => 0.85,
                        Activation::Tanh => 0.7,
                        Activation::Sigmoid => 0.55,
                        Activation::Identity => 0.45,
                    },
                    Ok(LayerKind::PassThrough) => 0.3,
                    Err(_) => 0.0,
                };
                total += 2.0 * score;
                weight += 2.0;
            }
            Decision::Skip { source, dest } => {
                let wanted = u8::from(dest - source == 2);
                total += if value == wanted { 1.0 } else { 0.5 };
                weight += 1.0;
            }
        }
    }
    total / weight
}

/// Synthetic hyperparameter quality in `[0.3, 1]`, equal to `1.0` for batch
/// size 128, 4 processes and a learning rate in `[10^-2.5, 10^-1.5]`.
pub fn synthetic_hp_score(hp: &HpConfig) -> f64 {
    let bs_idx = [32usize, 64, 128, 256, 512, 1024].iter().position(|&b| b == hp.bs1);
    let n_idx = [1usize, 2, 4, 8].iter().position(|&n| n == hp.n);
    let (Some(b), Some(n)) = (bs_idx, n_idx) else {
        return 0.3;
    };
    let lr_log = hp.lr1.log10();
    let lr_penalty = if (-2.5..=-1.5).contains(&lr_log) { 0.0 } else { 0.2 };
    let score = 1.0 - 0.1 * b.abs_diff(2) as f64 - 0.1 * n.abs_diff(2) as f64 - lr_penalty;
    score.max(0.3)
}

pub fn synthetic_joint_score(arch: &ArchConfig, hp: &HpConfig) -> f64 {
    synthetic_arch_score(arch) * synthetic_hp_score(hp)
}

fn synthetic_duration(arch: &ArchConfig, hp: &HpConfig) -> f64 {
    let dense = space_for(arch).map_or(0, |space| {
        space
            .layout()
            .iter()
            .zip(&arch.decisions)
            .filter(|(d, &v)| matches!(d, Decision::Layer { .. }) && v != 0)
            .count()
    });
    (1.0 + 0.1 * dense as f64) * 4.0 / (hp.n as f64 + 3.0)
}

/// Builds and trains the network of each job on a shared dataset.
#[derive(Debug, Clone)]
pub struct TrainerBackend {
    data: Arc<TrainData>,
    space: ArchSpace,
    base: TrainConfig,
    n_max: usize,
}

impl TrainerBackend {
    /// `base` supplies epochs, schedule and seed; `lr1`, `bs1` and the shard
    /// count come from each job's hyperparameters, with the shard count
    /// capped at `n_max`.
    pub fn new(data: Arc<TrainData>, space: ArchSpace, base: TrainConfig, n_max: usize) -> Result<Self> {
        if data.train.x.ncols() != space.input_dim || data.n_classes != space.output_dim {
            return Err(Error::Shape {
                expected: format!("{} features / {} classes", space.input_dim, space.output_dim),
                actual: format!("{} features / {} classes", data.train.x.ncols(), data.n_classes),
            });
        }
        if n_max == 0 {
            return Err(Error::InvalidConfig("n_max must be positive".into()));
        }
        base.validate()?;
        Ok(Self {
            data,
            space,
            base,
            n_max,
        })
    }

    fn train_config(&self, hp: &HpConfig) -> TrainConfig {
        TrainConfig {
            lr1: hp.lr1,
            bs1: hp.bs1,
            n_shards: hp.n.clamp(1, self.n_max),
            ..self.base.clone()
        }
    }
}

impl Evaluator for TrainerBackend {
    fn evaluate(&self, arch: &ArchConfig, hp: &HpConfig) -> Evaluation {
        let started = Instant::now();
        let mut plan = match NetworkPlan::build(arch, &self.space) {
            Ok(p) => p,
            Err(e) => return Evaluation::failed(e.to_string()),
        };
        let cfg = self.train_config(hp);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        plan.init_params(&mut rng);
        let note = (cfg.n_shards != hp.n).then(|| format!("n clamped from {} to {}", hp.n, cfg.n_shards));
        match train(&mut plan, &self.data, &cfg) {
            Ok(result) => Evaluation {
                objective: result.valid_accuracy,
                status: result.status,
                duration: started.elapsed().as_secs_f64(),
                note,
            },
            Err(e) => Evaluation::failed(e.to_string()),
        }
    }
}
