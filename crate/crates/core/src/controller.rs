//! The search loop.
//!
//! Starts `W` random joint configurations, then repeatedly collects finished
//! evaluations, pushes them into the aging population and (in AgEBO mode)
//! tells the optimizer, and replaces every finished job with a new one: a
//! mutated tournament winner once the population is full, a random
//! architecture before that.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{mutate, select_parent, EvaluationRecord, Population};
use crate::executor::{Executor, JobId};
use crate::optimizer::{AsyncBo, BoSettings};
use crate::space::{ArchConfig, ArchSpace, HpConfig, HpSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SearchMode {
    /// Aging evolution with fixed single-process hyperparameters.
    #[serde(rename = "age")]
    Age,
    /// Aging evolution with fixed hyperparameters on `n` processes.
    #[serde(rename = "age-n")]
    AgeN,
    /// Aging evolution plus Bayesian optimization of the hyperparameters.
    #[serde(rename = "agebo")]
    Agebo,
}

impl FromStr for SearchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "age" => Ok(Self::Age),
            "age-n" | "agen" => Ok(Self::AgeN),
            "agebo" => Ok(Self::Agebo),
            other => Err(Error::InvalidConfig(format!("unknown mode {other:?}"))),
        }
    }
}

impl fmt::Display for SearchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Age => "age",
            Self::AgeN => "age-n",
            Self::Agebo => "agebo",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub mode: SearchMode,
    /// Population capacity `P`.
    pub population_size: usize,
    /// Tournament size `S`.
    pub sample_size: usize,
    /// Concurrent evaluations `W`.
    pub workers: usize,
    /// Seconds on the executor clock.
    pub wall_time_limit: Option<f64>,
    pub max_evaluations: Option<usize>,
    /// Hyperparameters of the AgE / AgE-n modes.
    pub fixed_hp: HpConfig,
    pub bo: BoSettings,
    pub seed: u64,
    pub arch_space: ArchSpace,
    pub hp_space: HpSpace,
}

impl SearchConfig {
    pub fn new(mode: SearchMode, arch_space: ArchSpace, workers: usize) -> Self {
        Self {
            mode,
            population_size: 100,
            sample_size: 10,
            workers,
            wall_time_limit: None,
            max_evaluations: None,
            fixed_hp: HpConfig::default(),
            bo: BoSettings::default(),
            seed: 0,
            arch_space,
            hp_space: HpSpace::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_size == 0 || self.sample_size > self.population_size {
            return Err(Error::InvalidConfig(format!(
                "sample size {} must lie in [1, {}]",
                self.sample_size, self.population_size
            )));
        }
        if self.workers == 0 {
            return Err(Error::InvalidConfig("at least one worker is required".into()));
        }
        if self.wall_time_limit.is_none() && self.max_evaluations.is_none() {
            return Err(Error::InvalidConfig("set a wall-time limit or an evaluation budget".into()));
        }
        if self.max_evaluations == Some(0) {
            return Err(Error::InvalidConfig("evaluation budget must be positive".into()));
        }
        if self.mode != SearchMode::Agebo && (self.fixed_hp.bs1 == 0 || self.fixed_hp.n == 0) {
            return Err(Error::InvalidConfig("fixed hyperparameters need bs1, n >= 1".into()));
        }
        Ok(())
    }

    /// Hyperparameters submitted by the non-BO modes.
    pub fn static_hp(&self) -> HpConfig {
        match self.mode {
            SearchMode::Age => HpConfig {
                n: 1,
                ..self.fixed_hp
            },
            _ => self.fixed_hp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Random,
    Mutated { parent: JobId },
}

/// One submitted job, as decided by the controller.
#[derive(Debug, Clone, PartialEq)]
pub struct Submission {
    pub job_id: JobId,
    pub arch: ArchConfig,
    pub hp: HpConfig,
    pub origin: Origin,
    /// Parent architecture for mutated children.
    pub parent_arch: Option<ArchConfig>,
    /// Population size right before this submission was generated.
    pub population_len: usize,
    pub time: f64,
}

#[derive(Debug, Clone)]
pub struct SearchState {
    pub population: Population,
    pub bo: Option<AsyncBo>,
    /// Every completed evaluation, in collection order.
    pub history: Vec<EvaluationRecord>,
    pub submissions: Vec<Submission>,
    pub clock: f64,
}

impl SearchState {
    pub fn best(&self) -> Result<&EvaluationRecord> {
        best(&self.history)
    }
}

/// Highest objective; ties go to the earliest finish time.
pub fn best(history: &[EvaluationRecord]) -> Result<&EvaluationRecord> {
    history
        .iter()
        .reduce(|b, r| {
            if r.objective > b.objective || (r.objective == b.objective && r.finish_time < b.finish_time) {
                r
            } else {
                b
            }
        })
        .ok_or(Error::NoData("empty search history"))
}

/// A run stopped by an executor or optimizer failure, with everything
/// collected up to that point.
#[derive(Debug)]
pub struct SearchAborted {
    pub state: Box<SearchState>,
    pub error: Error,
}

impl fmt::Display for SearchAborted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "search aborted after {} evaluations: {}",
            self.state.history.len(),
            self.error
        )
    }
}

impl std::error::Error for SearchAborted {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

struct Search<'a> {
    cfg: &'a SearchConfig,
    state: SearchState,
    rng: ChaCha8Rng,
    submitted: usize,
}

impl Search<'_> {
    fn budget_left(&self) -> usize {
        self.cfg
            .max_evaluations
            .map_or(usize::MAX, |max| max.saturating_sub(self.submitted))
    }

    fn next_arch(&mut self) -> Result<(ArchConfig, Origin, Option<ArchConfig>)> {
        let pop = &self.state.population;
        if pop.is_full() {
            let sample = pop.sample(self.cfg.sample_size, &mut self.rng)?;
            let parent = select_parent(&sample)?;
            let child = mutate(&parent.arch, &self.cfg.arch_space, &mut self.rng);
            Ok((
                child,
                Origin::Mutated {
                    parent: parent.job_id,
                },
                Some(parent.arch.clone()),
            ))
        } else {
            Ok((self.cfg.arch_space.random_arch(&mut self.rng), Origin::Random, None))
        }
    }

    fn next_hps(&mut self, k: usize) -> Result<Vec<HpConfig>> {
        match self.state.bo.as_mut() {
            Some(bo) => bo.ask(k),
            None => Ok(vec![self.cfg.static_hp(); k]),
        }
    }

    fn submit_batch(&mut self, pool: &mut dyn Executor, k: usize) -> Result<()> {
        if k == 0 {
            return Ok(());
        }
        let hps = self.next_hps(k)?;
        for hp in hps {
            let population_len = self.state.population.len();
            let (arch, origin, parent_arch) = self.next_arch()?;
            let job_id = pool.submit(arch.clone(), hp)?;
            self.submitted += 1;
            self.state.submissions.push(Submission {
                job_id,
                arch,
                hp,
                origin,
                parent_arch,
                population_len,
                time: pool.now(),
            });
        }
        Ok(())
    }

    fn absorb(&mut self, results: &[EvaluationRecord], observer: &mut dyn FnMut(&EvaluationRecord)) {
        for rec in results {
            self.state.population.push(rec.clone());
            self.state.history.push(rec.clone());
            log::debug!(
                "job {} finished on worker {}: {:?} objective {:.4}",
                rec.job_id,
                rec.worker_id,
                rec.status,
                rec.objective
            );
            observer(rec);
        }
    }

    fn step(&mut self, pool: &mut dyn Executor, observer: &mut dyn FnMut(&EvaluationRecord)) -> Result<bool> {
        let results = pool.get_finished();
        if results.is_empty() {
            if pool.is_idle() {
                return Ok(false);
            }
            pool.wait_for_progress();
            return Ok(true);
        }
        self.absorb(&results, observer);
        let timed_out = self.cfg.wall_time_limit.is_some_and(|limit| pool.now() >= limit);
        if timed_out {
            log::info!("wall-time limit reached after {} evaluations", self.state.history.len());
            return Ok(false);
        }
        if let Some(bo) = self.state.bo.as_mut() {
            let hps: Vec<HpConfig> = results.iter().map(|r| r.hp).collect();
            let objectives: Vec<f64> = results.iter().map(|r| r.objective).collect();
            bo.tell(&hps, &objectives)?;
        }
        let k = results.len().min(self.budget_left());
        self.submit_batch(pool, k)?;
        Ok(true)
    }
}

/// Runs a search until the wall-time limit or evaluation budget is hit,
/// then drains the pool. `observer` sees every record as it is collected.
pub fn run(
    cfg: &SearchConfig,
    pool: &mut dyn Executor,
    observer: &mut dyn FnMut(&EvaluationRecord),
) -> std::result::Result<SearchState, SearchAborted> {
    let mut state = SearchState {
        population: Population::new(cfg.population_size.max(1)),
        bo: None,
        history: Vec::new(),
        submissions: Vec::new(),
        clock: 0.0,
    };
    let setup = cfg.validate().and_then(|()| match cfg.mode {
        SearchMode::Agebo => AsyncBo::new(cfg.hp_space.clone(), cfg.bo.clone(), cfg.seed.wrapping_add(1)).map(Some),
        _ => Ok(None),
    });
    match setup {
        Ok(bo) => state.bo = bo,
        Err(error) => {
            return Err(SearchAborted {
                state: Box::new(state),
                error,
            })
        }
    }
    let mut search = Search {
        cfg,
        state,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        submitted: 0,
    };
    let outcome = (|| {
        let initial = cfg.workers.min(search.budget_left());
        search.submit_batch(pool, initial)?;
        while search.step(pool, observer)? {}
        Ok(())
    })();

    if let Err(e) = &outcome {
        log::warn!("search aborted: {e}");
    }
    pool.shutdown(true);
    let tail = pool.get_finished();
    search.absorb(&tail, observer);
    search.state.clock = pool.now();
    match outcome {
        Ok(()) => Ok(search.state),
        Err(error) => Err(SearchAborted {
            state: Box::new(search.state),
            error,
        }),
    }
}
