//! Asynchronous Bayesian optimization over the hyperparameter space.
//!
//! A random-forest surrogate scores candidates with the upper confidence
//! bound `mu + kappa * sigma`. Batches are produced with the constant-liar
//! heuristic: each selected configuration is added to the training data
//! with the mean observed objective as a provisional value before the next
//! selection. Provisional values are dropped on the next `tell`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{HpConfig, HpSpace};
use crate::surrogate::{ForestParams, Prediction, TreeEnsembleRegressor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoSettings {
    /// Exploration weight of the UCB acquisition.
    pub kappa: f64,
    /// Observations required before asks become model based.
    pub n_initial: usize,
    /// Random candidates scored per selection.
    pub n_candidates: usize,
    pub forest: ForestParams,
}

impl Default for BoSettings {
    fn default() -> Self {
        Self {
            kappa: 0.001,
            n_initial: 10,
            n_candidates: 10_000,
            forest: ForestParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcquisitionScore {
    pub config: HpConfig,
    pub mu: f64,
    pub sigma: f64,
    pub score: f64,
}

impl AcquisitionScore {
    pub fn new(config: HpConfig, prediction: Prediction, kappa: f64) -> Self {
        Self {
            config,
            mu: prediction.mean,
            sigma: prediction.std,
            score: ucb(prediction.mean, prediction.std, kappa),
        }
    }
}

pub fn ucb(mu: f64, sigma: f64, kappa: f64) -> f64 {
    mu + kappa * sigma
}

/// Index of the highest score; ties go to the earliest candidate.
pub fn select_best(scores: &[AcquisitionScore]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, s) in scores.iter().enumerate() {
        if best.is_none_or(|b| s.score > scores[b].score) {
            best = Some(i);
        }
    }
    best
}

#[derive(Debug, Clone)]
pub struct AsyncBo {
    space: HpSpace,
    settings: BoSettings,
    observed: Vec<(HpConfig, f64)>,
    /// Configurations handed out since the last tell.
    pending: Vec<HpConfig>,
    surrogate: TreeEnsembleRegressor,
    /// Whether the surrogate reflects `observed` plus `pending`.
    fresh: bool,
    /// Scored candidates of the most recent model-based selection.
    last_scores: Vec<AcquisitionScore>,
    rng: ChaCha8Rng,
}

impl AsyncBo {
    pub fn new(space: HpSpace, settings: BoSettings, seed: u64) -> Result<Self> {
        if settings.kappa.is_nan() || settings.kappa < 0.0 {
            return Err(Error::InvalidConfig(format!("kappa must be >= 0, got {}", settings.kappa)));
        }
        if settings.n_initial == 0 || settings.n_candidates == 0 {
            return Err(Error::InvalidConfig("n_initial and n_candidates must be positive".into()));
        }
        let mut forest = settings.forest.clone();
        forest.seed ^= seed.rotate_left(17);
        Ok(Self {
            space,
            surrogate: TreeEnsembleRegressor::new(forest),
            settings,
            observed: Vec::new(),
            pending: Vec::new(),
            fresh: false,
            last_scores: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn space(&self) -> &HpSpace {
        &self.space
    }

    pub fn settings(&self) -> &BoSettings {
        &self.settings
    }

    pub fn observed(&self) -> &[(HpConfig, f64)] {
        &self.observed
    }

    pub fn num_lies(&self) -> usize {
        self.pending.len()
    }

    /// Pending configurations paired with the current lie value.
    pub fn lies(&self) -> Vec<(HpConfig, f64)> {
        match self.lie_value() {
            Ok(lie) => self.pending.iter().map(|&c| (c, lie)).collect(),
            Err(_) => Vec::new(),
        }
    }

    pub fn is_model_based(&self) -> bool {
        self.observed.len() >= self.settings.n_initial
    }

    pub fn last_scores(&self) -> &[AcquisitionScore] {
        &self.last_scores
    }

    pub fn surrogate(&self) -> &TreeEnsembleRegressor {
        &self.surrogate
    }

    pub fn tell(&mut self, configs: &[HpConfig], objectives: &[f64]) -> Result<()> {
        if configs.len() != objectives.len() {
            return Err(Error::InvalidInput(format!(
                "{} configs but {} objectives",
                configs.len(),
                objectives.len()
            )));
        }
        if configs.is_empty() {
            return Err(Error::InvalidInput("tell needs at least one observation".into()));
        }
        if let Some(bad) = objectives.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("objective {bad} is not finite")));
        }
        for cfg in configs {
            self.space.encode(cfg)?;
        }
        self.observed.extend(configs.iter().copied().zip(objectives.iter().copied()));
        self.pending.clear();
        self.fresh = false;
        if self.is_model_based() {
            self.refit()?;
        }
        Ok(())
    }

    /// Mean of every objective observed so far.
    pub fn lie_value(&self) -> Result<f64> {
        if self.observed.is_empty() {
            return Err(Error::NoData("no observations to derive a lie from"));
        }
        Ok(self.observed.iter().map(|(_, y)| y).sum::<f64>() / self.observed.len() as f64)
    }

    pub fn ask(&mut self, q: usize) -> Result<Vec<HpConfig>> {
        if q == 0 {
            return Err(Error::InvalidInput("ask needs q >= 1".into()));
        }
        let mut out = Vec::with_capacity(q);
        if !self.is_model_based() {
            for _ in 0..q {
                let cfg = self.space.random_hp(&mut self.rng);
                self.pending.push(cfg);
                out.push(cfg);
            }
            return Ok(out);
        }
        for _ in 0..q {
            if !self.fresh {
                self.refit()?;
            }
            let candidates = self.sample_candidates();
            let scores = self.score(&candidates)?;
            let best = select_best(&scores).expect("candidate set is non-empty");
            let cfg = scores[best].config;
            self.pending.push(cfg);
            self.fresh = false;
            self.last_scores = scores;
            out.push(cfg);
        }
        Ok(out)
    }

    pub fn sample_candidates(&mut self) -> Vec<HpConfig> {
        (0..self.settings.n_candidates)
            .map(|_| self.space.random_hp(&mut self.rng))
            .collect()
    }

    /// UCB scores of `candidates` under the current surrogate.
    pub fn score(&self, candidates: &[HpConfig]) -> Result<Vec<AcquisitionScore>> {
        candidates
            .iter()
            .map(|c| {
                let x = self.space.encode(c)?;
                let p = self.surrogate.predict_one(&x)?;
                Ok(AcquisitionScore::new(*c, p, self.settings.kappa))
            })
            .collect()
    }

    fn refit(&mut self) -> Result<()> {
        let mut x = Vec::with_capacity(self.observed.len() + self.pending.len());
        let mut y = Vec::with_capacity(x.capacity());
        for (cfg, obj) in &self.observed {
            x.push(self.space.encode(cfg)?);
            y.push(*obj);
        }
        if !self.pending.is_empty() {
            let lie = self.lie_value()?;
            for cfg in &self.pending {
                x.push(self.space.encode(cfg)?);
                y.push(lie);
            }
        }
        self.surrogate.fit(&x, &y)?;
        self.fresh = true;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bo(n_initial: usize) -> AsyncBo {
        let settings = BoSettings {
            n_initial,
            n_candidates: 200,
            forest: ForestParams {
                n_trees: 20,
                ..Default::default()
            },
            ..Default::default()
        };
        AsyncBo::new(HpSpace::default(), settings, 5).unwrap()
    }

    #[test]
    fn lie_values() {
        let mut opt = bo(10);
        assert!(matches!(opt.lie_value(), Err(Error::NoData(_))));
        let c = HpConfig::default();
        opt.tell(&[c], &[0.7]).unwrap();
        assert_eq!(opt.lie_value().unwrap(), 0.7);
        let mut opt = bo(10);
        opt.tell(&[c, c], &[0.8, 0.9]).unwrap();
        // the stored doubles 0.8 and 0.9 average to one ulp above 0.85
        assert!((opt.lie_value().unwrap() - 0.85).abs() <= f64::EPSILON);
        let mut opt = bo(10);
        opt.tell(&[c; 4], &[0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(opt.lie_value().unwrap(), 0.5);
    }

    #[test]
    fn tell_appends_without_dedup() {
        let mut opt = bo(10);
        let c = HpConfig::default();
        opt.tell(&[c], &[0.4]).unwrap();
        opt.tell(&[c], &[0.4]).unwrap();
        assert_eq!(opt.observed().len(), 2);
        assert_eq!(opt.num_lies(), 0);
        assert!(matches!(opt.tell(&[c], &[0.1, 0.2]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn random_phase_then_model() {
        let mut opt = bo(10);
        assert!(matches!(opt.ask(0), Err(Error::InvalidInput(_))));
        let first = opt.ask(3).unwrap();
        assert_eq!(first.len(), 3);
        assert!(first.iter().all(|c| opt.space().contains(c)));
        assert!(!opt.is_model_based());
        let configs = opt.ask(7).unwrap();
        let objectives: Vec<f64> = configs.iter().map(|c| c.lr1.log10() + 3.0).collect();
        opt.tell(&configs, &objectives).unwrap();
        opt.tell(&first, &[0.1, 0.2, 0.3]).unwrap();
        assert!(opt.is_model_based());
        assert!(opt.surrogate().is_fitted());
        let next = opt.ask(4).unwrap();
        assert_eq!(opt.num_lies(), 4);
        assert!(next.iter().all(|c| opt.space().contains(c)));
    }

    #[test]
    fn constructed_ucb_flip() {
        let c = HpConfig::default();
        let cands = [
            (Prediction { mean: 0.90, std: 0.00 }),
            (Prediction { mean: 0.80, std: 0.20 }),
        ];
        let scores = |kappa| cands.map(|p| AcquisitionScore::new(c, p, kappa));
        assert_eq!(select_best(&scores(0.0)), Some(0));
        let flipped = scores(1.96);
        assert_eq!(select_best(&flipped), Some(1));
        assert!((flipped[1].score - 1.192).abs() < 1e-12);
    }
}
