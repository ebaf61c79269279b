//! Run configuration: TOML file keys overlaid by command-line flags.

use std::path::{Path, PathBuf};

use agebo::controller::{SearchConfig, SearchMode};
use agebo::{ArchSpace, BoSettings, ForestParams, HpConfig};
use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Train each candidate network on `--data`.
    Trainer,
    /// Deterministic synthetic objective on a virtual clock.
    Simulated,
}

/// Every key of the configuration file. Flags use the same names in
/// kebab case (`P` is `--population`, `S` is `--sample`, `W` is `--workers`).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct RunSettings {
    /// age, age-n or agebo
    #[arg(long)]
    pub mode: Option<String>,
    /// Population size P
    #[arg(short = 'P', long = "population")]
    #[serde(rename = "P")]
    pub population: Option<usize>,
    /// Tournament size S
    #[arg(short = 'S', long = "sample")]
    #[serde(rename = "S")]
    pub sample: Option<usize>,
    /// Parallel evaluations W
    #[arg(short = 'W', long = "workers")]
    #[serde(rename = "W")]
    pub workers: Option<usize>,
    /// UCB exploration weight
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub n_initial: Option<usize>,
    #[arg(long)]
    pub n_candidates: Option<usize>,
    #[arg(long)]
    pub n_trees: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Seconds (virtual seconds for the simulated backend)
    #[arg(long)]
    pub wall_time: Option<f64>,
    #[arg(long)]
    pub max_evals: Option<usize>,
    /// Variable nodes m of the architecture space
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Input CSV for the trainer backend
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub label_col: Option<String>,
    #[arg(long)]
    pub split_seed: Option<u64>,
    #[arg(long, value_enum)]
    pub backend: Option<Backend>,
    /// Built-in objective of the simulated backend
    #[arg(long)]
    pub objective: Option<String>,
    /// Upper bound on data-parallel shards per evaluation
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Fixed learning rate of the age and age-n modes
    #[arg(long)]
    pub lr1: Option<f64>,
    /// Fixed batch size of the age and age-n modes
    #[arg(long)]
    pub bs1: Option<usize>,
    /// Fixed process count of the age-n mode
    #[arg(long)]
    pub n: Option<usize>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($field:ident),+) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field.clone(); } )+
    };
}

impl RunSettings {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// `self` with every value set in `flags` replaced.
    pub fn overlaid(mut self, flags: &RunSettings) -> Self {
        overlay!(
            self, flags, mode, population, sample, workers, kappa, n_initial, n_candidates, n_trees, seed, wall_time,
            max_evals, nodes, data, label_col, split_seed, backend, objective, n_max, epochs, lr1, bs1, n
        );
        self
    }

    pub fn backend(&self) -> Backend {
        self.backend.unwrap_or(if self.data.is_some() {
            Backend::Trainer
        } else {
            Backend::Simulated
        })
    }

    pub fn label_col(&self) -> &str {
        self.label_col.as_deref().unwrap_or("Cover_Type")
    }

    pub fn nodes(&self) -> usize {
        self.nodes.unwrap_or(10)
    }

    pub fn search_config(&self, arch_space: ArchSpace) -> Result<SearchConfig> {
        let mode: SearchMode = self.mode.as_deref().unwrap_or("agebo").parse()?;
        let workers = self.workers.unwrap_or(4);
        let mut cfg = SearchConfig::new(mode, arch_space, workers);
        if let Some(p) = self.population {
            cfg.population_size = p;
        }
        if let Some(s) = self.sample {
            cfg.sample_size = s;
        }
        cfg.seed = self.seed.unwrap_or(0);
        cfg.wall_time_limit = self.wall_time;
        cfg.max_evaluations = self.max_evals;
        let defaults = BoSettings::default();
        cfg.bo = BoSettings {
            kappa: self.kappa.unwrap_or(defaults.kappa),
            n_initial: self.n_initial.unwrap_or(defaults.n_initial),
            n_candidates: self.n_candidates.unwrap_or(defaults.n_candidates),
            forest: ForestParams {
                n_trees: self.n_trees.unwrap_or(defaults.forest.n_trees),
                ..defaults.forest
            },
        };
        let fixed = HpConfig::default();
        cfg.fixed_hp = HpConfig {
            lr1: self.lr1.unwrap_or(fixed.lr1),
            bs1: self.bs1.unwrap_or(fixed.bs1),
            n: self.n.unwrap_or(fixed.n),
        };
        if cfg.wall_time_limit.is_none() && cfg.max_evaluations.is_none() {
            bail!("set --wall-time or --max-evals (or wall_time / max_evals in the config file)");
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
