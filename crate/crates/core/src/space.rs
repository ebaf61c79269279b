//! Joint search space: categorical architecture decisions and data-parallel
//! training hyperparameters.
//!
//! An architecture is a chain of `m` variable nodes between a fixed input
//! node (index 0) and a fixed output node (index `m + 1`). Every variable
//! node picks one of 31 layer types, and every node `j >= 2` (including the
//! output node) may receive skip connections from up to three earlier,
//! nonconsecutive nodes `j - 2`, `j - 3`, `j - 4`.

use std::fmt;

use num_bigint::BigUint;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Units available to a dense variable node.
pub const UNITS: [usize; 6] = [16, 32, 48, 64, 80, 96];

/// Activations available to a dense variable node, in enumeration order.
pub const ACTIVATIONS: [Activation; 5] = [
    Activation::Identity,
    Activation::Swish,
    Activation::Relu,
    Activation::Tanh,
    Activation::Sigmoid,
];

/// Number of layer types per variable node (30 dense + pass-through).
pub const NUM_LAYER_CHOICES: u8 = 31;

/// Maximum number of skip sources feeding one node.
pub const MAX_SKIPS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Swish,
    Relu,
    Tanh,
    Sigmoid,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Swish => x * sigmoid(x),
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => sigmoid(x),
        }
    }

    /// Derivative with respect to the pre-activation `x`.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Swish => {
                let s = sigmoid(x);
                s + x * s * (1.0 - s)
            }
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Activation::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Activation::Identity => "identity",
            Activation::Swish => "swish",
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
        };
        f.write_str(name)
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// What a variable node computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LayerKind {
    /// Parameter-free identity.
    PassThrough,
    Dense { units: usize, activation: Activation },
}

/// Index into the 31 layer types of a variable node.
///
/// `0` is the pass-through layer; `1..=30` enumerate `UNITS x ACTIVATIONS`
/// units-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LayerChoice(u8);

impl LayerChoice {
    pub fn new(index: u8) -> Result<Self> {
        if index < NUM_LAYER_CHOICES {
            Ok(Self(index))
        } else {
            Err(Error::InvalidConfig(format!(
                "layer choice {index} outside [0, {}]",
                NUM_LAYER_CHOICES - 1
            )))
        }
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn decode(self) -> LayerKind {
        if self.0 == 0 {
            return LayerKind::PassThrough;
        }
        let k = usize::from(self.0 - 1);
        LayerKind::Dense {
            units: UNITS[k / ACTIVATIONS.len()],
            activation: ACTIVATIONS[k % ACTIVATIONS.len()],
        }
    }

    pub fn encode(kind: LayerKind) -> Option<Self> {
        match kind {
            LayerKind::PassThrough => Some(Self(0)),
            LayerKind::Dense { units, activation } => {
                let u = UNITS.iter().position(|&x| x == units)?;
                let a = ACTIVATIONS.iter().position(|&x| x == activation)?;
                Some(Self((1 + u * ACTIVATIONS.len() + a) as u8))
            }
        }
    }
}

/// Role of one position in an [`ArchConfig`] decision vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    /// Layer type of variable node `node` (1-based).
    Layer { node: usize },
    /// Whether node `source` feeds node `dest` through a skip connection.
    Skip { source: usize, dest: usize },
}

impl Decision {
    /// Number of values this position can take.
    pub fn arity(self) -> u8 {
        match self {
            Decision::Layer { .. } => NUM_LAYER_CHOICES,
            Decision::Skip { .. } => 2,
        }
    }
}

/// The architecture half of the joint space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchSpace {
    /// Number of variable nodes.
    pub num_nodes: usize,
    pub input_dim: usize,
    pub output_dim: usize,
}

impl ArchSpace {
    pub fn new(num_nodes: usize, input_dim: usize, output_dim: usize) -> Result<Self> {
        if num_nodes == 0 {
            return Err(Error::InvalidConfig("architecture needs at least one variable node".into()));
        }
        if input_dim == 0 || output_dim == 0 {
            return Err(Error::InvalidConfig("input and output dims must be positive".into()));
        }
        Ok(Self {
            num_nodes,
            input_dim,
            output_dim,
        })
    }

    /// Index of the output node.
    pub fn output_node(&self) -> usize {
        self.num_nodes + 1
    }

    /// Skip sources feeding `dest`, nearest first.
    pub fn skip_sources(&self, dest: usize) -> impl Iterator<Item = usize> {
        (2..2 + MAX_SKIPS).filter_map(move |back| dest.checked_sub(back))
    }

    /// Positions of the decision vector in canonical order: each variable
    /// node followed by its skip nodes, then the output node's skip nodes.
    pub fn layout(&self) -> Vec<Decision> {
        let mut layout = Vec::with_capacity(self.num_decision_variables());
        for node in 1..=self.num_nodes {
            layout.push(Decision::Layer { node });
            layout.extend(self.skip_sources(node).map(|source| Decision::Skip { source, dest: node }));
        }
        let out = self.output_node();
        layout.extend(self.skip_sources(out).map(|source| Decision::Skip { source, dest: out }));
        layout
    }

    pub fn num_skip_nodes(&self) -> usize {
        let m = self.num_nodes;
        (1..=m).map(|j| (j - 1).min(MAX_SKIPS)).sum::<usize>() + m.min(MAX_SKIPS)
    }

    pub fn num_decision_variables(&self) -> usize {
        self.num_nodes + self.num_skip_nodes()
    }

    /// Number of distinct architectures, `31^m * 2^skips`.
    pub fn space_size(&self) -> BigUint {
        BigUint::from(NUM_LAYER_CHOICES).pow(self.num_nodes as u32) << self.num_skip_nodes()
    }

    pub fn random_arch<R: Rng + ?Sized>(&self, rng: &mut R) -> ArchConfig {
        let decisions = self.layout().into_iter().map(|d| rng.gen_range(0..d.arity())).collect();
        ArchConfig { decisions }
    }

    /// Checks length and per-position domains.
    pub fn validate(&self, arch: &ArchConfig) -> Result<()> {
        let layout = self.layout();
        if arch.decisions.len() != layout.len() {
            return Err(Error::InvalidConfig(format!(
                "architecture has {} decisions, space expects {}",
                arch.decisions.len(),
                layout.len()
            )));
        }
        for (pos, (&value, decision)) in arch.decisions.iter().zip(&layout).enumerate() {
            if value >= decision.arity() {
                return Err(Error::InvalidConfig(format!(
                    "decision {pos} ({decision:?}) has value {value}, domain is [0, {})",
                    decision.arity()
                )));
            }
        }
        Ok(())
    }
}

/// One architecture as a flat vector of categorical decisions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArchConfig {
    pub decisions: Vec<u8>,
}

impl ArchConfig {
    pub fn new(decisions: Vec<u8>) -> Self {
        Self { decisions }
    }

    pub fn len(&self) -> usize {
        self.decisions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decisions.is_empty()
    }

    pub fn hamming(&self, other: &ArchConfig) -> usize {
        self.decisions
            .iter()
            .zip(&other.decisions)
            .filter(|(a, b)| a != b)
            .count()
            + self.decisions.len().abs_diff(other.decisions.len())
    }
}

/// Data-parallel training hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HpConfig {
    /// Base learning rate for a single process.
    pub lr1: f64,
    /// Base (per-process) batch size.
    pub bs1: usize,
    /// Number of data-parallel processes / shards.
    pub n: usize,
}

impl Default for HpConfig {
    fn default() -> Self {
        Self {
            lr1: 0.01,
            bs1: 256,
            n: 1,
        }
    }
}

/// The hyperparameter half of the joint space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HpSpace {
    pub lr_min: f64,
    pub lr_max: f64,
    pub bs_choices: Vec<usize>,
    pub n_choices: Vec<usize>,
}

impl Default for HpSpace {
    fn default() -> Self {
        Self {
            lr_min: 0.001,
            lr_max: 0.1,
            bs_choices: vec![32, 64, 128, 256, 512, 1024],
            n_choices: vec![1, 2, 4, 8],
        }
    }
}

impl HpSpace {
    pub fn new(lr_min: f64, lr_max: f64, bs_choices: Vec<usize>, n_choices: Vec<usize>) -> Result<Self> {
        if !(lr_min > 0.0 && lr_min < lr_max && lr_max.is_finite()) {
            return Err(Error::InvalidConfig(format!("bad learning-rate range ({lr_min}, {lr_max})")));
        }
        if bs_choices.is_empty() || n_choices.is_empty() {
            return Err(Error::InvalidConfig("empty choice list".into()));
        }
        Ok(Self {
            lr_min,
            lr_max,
            bs_choices,
            n_choices,
        })
    }

    /// Learning rate at fraction `u` of the log range.
    pub fn lr_at(&self, u: f64) -> f64 {
        let (lo, hi) = (self.lr_min.log10(), self.lr_max.log10());
        10f64.powf(lo + u * (hi - lo)).clamp(self.lr_min, self.lr_max)
    }

    pub fn random_hp<R: Rng + ?Sized>(&self, rng: &mut R) -> HpConfig {
        HpConfig {
            lr1: self.lr_at(rng.gen::<f64>()),
            bs1: self.bs_choices[rng.gen_range(0..self.bs_choices.len())],
            n: self.n_choices[rng.gen_range(0..self.n_choices.len())],
        }
    }

    pub fn contains(&self, hp: &HpConfig) -> bool {
        hp.lr1 >= self.lr_min
            && hp.lr1 <= self.lr_max
            && self.bs_choices.contains(&hp.bs1)
            && self.n_choices.contains(&hp.n)
    }

    /// Surrogate encoding: `[log10(lr1), bs index, n index]`.
    pub fn encode(&self, hp: &HpConfig) -> Result<[f64; 3]> {
        let bs = self
            .bs_choices
            .iter()
            .position(|&b| b == hp.bs1)
            .ok_or_else(|| Error::InvalidConfig(format!("batch size {} not in {:?}", hp.bs1, self.bs_choices)))?;
        let n = self
            .n_choices
            .iter()
            .position(|&k| k == hp.n)
            .ok_or_else(|| Error::InvalidConfig(format!("process count {} not in {:?}", hp.n, self.n_choices)))?;
        if !(hp.lr1 > 0.0 && hp.lr1.is_finite()) {
            return Err(Error::InvalidConfig(format!("learning rate {} is not positive", hp.lr1)));
        }
        Ok([hp.lr1.log10(), bs as f64, n as f64])
    }

    pub fn decode(&self, x: &[f64; 3]) -> Result<HpConfig> {
        let pick = |list: &[usize], v: f64, what: &str| {
            let i = v.round();
            if i < 0.0 || i as usize >= list.len() || (v - i).abs() > 1e-9 {
                Err(Error::InvalidConfig(format!("{what} index {v} out of range")))
            } else {
                Ok(list[i as usize])
            }
        };
        Ok(HpConfig {
            lr1: 10f64.powf(x[0]),
            bs1: pick(&self.bs_choices, x[1], "batch size")?,
            n: pick(&self.n_choices, x[2], "process count")?,
        })
    }
}
