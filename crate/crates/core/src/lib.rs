//! Joint neural-architecture and hyperparameter search for dense networks on
//! tabular data.
//!
//! Architectures are evolved with aging evolution while the data-parallel
//! training hyperparameters (learning rate, batch size, process count) are
//! tuned by an asynchronous Bayesian optimizer. Evaluations run through a
//! nonblocking manager/worker pool backed either by the built-in trainer or
//! by a synthetic objective.

pub mod controller;
pub mod error;
pub mod executor;
pub mod evolution;
pub mod model;
pub mod optimizer;
pub mod reporting;
pub mod space;
pub mod surrogate;

pub use error::{Error, Result};
pub use evolution::{EvaluationRecord, Population, Status};
pub use optimizer::{AsyncBo, BoSettings};
pub use space::{ArchConfig, ArchSpace, HpConfig, HpSpace};
pub use surrogate::{ForestParams, TreeEnsembleRegressor};
