//! Power-grid partitioning as a constrained quadratic model and as QUBO,
//! with penalty tuning, exact oracles and classical metaheuristics.

pub mod error;
pub mod experiment;
pub mod graph;
pub mod partition;
pub mod penalty;
pub mod qubo;
pub mod solvers;
pub mod tuner;

pub use error::{Error, Result};
