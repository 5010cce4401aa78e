//! Configuration and experiment runners behind the `erl` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;

pub use config::{ConfigError, ExperimentConfig};
pub use experiments::{Outcome, RunError};
