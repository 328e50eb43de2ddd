//! File formats, the experiment runner and the `lago` command line built on
//! [`lago_core`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod io;
pub mod runner;

pub use config::{ExperimentConfig, Method};
pub use error::{Error, Result};
pub use runner::{run_experiment, Experiment, ExperimentReport};
