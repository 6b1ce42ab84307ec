//! Experiment harness for `matnet-core`: the XOR, sine and MNIST experiments,
//! an IDX reader, CSV/JSON outputs and a gradient checker.
//!
//! A run takes an [`ExperimentConfig`], trains every selected method from the
//! same seeded initial gains and, when given an output directory, writes:
//!
//! - `cost_<method>.csv` (`epoch,cost,wall_ms`),
//! - `gains_<method>.csv` (`epoch,param_index,value`) when gains are recorded,
//! - `predictions.csv` with the probe points and every method's outputs,
//! - `accuracy.csv` for classification runs,
//! - `metadata.json`, which `matnet train` accepts to repeat the run.

pub mod config;
mod error;
pub mod experiment;
pub mod gradcheck;
pub mod mnist;
pub mod report;

pub use config::{DatasetSource, ExperimentConfig, ExperimentName, MnistSource, RunOptions};
pub use error::{HarnessError, Result};
pub use experiment::{classify_accuracy, run_experiment, ClassAccuracy, ExperimentReport, MethodOutcome, Threaded};
pub use gradcheck::{gradcheck, GradcheckReport};
pub use mnist::{mnist_load, mnist_subset, MnistError, MnistSet};
pub use report::write_csv;
