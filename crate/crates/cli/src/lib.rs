//! Config-driven batch runs over perturbation strengths: simulation, kernel
//! extraction, fits, spectral diagnostics and plot tables.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod plotdata;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
pub use pipeline::{run_and_record, run_experiment, RunManifest, Stages};
pub use plotdata::{emit_plotdata, PlotOptions};
