//! Experiment runner for inertial forward-backward and primal-dual solvers
//! on TV-ℓ₂ denoising and deconvolution.

pub mod alpha_curve;
pub mod compare;
pub mod config;
pub mod error;
pub mod experiment;
pub mod image_io;
pub mod trace;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
pub use experiment::{run_experiment, RunOutput, Summary};
