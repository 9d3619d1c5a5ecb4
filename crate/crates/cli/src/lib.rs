//! Experiment harness around `lyapgdm-core`: configuration, training and
//! evaluation runs, parameter sweeps, CSV persistence and SVG figures.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod plot;
pub mod records;

pub use error::{HarnessError, Result};
