//! Experiment runner: configuration parsing, parameter sweeps averaged over
//! random channel draws, result tables and beampattern dumps.

pub mod beampattern;
pub mod config;
pub mod error;
pub mod experiment;
pub mod output;

pub use beampattern::{emit_beampattern, BeampatternRow, BeampatternSpec};
pub use config::{load_config, parse_config, BaseConfig};
pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, ExperimentSpec, OutputFormat, ResultRow, Scheme, SweepVar};
