//! Experiment harness for the kicked dissipative spin chain: config parsing
//! and validation, single runs, parameter sweeps and figure presets, with
//! CSV/JSON outputs.

pub mod analysis;
pub mod config;
pub mod error;
pub mod figures;
pub mod output;
pub mod run;
pub mod sweep;

pub use config::{
    load_config, parse_override, validate_config, ExperimentConfig, InitialState, KickTemplate,
};
pub use error::{ConfigIssue, HarnessError, Result};
pub use run::{run_qss_state, run_single, QssSummary, RunSummary};
pub use sweep::{run_sweep, GridKind, SweepRow};
