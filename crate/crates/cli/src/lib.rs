//! Command-line front end: TOML experiment configs, run/check orchestration,
//! parameter sweeps, and the bundled verification suite.

pub mod config;
pub mod experiment;
pub mod report;
pub mod suite;
pub mod sweep;

pub use config::{CheckKind, ConfigError, Experiment, ExperimentConfig};
pub use experiment::{evaluate, run_experiment, write_artifacts, RunArtifacts, RunOutput};
pub use report::{CheckOutcome, CheckStatus, RunSummary};
pub use suite::{run_suite, SuiteItem};
pub use sweep::{run_sweep, sweep_rows, SweepAxis, SweepRow};
