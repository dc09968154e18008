//! Config-driven experiments: single runs, parameter sweeps and the
//! verification suite behind the command-line tool.

pub mod config;
pub mod run;
pub mod sweep;
pub mod verify;

pub use config::ExperimentConfig;
pub use run::{execute, run, RunOptions, RunSummary};
pub use sweep::{sweep, sweep_table, GridSpec, SweepOptions, SweepRow};
pub use verify::{verify, VerifyOptions, VerifyReport};
