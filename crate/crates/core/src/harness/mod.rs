//! Experiment front end: configuration, presets, runs, sweeps, the
//! σ-continuation study, the self-check suite and file output.

pub mod config;
pub mod output;
pub mod run;
pub mod selfcheck;

pub use config::{make_initial_data, ExperimentConfig, InitialData, PRESETS};
pub use run::{run, run_experiment, sigma_study, sweep, RunOutcome, RunSummary, SigmaStudy, SweepParameter, SweepRow};
pub use selfcheck::{selfcheck, SelfCheckReport};
