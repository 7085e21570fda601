//! Config-driven experiments: quasistatic analytics, finite-speed cycles,
//! sudden quenches and squeezing sweeps.

mod config;
mod output;
mod runner;

pub use config::{parse_config, ExperimentConfig, Mode};
pub use output::{write_summary, write_sweep, write_timeseries, TIMESERIES_HEADER};
pub use runner::{
    run_experiment, run_experiment_with, sweep, CycleSummary, HoldCheck, QuenchSummary, RunOutput,
    RunSummary, SweepRow, RELAXATION_TOLERANCE, SWEEP_S,
};
