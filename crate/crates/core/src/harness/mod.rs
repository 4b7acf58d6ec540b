//! Experiment orchestration: baseline with dynamics, data map, subset
//! retraining grid, reports, and the command-line front end.

mod cli;
mod config;
mod pipeline;
mod report;

pub use cli::cli_dispatch;
pub use config::{default_grid, DataConfig, ExperimentConfig, GridRun, SEED_ENV};
pub use pipeline::{
    materialize_run, prepare_data, run_baseline, run_baseline_with_log, run_experiment, run_grid,
    run_seed, ExperimentResults, PreparedData, RunResult, SeedResults,
};
pub use report::{emit_report, parse_results_json, read_results, render_report, results_to_json};
