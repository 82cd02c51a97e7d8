//! Synthetic data, profile files, and experiment sweeps.

pub mod experiment;
pub mod generate;
pub mod io;

pub use experiment::{
    algorithm_label, log_log_slope, mean_and_stderr, ols_slope, run_algorithm, run_algorithm_traced, run_experiment, run_experiment_with,
    rows_to_csv, summarize, trial_seed, write_rows, Algorithm, AlgorithmSpec, ExperimentConfig, GroupSummary, Model,
    ResultRow, RunParams, CSV_HEADER, DEFAULT_CENTRAL_CONSTANT, DEFAULT_LOCAL_CONSTANT,
};
pub use generate::{diluted_profile, mallows_sample, uniform_profile, ProfileSpec};
pub use io::{format_order, format_profile, parse_profile, read_profile, write_profile};
