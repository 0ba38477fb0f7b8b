//! Reproducible experiments driven by a JSON configuration: per-seed CSV
//! traces, a JSON summary, bound reports and inequality checks.

mod config;
mod output;
mod run;

pub use config::{
    Algorithm, AppendixAEnv, DoublingConfig, EnvironmentConfig, ExperimentConfig, LambdaMode, PenaltyConfig,
    SeparableEnv,
};
pub use output::{
    run_experiment, run_seeds, seed_csv, summarize, write_outputs, CheckpointSummary, FailedSeed, SeedSummary,
    Summary, CSV_HEADER,
};
pub use run::{odaf_lambda, ogd_schedule, planned_bounds, run_seed, Instance, SeedRun, Stat};
