//! Monte Carlo harness: configuration, seeding, parallel replicates and
//! the CSV/JSON artifacts every run writes.

mod config;
mod output;
mod runner;
mod runs;
mod summary;

pub use config::{EXACT_MODE_MAX_N, Experiment, ExperimentConfig, ExtremeStatistic, MAX_PATTERN_SIZE, MAX_SHAPE_CAP};
pub use output::{Cell, RunOutput, Table, format_real, sibling_path, write_atomic, write_outputs};
pub use runner::{Replicates, Runner, mix64, replicate_rng, replicate_seed, sample_replicates, stream_seed};
pub use runs::*;
pub use summary::{CHI_SQUARE_LEVEL, INVALID_LIMIT, KS_BUDGET, Rule, RunStatus, RunSummary, SCHEMA, TestRecord};
