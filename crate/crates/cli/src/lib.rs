//! Batch orchestration for `weh-core`: run configs, condition and Harnack pipelines, reports.

pub mod config;
pub mod pipeline;
pub mod report;

pub use config::{RunConfig, SpaceSource, SCHEMA_VERSION};
pub use pipeline::{run_conditions, run_exit_time, run_harnack, run_holder, run_report};
pub use report::{Check, Report, Verdict};
