//! Config-driven Monte Carlo studies for multilayer spectral embedding.

pub mod config;
pub mod emit;
pub mod experiments;
pub mod selftest;

pub use config::{ConfigError, ExperimentConfig, ExperimentKind};
pub use emit::{emit, McRecord, RunOutput, Status, SummaryRow};
pub use experiments::{
    ks_distance, run, run_community, run_ellipse, run_null_dist, run_power_table, run_subspace_error, HarnessError,
};
