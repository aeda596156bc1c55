//! Experiment runner mapping the detection/beamforming stack onto
//! reproducible CSV-producing commands.
//!
//! Each experiment kind sweeps one or two named parameters over a scenario
//! config, evaluates closed forms, optimizers, or Monte-Carlo estimators at
//! every point, and emits an RFC-4180-style CSV (UTF-8, `.` decimal,
//! `#`-prefixed metadata comment lines). Output is byte-identical across
//! runs with the same config and seed: all randomness is counter-seeded
//! ChaCha8 and sweep points are computed independently, then written in
//! axis order.

pub mod experiment;
pub mod report;
pub mod sweep;
pub mod table;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error on {path}: {msg}")]
    Io { path: String, msg: String },
    #[error("sweep error: {0}")]
    Sweep(String),
    #[error("{0}")]
    Report(String),
}
