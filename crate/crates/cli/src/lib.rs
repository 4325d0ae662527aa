// Copyright 2026 The bqctl Authors
// SPDX-License-Identifier: Apache-2.0

//! Pipeline orchestration, configuration and verification suites behind the
//! `bqctl` binary.

pub mod config;
pub mod error;
pub mod pipeline;
pub mod verify;

pub use config::RunConfig;
pub use error::CliError;
pub use pipeline::{run_pipeline, run_stage, RunOptions, Stage};
pub use verify::{verify, Suite};
