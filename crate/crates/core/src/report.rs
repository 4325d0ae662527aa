// Copyright 2026 The bqctl Authors
// SPDX-License-Identifier: Apache-2.0

//! Per-stage solve reports, serialized as JSON by the command-line driver.

use serde::Serialize;

use crate::rounding::BoundCertificate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Converged,
    TimeLimit,
    Stalled,
    MaxIter,
    LineSearchFailed,
}

/// One inner trial of the trust-region loop.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrustRegionStep {
    pub outer: usize,
    pub radius: usize,
    pub predicted: f64,
    pub actual: f64,
    pub accepted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    pub stage: String,
    pub objective: f64,
    pub tv_value: f64,
    pub sos1_penalty: f64,
    pub epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_certificates: Option<BoundCertificate>,
    pub iterations: usize,
    pub wall_seconds: f64,
    pub status: Status,
    /// Per-controller switch counts for binary stages.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub switches: Vec<usize>,
    /// Accepted objective values, one per iteration.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub history: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub residual_history: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trust_region_log: Vec<TrustRegionStep>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl SolveReport {
    pub fn new(stage: impl Into<String>) -> Self {
        Self {
            stage: stage.into(),
            objective: f64::NAN,
            tv_value: 0.0,
            sos1_penalty: 0.0,
            epsilon: 0.0,
            bound_certificates: None,
            iterations: 0,
            wall_seconds: 0.0,
            status: Status::Converged,
            switches: Vec::new(),
            history: Vec::new(),
            residual: None,
            residual_history: Vec::new(),
            trust_region_log: Vec::new(),
            nodes: None,
            notes: Vec::new(),
        }
    }
}
