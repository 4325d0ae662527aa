// Copyright 2026 The bqctl Authors
// SPDX-License-Identifier: Apache-2.0

//! Penalized GRAPE: box-constrained quasi-Newton on `F + rho l(u)`.

use std::time::Instant;

use super::{minimize_composite, QuasiNewtonConfig};
use crate::controls::ControlSequence;
use crate::error::Result;
use crate::instances::QuantumInstance;
use crate::objectives::{
    evaluate, sos1_penalty, tv_seminorm, GradientMethod, ObjectiveSpec, PenaltyConfig,
};
use crate::report::SolveReport;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PgrapeConfig {
    pub qn: QuasiNewtonConfig,
    pub gradient: GradientMethod,
}

/// Solves the penalized relaxation from `x0`.
///
/// The report's `objective` is the bare `F(u)`; `history` tracks the
/// penalized value that is actually minimized.
pub fn pgrape_solve<R: Real>(
    instance: &QuantumInstance<R>,
    spec: &ObjectiveSpec<R>,
    penalty: &PenaltyConfig<R>,
    x0: &ControlSequence<R>,
    config: &PgrapeConfig,
) -> Result<(ControlSequence<R>, SolveReport)> {
    let start = Instant::now();
    let (u, qn) = minimize_composite(
        instance,
        spec,
        penalty,
        None,
        x0,
        &config.qn,
        config.gradient,
    )?;
    let mut report = SolveReport::new("relax");
    report.objective = evaluate(instance, &u, spec)?.as_f64();
    report.sos1_penalty = sos1_penalty(&u).as_f64();
    report.tv_value = tv_seminorm(&u).as_f64();
    report.iterations = qn.iterations;
    report.status = qn.status;
    report.history = qn.history.iter().map(|v| v.as_f64()).collect();
    report.wall_seconds = start.elapsed().as_secs_f64();
    Ok((u, report))
}
