// Copyright 2026 The bqctl Authors
// SPDX-License-Identifier: Apache-2.0

//! Rounding of relaxed controls to SOS1 binary controls.
//!
//! [`sum_up_rounding`] is the greedy integral-tracking scheme; [`cia_round`]
//! solves the min-max integral deviation problem exactly under optional
//! min-up-time or max-switching constraints.

mod bnb;

use serde::Serialize;

use crate::controls::ControlSequence;
use crate::error::{Error, Result};
use crate::objectives::sos1_penalty;
use crate::scalar::Real;

pub(crate) use bnb::{branch_and_bound, LinearCost, SearchLimits};
pub use bnb::{cia_round, CiaResult, SearchStatus};

/// Feasible set of binary controls beyond SOS1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RoundingConstraint {
    Unconstrained,
    /// Each controller switches at most once in any window of `t_minup` switch positions.
    MinUpTime {
        t_minup: usize,
    },
    /// Each controller switches at most `s_max` times.
    MaxSwitching {
        s_max: usize,
    },
}

impl RoundingConstraint {
    /// Rejects parameter choices that leave no feasible sequence or are malformed.
    pub fn check(&self, n_steps: usize) -> Result<()> {
        match *self {
            Self::MinUpTime { t_minup } if t_minup == 0 || t_minup > n_steps => Err(
                Error::Infeasible(format!("min-up time {t_minup} must lie in 1..={n_steps}")),
            ),
            _ => Ok(()),
        }
    }

    /// Literal check of the linear constraint set on a binary SOS1 sequence.
    pub fn is_satisfied_by<R: Real>(&self, u: &ControlSequence<R>) -> bool {
        if !u.is_sos1_binary() {
            return false;
        }
        let t = u.n_steps();
        match *self {
            Self::Unconstrained => true,
            Self::MinUpTime { t_minup } => (0..u.n_controllers()).all(|j| {
                // v_k = |u_k - u_{k+1}| for switch positions k = 1..T-1.
                let v: Vec<usize> = (0..t.saturating_sub(1))
                    .map(|k| usize::from(u.get(j, k) != u.get(j, k + 1)))
                    .collect();
                (1..=t.saturating_sub(t_minup))
                    .all(|start| v[start - 1..start - 1 + t_minup].iter().sum::<usize>() <= 1)
            }),
            Self::MaxSwitching { s_max } => u.switch_counts().iter().all(|&s| s <= s_max),
        }
    }
}

/// Greedy SOS1 sum-up rounding: at each step activate the controller with the
/// largest accumulated deficit `p_jk`, ties to the smallest index.
pub fn sum_up_rounding<R: Real>(u_c: &ControlSequence<R>) -> ControlSequence<R> {
    let n = u_c.n_controllers();
    let t = u_c.n_steps();
    let dt = u_c.dt();
    let mut out = ControlSequence::zeros(n, t, u_c.t_final());
    let mut deficit = vec![R::zero(); n];
    for k in 0..t {
        let mut best = 0;
        for j in 0..n {
            deficit[j] += u_c.get(j, k) * dt;
            if deficit[j] > deficit[best] {
                best = j;
            }
        }
        out.set(best, k, R::one());
        deficit[best] -= dt;
    }
    assert!(
        out.is_sos1_binary(),
        "sum-up rounding produced a non-SOS1 column"
    );
    out
}

/// `max_k |sum_{tau <= k} (sum_j u_jtau - 1) dt|`.
pub fn sos1_drift_epsilon<R: Real>(u_c: &ControlSequence<R>) -> R {
    let dt = u_c.dt();
    let mut acc = R::zero();
    let mut worst = R::zero();
    for k in 0..u_c.n_steps() {
        let s = (0..u_c.n_controllers())
            .map(|j| u_c.get(j, k))
            .fold(R::zero(), |a, b| a + b);
        acc += (s - R::one()) * dt;
        worst = worst.max(acc.abs());
    }
    worst
}

/// `max_{j,k} |sum_{tau <= k} (u_c - u_b)_jtau dt|`.
pub fn max_integral_deviation<R: Real>(
    u_c: &ControlSequence<R>,
    u_b: &ControlSequence<R>,
) -> Result<R> {
    if !u_c.same_grid(u_b) {
        return Err(Error::GridMismatch(format!(
            "{}x{} (dt {}) vs {}x{} (dt {})",
            u_c.n_controllers(),
            u_c.n_steps(),
            u_c.dt(),
            u_b.n_controllers(),
            u_b.n_steps(),
            u_b.dt()
        )));
    }
    let dt = u_c.dt();
    let mut worst = R::zero();
    for j in 0..u_c.n_controllers() {
        let mut acc = R::zero();
        for k in 0..u_c.n_steps() {
            acc += (u_c.get(j, k) - u_b.get(j, k)) * dt;
            worst = worst.max(acc.abs());
        }
    }
    Ok(worst)
}

/// Rounding error certificates relating the deviation to the SOS1 drift.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundCertificate {
    pub epsilon: f64,
    pub max_integral_deviation: f64,
    /// `(N - 1) dt + (2N - 1)/N eps`.
    pub deviation_bound: f64,
    /// `sqrt(t_f l(u_c) dt)`.
    pub penalty_bound: f64,
    /// `eps / N`, a lower bound on the deviation of any SOS1 rounding.
    pub lower_bound: f64,
}

impl BoundCertificate {
    pub fn compute<R: Real>(u_c: &ControlSequence<R>, u_b: &ControlSequence<R>) -> Result<Self> {
        let n = R::count(u_c.n_controllers());
        let dt = u_c.dt();
        let eps = sos1_drift_epsilon(u_c);
        let dev = max_integral_deviation(u_c, u_b)?;
        let upper = (n - R::one()) * dt + (R::lit(2.0) * n - R::one()) / n * eps;
        let from_penalty = (u_c.t_final() * sos1_penalty(u_c) * dt).sqrt();
        Ok(Self {
            epsilon: eps.as_f64(),
            max_integral_deviation: dev.as_f64(),
            deviation_bound: upper.as_f64(),
            penalty_bound: from_penalty.as_f64(),
            lower_bound: (eps / n).as_f64(),
        })
    }

    /// Deviation upper bound, with a relative slack for rounding error.
    pub fn upper_bound_holds(&self) -> bool {
        self.max_integral_deviation <= self.deviation_bound * (1.0 + 1e-12) + 1e-15
    }

    pub fn penalty_bound_holds(&self) -> bool {
        self.epsilon <= self.penalty_bound * (1.0 + 1e-12) + 1e-15
    }

    pub fn lower_bound_holds(&self) -> bool {
        self.max_integral_deviation >= self.lower_bound * (1.0 - 1e-12) - 1e-15
    }
}
