// Copyright 2026 The bqctl Authors
// SPDX-License-Identifier: Apache-2.0

//! Trust-region improvement of binary controls by approximate local branching.
//!
//! Each subproblem linearizes `F` at the current binary point and searches the
//! SOS1 lattice within a Hamming ball. Switching one step from controller `a`
//! to `b` flips two binary entries and so costs 2 against the radius.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::controls::{ControlSequence, Grid};
use crate::error::{Error, Result};
use crate::instances::QuantumInstance;
use crate::objectives::{adjoint_gradient, evaluate, tv_seminorm, GradientMethod, ObjectiveSpec};
use crate::report::{SolveReport, Status, TrustRegionStep};
use crate::rounding::{
    branch_and_bound, LinearCost, RoundingConstraint, SearchLimits, SearchStatus,
};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrustRegionConfig {
    /// Starting radius; `None` means `ceil(T / 5)`.
    pub r0: Option<usize>,
    pub r_bar: usize,
    pub eta: f64,
    pub max_outer: usize,
    pub time_limit: Option<Duration>,
}

impl Default for TrustRegionConfig {
    fn default() -> Self {
        Self {
            r0: None,
            r_bar: 2,
            eta: 1e-3,
            max_outer: 100,
            time_limit: None,
        }
    }
}

impl TrustRegionConfig {
    /// Starting radius for a horizon of `n_steps`.
    pub fn initial_radius(&self, n_steps: usize) -> usize {
        self.r0
            .unwrap_or_else(|| n_steps.div_ceil(5))
            .max(self.r_bar)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.r_bar >= 1
            && self.r0.is_none_or(|r| r >= self.r_bar)
            && self.eta > 0.0
            && self.eta < 1.0
            && self.max_outer > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "invalid trust-region configuration {self:?}"
            )))
        }
    }
}

/// Objective the trust region improves.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AlbMode {
    /// `F + alpha TV`, SOS1 only.
    Tv { alpha: f64 },
    /// `F` over the constrained binary set.
    Constrained { constraint: RoundingConstraint },
}

impl AlbMode {
    fn alpha(&self) -> f64 {
        match self {
            Self::Tv { alpha } => *alpha,
            Self::Constrained { .. } => 0.0,
        }
    }

    fn constraint(&self) -> RoundingConstraint {
        match self {
            Self::Tv { .. } => RoundingConstraint::Unconstrained,
            Self::Constrained { constraint } => *constraint,
        }
    }
}

/// Minimizes `<g, u - u_hat> + alpha (TV(u) - TV(u_hat))` over SOS1 binary `u`
/// within Hamming distance `radius` of `u_hat`, by dynamic programming.
///
/// Returns the minimizer and the predicted decrease (the negated optimum).
pub fn tr_subproblem_tv<R: Real>(
    u_hat: &ControlSequence<R>,
    grad: &Grid<R>,
    alpha: R,
    radius: i64,
) -> Result<(ControlSequence<R>, R)> {
    if radius < 0 {
        return Err(Error::InvalidArgument(format!("negative radius {radius}")));
    }
    let center = center_of(u_hat, grad)?;
    let n = u_hat.n_controllers();
    let t = u_hat.n_steps();
    let budget = (radius as usize / 2).min(t);
    let two_alpha = alpha + alpha;
    let delta = |k: usize, j: usize| grad.get(j, k) - grad.get(center[k], k);
    let tv_hat = tv_seminorm(u_hat);

    // cost[k][j][b]: best value of steps 0..=k ending on j having changed b steps.
    let width = budget + 1;
    let idx = |j: usize, b: usize| j * width + b;
    let inf = R::infinity();
    let mut cost = vec![vec![inf; n * width]; t];
    let mut from = vec![vec![usize::MAX; n * width]; t];
    for j in 0..n {
        let b = usize::from(j != center[0]);
        if b <= budget {
            cost[0][idx(j, b)] = delta(0, j);
        }
    }
    for k in 1..t {
        for j in 0..n {
            let moved = usize::from(j != center[k]);
            for b in moved..=budget {
                let mut best = inf;
                let mut arg = usize::MAX;
                for p in 0..n {
                    let prev = cost[k - 1][idx(p, b - moved)];
                    if prev == inf {
                        continue;
                    }
                    let v = prev + if p == j { R::zero() } else { two_alpha };
                    if v < best {
                        best = v;
                        arg = p;
                    }
                }
                if arg != usize::MAX {
                    cost[k][idx(j, b)] = best + delta(k, j);
                    from[k][idx(j, b)] = arg;
                }
            }
        }
    }
    let mut best = (inf, 0, 0);
    for j in 0..n {
        for b in 0..=budget {
            if cost[t - 1][idx(j, b)] < best.0 {
                best = (cost[t - 1][idx(j, b)], j, b);
            }
        }
    }
    let (value, mut j, mut b) = best;
    let mut assignment = vec![0; t];
    for k in (0..t).rev() {
        assignment[k] = j;
        if k > 0 {
            let p = from[k][idx(j, b)];
            b -= usize::from(j != center[k]);
            j = p;
        }
    }
    // The DP value excludes the constant `alpha TV(u_hat)`.
    let value = value - alpha * tv_hat;
    let tol = R::lit(1e-13) * (grad.max_abs() + alpha).max(R::min_positive_value());
    if !(value < -tol) {
        return Ok((u_hat.clone(), R::zero()));
    }
    let u = ControlSequence::from_assignment(n, &assignment, u_hat.t_final())?;
    debug_assert!(flips(&u, u_hat) <= radius as usize);
    Ok((u, -value))
}

/// Minimizes `<g, u - u_hat>` over constrained SOS1 binary `u` within Hamming
/// distance `radius`, by branch and bound.
pub fn tr_subproblem_constrained<R: Real>(
    u_hat: &ControlSequence<R>,
    grad: &Grid<R>,
    radius: usize,
    constraint: RoundingConstraint,
    time_limit: Option<Duration>,
) -> Result<(ControlSequence<R>, R, SearchStatus)> {
    constraint.check(u_hat.n_steps())?;
    let center = center_of(u_hat, grad)?;
    if !constraint.is_satisfied_by(u_hat) {
        return Err(Error::Infeasible(
            "trust-region center violates the constraint".into(),
        ));
    }
    let objective = LinearCost::new(grad, &center, radius);
    let out = branch_and_bound(
        u_hat.n_controllers(),
        u_hat.n_steps(),
        constraint,
        &objective,
        SearchLimits { time_limit },
        Some((center.clone(), R::zero())),
    );
    let (assignment, value) = out.best.expect("the center is an incumbent");
    if assignment == center {
        return Ok((u_hat.clone(), R::zero(), out.status));
    }
    let u = ControlSequence::from_assignment(u_hat.n_controllers(), &assignment, u_hat.t_final())?;
    debug_assert!(flips(&u, u_hat) <= radius);
    debug_assert!(constraint.is_satisfied_by(&u));
    Ok((u, -value, out.status))
}

/// Predicted and actual decrease from `u_hat` to `u_bar`.
///
/// With `alpha = 0` the TV terms vanish, which is the constrained mode.
pub fn decreases<R: Real>(
    instance: &QuantumInstance<R>,
    spec: &ObjectiveSpec<R>,
    u_hat: &ControlSequence<R>,
    u_bar: &ControlSequence<R>,
    grad: &Grid<R>,
    alpha: R,
) -> Result<(R, R)> {
    if !u_hat.same_grid(u_bar) {
        return Err(Error::GridMismatch(
            "trust-region pair differs in shape".into(),
        ));
    }
    let dtv = alpha * (tv_seminorm(u_hat) - tv_seminorm(u_bar));
    let linear: R = (0..u_hat.n_controllers())
        .flat_map(|j| (0..u_hat.n_steps()).map(move |k| (j, k)))
        .map(|(j, k)| grad.get(j, k) * (u_hat.get(j, k) - u_bar.get(j, k)))
        .sum();
    let actual = evaluate(instance, u_hat, spec)? - evaluate(instance, u_bar, spec)?;
    Ok((linear + dtv, actual + dtv))
}

/// Trust-region local search from the feasible binary point `u0`.
///
/// The result never has a larger mode objective than `u0`. Every subproblem is
/// logged in the report's `trust_region_log`; `history` holds the mode
/// objective after each accepted step, starting at `u0`.
pub fn alb_improve<R: Real>(
    instance: &QuantumInstance<R>,
    spec: &ObjectiveSpec<R>,
    u0: &ControlSequence<R>,
    mode: AlbMode,
    config: &TrustRegionConfig,
) -> Result<(ControlSequence<R>, SolveReport)> {
    config.validate()?;
    let start = Instant::now();
    let constraint = mode.constraint();
    constraint.check(u0.n_steps())?;
    if !u0.is_sos1_binary() {
        return Err(Error::InvalidArgument(
            "trust-region start must be SOS1 binary".into(),
        ));
    }
    if !constraint.is_satisfied_by(u0) {
        return Err(Error::Infeasible(
            "trust-region start violates the constraint".into(),
        ));
    }
    let alpha = R::lit(mode.alpha());
    let eta = R::lit(config.eta);
    let r0 = config.initial_radius(u0.n_steps());
    let mode_value = |u: &ControlSequence<R>| -> Result<R> {
        Ok(evaluate(instance, u, spec)? + alpha * tv_seminorm(u))
    };

    let mut u = u0.clone();
    let mut value = mode_value(&u)?;
    let mut report = SolveReport::new("improve");
    report.history.push(value.as_f64());
    let mut status = Status::MaxIter;
    let mut outer = 0;
    'outer: while outer < config.max_outer {
        let remaining = match config.time_limit {
            Some(limit) => {
                let left = limit.saturating_sub(start.elapsed());
                if left.is_zero() {
                    status = Status::TimeLimit;
                    break;
                }
                Some(left)
            }
            None => None,
        };
        let grad = adjoint_gradient(instance, &u, spec, GradientMethod::Exact)?;
        let mut radius = r0;
        loop {
            let (candidate, predicted, search) = match mode {
                AlbMode::Tv { .. } => {
                    let (c, p) = tr_subproblem_tv(&u, &grad, alpha, radius as i64)?;
                    (c, p, SearchStatus::Optimal)
                }
                AlbMode::Constrained { constraint } => {
                    tr_subproblem_constrained(&u, &grad, radius, constraint, remaining)?
                }
            };
            if !(predicted > R::zero()) {
                // No predicted gain: a local optimum at the full radius, a
                // stall once the radius has already been cut.
                status = if search == SearchStatus::TimeLimit {
                    Status::TimeLimit
                } else if radius < r0 {
                    Status::Stalled
                } else {
                    Status::Converged
                };
                report.trust_region_log.push(TrustRegionStep {
                    outer,
                    radius,
                    predicted: predicted.as_f64(),
                    actual: 0.0,
                    accepted: false,
                });
                break 'outer;
            }
            let next_value = mode_value(&candidate)?;
            let actual = value - next_value;
            let accepted = actual >= eta * predicted;
            report.trust_region_log.push(TrustRegionStep {
                outer,
                radius,
                predicted: predicted.as_f64(),
                actual: actual.as_f64(),
                accepted,
            });
            if accepted {
                u = candidate;
                value = next_value;
                report.history.push(value.as_f64());
                break;
            }
            radius = if radius > config.r_bar {
                (radius / 2).max(config.r_bar)
            } else {
                radius - 1
            };
            if radius < 1 {
                status = Status::Stalled;
                break 'outer;
            }
        }
        outer += 1;
    }

    report.objective = evaluate(instance, &u, spec)?.as_f64();
    report.tv_value = tv_seminorm(&u).as_f64();
    report.switches = u.switch_counts();
    report.iterations = outer;
    report.status = status;
    report.wall_seconds = start.elapsed().as_secs_f64();
    Ok((u, report))
}

/// Active controller per step, checking the gradient shape on the way.
fn center_of<R: Real>(u_hat: &ControlSequence<R>, grad: &Grid<R>) -> Result<Vec<usize>> {
    if (grad.rows(), grad.cols()) != (u_hat.n_controllers(), u_hat.n_steps()) {
        return Err(Error::GridMismatch(format!(
            "{}x{} gradient for a {}x{} control grid",
            grad.rows(),
            grad.cols(),
            u_hat.n_controllers(),
            u_hat.n_steps()
        )));
    }
    u_hat
        .assignment()
        .ok_or_else(|| Error::InvalidArgument("trust-region center must be SOS1 binary".into()))
}

fn flips<R: Real>(a: &ControlSequence<R>, b: &ControlSequence<R>) -> usize {
    a.values()
        .as_slice()
        .iter()
        .zip(b.values().as_slice())
        .filter(|(x, y)| x != y)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_center(n: usize, t: usize, rng: &mut ChaCha8Rng) -> ControlSequence<f64> {
        let a: Vec<usize> = (0..t).map(|_| rng.gen_range(0..n)).collect();
        ControlSequence::from_assignment(n, &a, 1.0).unwrap()
    }

    fn random_grad(n: usize, t: usize, rng: &mut ChaCha8Rng) -> Grid<f64> {
        let data = (0..n * t).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Grid::from_vec(n, t, data).unwrap()
    }

    #[test]
    fn zero_gradient_keeps_center() {
        let u = ControlSequence::<f64>::from_assignment(2, &[0, 1, 1], 1.0).unwrap();
        let (v, p) = tr_subproblem_tv(&u, &Grid::zeros(2, 3), 0.0, 4).unwrap();
        assert_eq!(v, u);
        assert_eq!(p, 0.0);
        let c = RoundingConstraint::MaxSwitching { s_max: 2 };
        let (v, p, _) = tr_subproblem_constrained(&u, &Grid::zeros(2, 3), 4, c, None).unwrap();
        assert_eq!(v, u);
        assert_eq!(p, 0.0);
    }

    #[test]
    fn single_favoured_step_flips() {
        let u = ControlSequence::<f64>::from_assignment(2, &[0, 0, 0], 1.0).unwrap();
        let g = Grid::from_rows(&[vec![0.0, 0.0, 0.0], vec![0.0, -1.0, 0.0]]).unwrap();
        let (v, p) = tr_subproblem_tv(&u, &g, 0.0, 2).unwrap();
        assert_eq!(v.assignment().unwrap(), vec![0, 1, 0]);
        assert_eq!(p, 1.0);
        assert_eq!(oracle::hamming(&u, &v), 2);
    }

    #[test]
    fn negative_radius_is_rejected() {
        let u = ControlSequence::<f64>::from_assignment(2, &[0, 1], 1.0).unwrap();
        assert!(tr_subproblem_tv(&u, &Grid::zeros(2, 2), 0.0, -1).is_err());
    }

    #[test]
    fn tv_dp_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let u = random_center(3, 5, &mut rng);
        let g = random_grad(3, 5, &mut rng);
        let (v, p) = tr_subproblem_tv(&u, &g, 0.01, 4).unwrap();
        let (_, best) = oracle::brute_force_trust_region(
            &u,
            &g,
            Some(0.01),
            4,
            RoundingConstraint::Unconstrained,
        );
        assert!((p + best.min(0.0)).abs() <= 1e-12);
        assert!(oracle::hamming(&u, &v) <= 4);
    }

    #[test]
    fn constrained_bnb_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for (t, c) in [
            (6, RoundingConstraint::MinUpTime { t_minup: 3 }),
            (8, RoundingConstraint::MaxSwitching { s_max: 2 }),
        ] {
            for _ in 0..20 {
                let u = loop {
                    let u = random_center(2, t, &mut rng);
                    if c.is_satisfied_by(&u) {
                        break u;
                    }
                };
                let g = random_grad(2, t, &mut rng);
                let (v, p, status) = tr_subproblem_constrained(&u, &g, t, c, None).unwrap();
                assert_eq!(status, SearchStatus::Optimal);
                let (_, best) = oracle::brute_force_trust_region(&u, &g, None, t, c);
                assert!((p + best).abs() <= 1e-12, "{p} vs {best}");
                assert!(c.is_satisfied_by(&v));
            }
        }
    }

    #[test]
    fn prediction_matches_subproblem_value() {
        let inst = crate::instances::build_cnot_instance::<f64>(5.0, 12);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u_hat = ControlSequence::from_assignment(
            2,
            &(0..12).map(|_| rng.gen_range(0..2)).collect::<Vec<_>>(),
            5.0,
        )
        .unwrap();
        let g = adjoint_gradient(&inst, &u_hat, &inst.objective, GradientMethod::Exact).unwrap();
        let (same_p, same_a) = decreases(&inst, &inst.objective, &u_hat, &u_hat, &g, 0.05).unwrap();
        assert_eq!((same_p, same_a), (0.0, 0.0));
        let (u_bar, p) = tr_subproblem_tv(&u_hat, &g, 0.05, 6).unwrap();
        let (dp, _) = decreases(&inst, &inst.objective, &u_hat, &u_bar, &g, 0.05).unwrap();
        assert!((p - dp).abs() <= 1e-12);
    }

    #[test]
    fn radius_default_is_a_fifth_of_the_horizon() {
        let cfg = TrustRegionConfig::default();
        assert_eq!(cfg.initial_radius(40), 8);
        assert_eq!(cfg.initial_radius(41), 9);
        assert_eq!(cfg.initial_radius(3), 2);
    }
}
