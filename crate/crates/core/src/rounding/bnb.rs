// Copyright 2026 The bqctl Authors
// SPDX-License-Identifier: Apache-2.0

//! Depth-first branch-and-bound over the active controller at each step.

use std::time::{Duration, Instant};

use serde::Serialize;

use super::RoundingConstraint;
use crate::controls::{ControlSequence, Grid};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchStatus {
    /// The search tree was closed; the incumbent is optimal.
    Optimal,
    /// The time limit expired first; the incumbent is the best found.
    TimeLimit,
}

#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct SearchLimits {
    pub time_limit: Option<Duration>,
}

/// Objective pieces plugged into the search engine.
pub(crate) trait NodeObjective<R: Real> {
    type Acc: Clone;

    /// Accumulator and objective value of the empty path.
    fn root(&self) -> (Self::Acc, R);

    /// Accumulator and objective after activating `j` at step `k`, or `None`
    /// if the choice is infeasible for objective-specific reasons.
    fn extend(&self, acc: &Self::Acc, value: R, k: usize, j: usize) -> Option<(Self::Acc, R)>;

    /// Lower bound on any completion from step `k` on.
    fn lower_bound(&self, acc: &Self::Acc, value: R, k: usize) -> R;

    /// Orders the children of a node at step `k`, most promising first.
    fn order(&self, acc: &Self::Acc, k: usize, children: &mut [usize]);

    /// Values within this distance are treated as equal.
    fn tolerance(&self) -> R;

    /// A bound valid for the whole problem; reaching it ends the search.
    fn floor(&self) -> Option<R> {
        None
    }
}

pub(crate) struct Outcome<R> {
    pub best: Option<(Vec<usize>, R)>,
    pub status: SearchStatus,
    pub nodes: u64,
}

struct Dfs<'a, R: Real, O: NodeObjective<R>> {
    n: usize,
    t: usize,
    constraint: RoundingConstraint,
    objective: &'a O,
    deadline: Option<Instant>,
    nodes: u64,
    timed_out: bool,
    done: bool,
    best: Option<(Vec<usize>, R)>,
    path: Vec<usize>,
    switches: Vec<usize>,
}

impl<R: Real, O: NodeObjective<R>> Dfs<'_, R, O> {
    fn allowed(&self, last: Option<usize>, j: usize, run: usize, transitioned: bool) -> bool {
        let Some(l) = last else { return true };
        if l == j {
            return true;
        }
        match self.constraint {
            RoundingConstraint::Unconstrained => true,
            RoundingConstraint::MinUpTime { t_minup } => {
                self.t <= t_minup || !transitioned || run >= t_minup
            }
            RoundingConstraint::MaxSwitching { s_max } => {
                self.switches[l] < s_max && self.switches[j] < s_max
            }
        }
    }

    fn visit(
        &mut self,
        k: usize,
        acc: O::Acc,
        value: R,
        last: Option<usize>,
        run: usize,
        transitioned: bool,
    ) {
        if self.done || self.timed_out {
            return;
        }
        let tol = self.objective.tolerance();
        if k == self.t {
            let better = self.best.as_ref().is_none_or(|(_, b)| value < *b - tol);
            if better {
                self.best = Some((self.path.clone(), value));
                if let Some(f) = self.objective.floor() {
                    if value <= f + tol {
                        self.done = true;
                    }
                }
            }
            return;
        }
        self.nodes += 1;
        if self.nodes.is_multiple_of(1024) && self.best.is_some() {
            if let Some(d) = self.deadline {
                if Instant::now() >= d {
                    self.timed_out = true;
                    return;
                }
            }
        }
        if let Some((_, b)) = &self.best {
            if self.objective.lower_bound(&acc, value, k) >= *b - tol {
                return;
            }
        }
        let mut children: Vec<usize> = (0..self.n).collect();
        self.objective.order(&acc, k, &mut children);
        for j in children {
            if !self.allowed(last, j, run, transitioned) {
                continue;
            }
            let Some((next, v)) = self.objective.extend(&acc, value, k, j) else {
                continue;
            };
            let switched = last.is_some_and(|l| l != j);
            if switched {
                self.switches[last.unwrap()] += 1;
                self.switches[j] += 1;
            }
            self.path.push(j);
            let run_next = if switched || last.is_none() {
                1
            } else {
                run + 1
            };
            self.visit(k + 1, next, v, Some(j), run_next, transitioned || switched);
            self.path.pop();
            if switched {
                self.switches[last.unwrap()] -= 1;
                self.switches[j] -= 1;
            }
            if self.done || self.timed_out {
                return;
            }
        }
    }
}

pub(crate) fn branch_and_bound<R: Real, O: NodeObjective<R>>(
    n: usize,
    t: usize,
    constraint: RoundingConstraint,
    objective: &O,
    limits: SearchLimits,
    incumbent: Option<(Vec<usize>, R)>,
) -> Outcome<R> {
    let mut dfs = Dfs {
        n,
        t,
        constraint,
        objective,
        deadline: limits.time_limit.map(|d| Instant::now() + d),
        nodes: 0,
        timed_out: false,
        done: false,
        best: incumbent,
        path: Vec::with_capacity(t),
        switches: vec![0; n],
    };
    let (acc, value) = objective.root();
    dfs.visit(0, acc, value, None, 0, false);
    Outcome {
        status: if dfs.timed_out {
            SearchStatus::TimeLimit
        } else {
            SearchStatus::Optimal
        },
        best: dfs.best,
        nodes: dfs.nodes,
    }
}

/// Min-max integral deviation from a relaxed control.
struct MaxDeviation<'a, R: Real> {
    u_c: &'a ControlSequence<R>,
    /// `prefix[j][k] = sum_{tau < k} u_c[j][tau] dt`.
    prefix: Vec<Vec<R>>,
    /// `drift_tail[k] = max_{k' >= k} |sum_{tau <= k'} (sum_j u_c - 1) dt| / N`.
    drift_tail: Vec<R>,
    global: R,
}

impl<'a, R: Real> MaxDeviation<'a, R> {
    fn new(u_c: &'a ControlSequence<R>) -> Self {
        let n = u_c.n_controllers();
        let t = u_c.n_steps();
        let dt = u_c.dt();
        let prefix = (0..n)
            .map(|j| {
                let mut p = Vec::with_capacity(t + 1);
                let mut acc = R::zero();
                p.push(acc);
                for k in 0..t {
                    acc += u_c.get(j, k) * dt;
                    p.push(acc);
                }
                p
            })
            .collect();
        let nn = R::count(n);
        let mut drift = Vec::with_capacity(t);
        let mut acc = R::zero();
        for k in 0..t {
            let s = (0..n).map(|j| u_c.get(j, k)).fold(R::zero(), |a, b| a + b);
            acc += (s - R::one()) * dt;
            drift.push(acc.abs() / nn);
        }
        let mut drift_tail = vec![R::zero(); t + 1];
        for k in (0..t).rev() {
            drift_tail[k] = drift_tail[k + 1].max(drift[k]);
        }
        Self {
            u_c,
            prefix,
            global: drift_tail[0],
            drift_tail,
        }
    }
}

impl<R: Real> NodeObjective<R> for MaxDeviation<'_, R> {
    type Acc = Vec<R>;

    fn root(&self) -> (Vec<R>, R) {
        (vec![R::zero(); self.u_c.n_controllers()], R::zero())
    }

    fn extend(&self, acc: &Vec<R>, value: R, k: usize, j: usize) -> Option<(Vec<R>, R)> {
        let dt = self.u_c.dt();
        let mut next = acc.clone();
        let mut v = value;
        for (i, d) in next.iter_mut().enumerate() {
            *d += self.u_c.get(i, k) * dt;
            if i == j {
                *d -= dt;
            }
            v = v.max(d.abs());
        }
        Some((next, v))
    }

    fn lower_bound(&self, acc: &Vec<R>, value: R, k: usize) -> R {
        let t = self.u_c.n_steps();
        let dt = self.u_c.dt();
        let mut lb = value.max(self.drift_tail[k]);
        // Each controller on its own: it can shed at most one dt per step.
        for (j, &d) in acc.iter().enumerate() {
            let p = &self.prefix[j];
            for k2 in k..t {
                let x = d + p[k2 + 1] - p[k];
                let cap = R::count(k2 - k + 1) * dt;
                let gap = if x < R::zero() {
                    -x
                } else if x > cap {
                    x - cap
                } else {
                    let r = x / dt;
                    let lo = r.floor() * dt;
                    (x - lo).min(lo + dt - x)
                };
                if gap > lb {
                    lb = gap;
                }
            }
        }
        lb
    }

    fn order(&self, acc: &Vec<R>, k: usize, children: &mut [usize]) {
        let dt = self.u_c.dt();
        let score = |j: usize| acc[j] + self.u_c.get(j, k) * dt;
        children.sort_by(|&a, &b| {
            score(b)
                .partial_cmp(&score(a))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
    }

    fn tolerance(&self) -> R {
        R::lit(1e-12) * self.u_c.dt()
    }

    fn floor(&self) -> Option<R> {
        Some(self.global)
    }
}

/// Linear cost `<g, u - u_hat>` with a Hamming budget around `u_hat`.
pub(crate) struct LinearCost<'a, R: Real> {
    grad: &'a Grid<R>,
    center: &'a [usize],
    /// Budget in flipped binary entries; moving one step costs 2.
    radius: usize,
    /// `best_gain[k]`: sorted negative per-step minima over steps `>= k`, as prefix sums.
    best_gain: Vec<Vec<R>>,
    tol: R,
}

impl<'a, R: Real> LinearCost<'a, R> {
    pub(crate) fn new(grad: &'a Grid<R>, center: &'a [usize], radius: usize) -> Self {
        let t = center.len();
        let per_step: Vec<R> = (0..t)
            .map(|k| {
                let base = grad.get(center[k], k);
                (0..grad.rows())
                    .map(|j| grad.get(j, k) - base)
                    .fold(R::zero(), R::min)
            })
            .collect();
        let best_gain = (0..=t)
            .map(|k| {
                let mut neg: Vec<R> = per_step[k..]
                    .iter()
                    .copied()
                    .filter(|&v| v < R::zero())
                    .collect();
                neg.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
                let mut acc = R::zero();
                let mut sums = vec![R::zero()];
                for v in neg {
                    acc += v;
                    sums.push(acc);
                }
                sums
            })
            .collect();
        let tol = R::lit(1e-13) * grad.max_abs().max(R::min_positive_value());
        Self {
            grad,
            center,
            radius,
            best_gain,
            tol,
        }
    }

    fn delta(&self, k: usize, j: usize) -> R {
        self.grad.get(j, k) - self.grad.get(self.center[k], k)
    }
}

impl<R: Real> NodeObjective<R> for LinearCost<'_, R> {
    /// Remaining budget.
    type Acc = usize;

    fn root(&self) -> (usize, R) {
        (self.radius, R::zero())
    }

    fn extend(&self, budget: &usize, value: R, k: usize, j: usize) -> Option<(usize, R)> {
        if j == self.center[k] {
            Some((*budget, value))
        } else if *budget >= 2 {
            Some((*budget - 2, value + self.delta(k, j)))
        } else {
            None
        }
    }

    fn lower_bound(&self, budget: &usize, value: R, k: usize) -> R {
        let sums = &self.best_gain[k];
        value + sums[(budget / 2).min(sums.len() - 1)]
    }

    fn order(&self, _budget: &usize, k: usize, children: &mut [usize]) {
        let c = self.center[k];
        children.sort_by(|&a, &b| {
            self.delta(k, a)
                .partial_cmp(&self.delta(k, b))
                .unwrap_or(std::cmp::Ordering::Equal)
                .then((a != c).cmp(&(b != c)))
        });
    }

    fn tolerance(&self) -> R {
        self.tol
    }
}

/// Result of [`cia_round`].
#[derive(Clone, Debug)]
pub struct CiaResult<R: Real> {
    pub controls: ControlSequence<R>,
    pub objective: R,
    pub status: SearchStatus,
    pub nodes: u64,
}

/// Combinatorial integral approximation: minimizes the max integral deviation
/// over SOS1 binary controls in the constrained set.
pub fn cia_round<R: Real>(
    u_c: &ControlSequence<R>,
    constraint: RoundingConstraint,
    time_limit: Option<Duration>,
) -> Result<CiaResult<R>> {
    constraint.check(u_c.n_steps())?;
    let objective = MaxDeviation::new(u_c);
    let out = branch_and_bound(
        u_c.n_controllers(),
        u_c.n_steps(),
        constraint,
        &objective,
        SearchLimits { time_limit },
        None,
    );
    let (assignment, value) = out
        .best
        .ok_or_else(|| Error::Infeasible("no feasible rounding found".into()))?;
    let controls =
        ControlSequence::from_assignment(u_c.n_controllers(), &assignment, u_c.t_final())?;
    debug_assert!(constraint.is_satisfied_by(&controls));
    Ok(CiaResult {
        controls,
        objective: value,
        status: out.status,
        nodes: out.nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use crate::rounding::{max_integral_deviation, sum_up_rounding};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_controls(n: usize, t: usize, rng: &mut ChaCha8Rng) -> ControlSequence<f64> {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..t).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect();
        ControlSequence::from_rows(&rows, t as f64 * 0.1).unwrap()
    }

    #[test]
    fn binary_input_rounds_to_itself() {
        let u = ControlSequence::<f64>::from_assignment(3, &[2, 2, 0, 1, 1], 1.0).unwrap();
        let r = cia_round(&u, RoundingConstraint::Unconstrained, None).unwrap();
        assert_eq!(r.controls, u);
        assert_eq!(r.objective, 0.0);
        assert_eq!(r.status, SearchStatus::Optimal);
    }

    #[test]
    fn objective_matches_recomputed_deviation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_controls(3, 12, &mut rng);
        let r = cia_round(&u, RoundingConstraint::MaxSwitching { s_max: 3 }, None).unwrap();
        let dev = max_integral_deviation(&u, &r.controls).unwrap();
        assert!((dev - r.objective).abs() < 1e-15);
    }

    #[test]
    fn min_up_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = RoundingConstraint::MinUpTime { t_minup: 3 };
        for _ in 0..20 {
            let u = random_controls(2, 6, &mut rng);
            let r = cia_round(&u, c, None).unwrap();
            let (_, want) = oracle::brute_force_cia(&u, c);
            assert!((r.objective - want).abs() < 1e-12);
            assert!(c.is_satisfied_by(&r.controls));
        }
    }

    #[test]
    fn max_switching_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = RoundingConstraint::MaxSwitching { s_max: 2 };
        for _ in 0..20 {
            let u = random_controls(2, 8, &mut rng);
            let r = cia_round(&u, c, None).unwrap();
            let (_, want) = oracle::brute_force_cia(&u, c);
            assert!((r.objective - want).abs() < 1e-12);
            assert!(c.is_satisfied_by(&r.controls));
        }
    }

    #[test]
    fn unconstrained_is_no_worse_than_sur() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let u = random_controls(3, 9, &mut rng);
            let r = cia_round(&u, RoundingConstraint::Unconstrained, None).unwrap();
            let sur = max_integral_deviation(&u, &sum_up_rounding(&u)).unwrap();
            assert!(r.objective <= sur + 1e-15);
        }
    }

    #[test]
    fn infeasible_min_up_is_rejected() {
        let u = ControlSequence::<f64>::constant(2, 4, 1.0, 0.5);
        assert!(matches!(
            cia_round(&u, RoundingConstraint::MinUpTime { t_minup: 5 }, None),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn time_limit_returns_feasible_incumbent() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_controls(4, 200, &mut rng);
        let c = RoundingConstraint::MaxSwitching { s_max: 6 };
        let r = cia_round(&u, c, Some(Duration::from_millis(50))).unwrap();
        assert!(c.is_satisfied_by(&r.controls));
        assert!(r.objective.is_finite());
    }
}
