// Copyright 2026 The bqctl Authors
// SPDX-License-Identifier: Apache-2.0

//! Projected limited-memory BFGS for box-constrained minimization.

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::report::Status;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuasiNewtonConfig {
    pub memory: usize,
    pub max_iterations: usize,
    /// Stop once `max |P(x - g) - x|` falls below this.
    pub projected_gradient_tol: f64,
    /// Armijo sufficient-decrease constant.
    pub c1: f64,
    pub backtrack: f64,
    pub max_trials: usize,
    /// Wall-clock budget checked once per iteration.
    pub time_limit: Option<Duration>,
}

impl Default for QuasiNewtonConfig {
    fn default() -> Self {
        Self {
            memory: 10,
            max_iterations: 5000,
            projected_gradient_tol: 1e-8,
            c1: 1e-4,
            backtrack: 0.5,
            max_trials: 50,
            time_limit: None,
        }
    }
}

impl QuasiNewtonConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.memory > 0
            && self.max_iterations > 0
            && self.projected_gradient_tol > 0.0
            && self.c1 > 0.0
            && self.c1 < 1.0
            && self.backtrack > 0.0
            && self.backtrack < 1.0
            && self.max_trials > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "invalid quasi-Newton configuration {self:?}"
            )))
        }
    }
}

#[derive(Clone, Debug)]
pub struct QnResult<R> {
    pub x: Vec<R>,
    pub value: R,
    pub iterations: usize,
    pub projected_gradient: R,
    pub status: Status,
    /// Objective after every accepted step, starting with `f(x0)`.
    pub history: Vec<R>,
}

/// Minimizes `f` over the box `[lower, upper]` starting from `x0`.
///
/// `f` returns the value and gradient. Accepted values never increase and every
/// evaluated point lies in the box. A failed line search stops the run with
/// [`Status::LineSearchFailed`] and the best point so far.
pub fn bound_qn_minimize<R: Real>(
    mut f: impl FnMut(&[R]) -> Result<(R, Vec<R>)>,
    x0: &[R],
    lower: &[R],
    upper: &[R],
    config: &QuasiNewtonConfig,
) -> Result<QnResult<R>> {
    config.validate()?;
    let n = x0.len();
    if lower.len() != n || upper.len() != n {
        return Err(Error::Dimension(
            "bounds and start point differ in length".into(),
        ));
    }
    if lower.iter().zip(upper).any(|(l, u)| !(l <= u)) {
        return Err(Error::InvalidArgument("empty box".into()));
    }
    let project = |v: &mut [R]| {
        for ((x, &l), &u) in v.iter_mut().zip(lower).zip(upper) {
            *x = x.max(l).min(u);
        }
    };
    let mut x = x0.to_vec();
    project(&mut x);
    let (mut fx, mut g) = f(&x)?;
    let c1 = R::lit(config.c1);
    let shrink = R::lit(config.backtrack);
    let tol = R::lit(config.projected_gradient_tol);
    let mut memory: VecDeque<(Vec<R>, Vec<R>)> = VecDeque::with_capacity(config.memory);
    let mut history = vec![fx];
    let mut iterations = 0;
    let start = Instant::now();

    let status = loop {
        let pg = projected_step(&x, &g, lower, upper);
        let pg_norm = inf_norm(&pg);
        if pg_norm <= tol {
            break Status::Converged;
        }
        if iterations >= config.max_iterations {
            break Status::MaxIter;
        }
        if config.time_limit.is_some_and(|l| start.elapsed() >= l) {
            break Status::TimeLimit;
        }
        // Variables pinned at a bound with the gradient pushing outward stay fixed.
        let eps = pg_norm.min(R::lit(1e-3));
        let free: Vec<bool> = (0..n)
            .map(|i| {
                let at_lo = x[i] <= lower[i] + eps && g[i] > R::zero();
                let at_hi = x[i] >= upper[i] - eps && g[i] < R::zero();
                !(at_lo || at_hi)
            })
            .collect();
        let mut dir = two_loop(&g, &free, &memory);
        let mut used_memory = !memory.is_empty();
        if !used_memory {
            // First step: steepest descent capped to a unit move.
            let scale = R::one() / inf_norm(&dir).max(R::one());
            dir.iter_mut().for_each(|d| *d *= scale);
        }

        let mut accepted = None;
        for attempt in 0..2 {
            if attempt == 1 {
                if !used_memory {
                    break;
                }
                // Quasi-Newton path failed: retry along the projected gradient.
                dir = pg.clone();
                used_memory = false;
            }
            let mut t = R::one();
            for _ in 0..config.max_trials {
                let mut trial: Vec<R> = x.iter().zip(&dir).map(|(&a, &d)| a + t * d).collect();
                project(&mut trial);
                let slope: R = g
                    .iter()
                    .zip(trial.iter().zip(&x))
                    .map(|(&gi, (&a, &b))| gi * (a - b))
                    .sum();
                if !(slope < R::zero()) {
                    break;
                }
                let (ft, gt) = f(&trial)?;
                // Below rounding noise the Armijo margin is meaningless; plain
                // decrease is enough.
                let noise = R::lit(64.0) * R::epsilon() * fx.abs().max(R::min_positive_value());
                if ft <= fx + c1 * slope || (ft <= fx && -slope <= noise) {
                    accepted = Some((trial, ft, gt));
                    break;
                }
                t *= shrink;
            }
            if accepted.is_some() {
                break;
            }
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            break Status::LineSearchFailed;
        };

        let s: Vec<R> = x_new.iter().zip(&x).map(|(&a, &b)| a - b).collect();
        let y: Vec<R> = g_new.iter().zip(&g).map(|(&a, &b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > R::epsilon() * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if memory.len() == config.memory {
                memory.pop_front();
            }
            memory.push_back((s, y));
        }
        x = x_new;
        fx = f_new;
        g = g_new;
        history.push(fx);
        iterations += 1;
    };

    let pg_norm = inf_norm(&projected_step(&x, &g, lower, upper));
    Ok(QnResult {
        x,
        value: fx,
        iterations,
        projected_gradient: pg_norm,
        status,
        history,
    })
}

/// `P(x - g) - x`.
fn projected_step<R: Real>(x: &[R], g: &[R], lower: &[R], upper: &[R]) -> Vec<R> {
    (0..x.len())
        .map(|i| (x[i] - g[i]).max(lower[i]).min(upper[i]) - x[i])
        .collect()
}

/// `-H g` on free coordinates from the stored curvature pairs.
fn two_loop<R: Real>(g: &[R], free: &[bool], memory: &VecDeque<(Vec<R>, Vec<R>)>) -> Vec<R> {
    let mask = |v: &[R]| -> Vec<R> {
        v.iter()
            .zip(free)
            .map(|(&a, &f)| if f { a } else { R::zero() })
            .collect()
    };
    let mut q = mask(g);
    let pairs: Vec<(Vec<R>, Vec<R>, R)> = memory
        .iter()
        .filter_map(|(s, y)| {
            let (s, y) = (mask(s), mask(y));
            let sy = dot(&s, &y);
            (sy > R::zero()).then(|| (s, y, R::one() / sy))
        })
        .collect();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = *rho * dot(s, &q);
        for (qi, &yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = pairs.last() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in pairs.iter().zip(alphas.into_iter().rev()) {
        let b = *rho * dot(y, &q);
        for (qi, &si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

fn dot<R: Real>(a: &[R], b: &[R]) -> R {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn inf_norm<R: Real>(v: &[R]) -> R {
    v.iter().fold(R::zero(), |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn quad(target: f64) -> impl FnMut(&[f64]) -> Result<(f64, Vec<f64>)> {
        move |x: &[f64]| {
            let v = x.iter().map(|a| (a - target).powi(2)).sum();
            let g = x.iter().map(|a| 2.0 * (a - target)).collect();
            Ok((v, g))
        }
    }

    #[test]
    fn interior_minimum() {
        let r = bound_qn_minimize(
            quad(0.3),
            &[0.9; 6],
            &[0.0; 6],
            &[1.0; 6],
            &Default::default(),
        )
        .unwrap();
        assert_eq!(r.status, Status::Converged);
        assert!(r.x.iter().all(|v| (v - 0.3).abs() <= 1e-8));
    }

    #[test]
    fn boundary_minimum() {
        let r = bound_qn_minimize(
            quad(-1.0),
            &[0.5; 4],
            &[0.0; 4],
            &[1.0; 4],
            &Default::default(),
        )
        .unwrap();
        assert_eq!(r.status, Status::Converged);
        assert!(r.x.iter().all(|&v| v == 0.0));
        assert_eq!(r.projected_gradient, 0.0);
    }

    struct Quadratic {
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
    }

    impl Quadratic {
        fn random(n: usize, rng: &mut ChaCha8Rng) -> Self {
            let m: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let a = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            let s: f64 = (0..n).map(|k| m[k][i] * m[k][j]).sum::<f64>() / n as f64;
                            s + if i == j { 0.5 } else { 0.0 }
                        })
                        .collect()
                })
                .collect();
            let b = (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect();
            Self { a, b }
        }

        fn grad(&self, x: &[f64]) -> Vec<f64> {
            self.a
                .iter()
                .zip(&self.b)
                .map(|(row, bi)| row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() - bi)
                .collect()
        }

        fn value(&self, x: &[f64]) -> f64 {
            let g = self.grad(x);
            0.5 * x.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>()
                - 0.5 * x.iter().zip(&self.b).map(|(a, b)| a * b).sum::<f64>()
        }
    }

    #[test]
    fn random_box_quadratic_matches_projected_gradient_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let q = Quadratic::random(50, &mut rng);
        let lo = vec![0.0; 50];
        let hi = vec![1.0; 50];
        let r = bound_qn_minimize(
            |x| Ok((q.value(x), q.grad(x))),
            &[0.5; 50],
            &lo,
            &hi,
            &Default::default(),
        )
        .unwrap();
        assert_eq!(r.status, Status::Converged);
        let reference = oracle::projected_gradient_minimize(
            |x| q.grad(x),
            &[0.5; 50],
            &lo,
            &hi,
            0.2,
            1_000_000,
        );
        for (a, b) in r.x.iter().zip(&reference) {
            assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = QuasiNewtonConfig {
            c1: 1.5,
            ..Default::default()
        };
        assert!(bound_qn_minimize(quad(0.0), &[0.5], &[0.0], &[1.0], &cfg).is_err());
    }

    #[test]
    fn line_search_failure_is_flagged_not_fatal() {
        // A gradient that lies about the descent direction.
        let f = |x: &[f64]| Ok((x[0], vec![-1.0]));
        let r = bound_qn_minimize(f, &[0.5], &[0.0], &[1.0], &Default::default()).unwrap();
        assert_eq!(r.status, Status::LineSearchFailed);
        assert_eq!(r.x, vec![0.5]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn accepted_values_never_increase_and_stay_in_box(seed in 0u64..1000, n in 2usize..12) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let q = Quadratic::random(n, &mut rng);
            let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let mut inside = true;
            let r = bound_qn_minimize(
                |x| {
                    inside &= x.iter().all(|v| (0.0..=1.0).contains(v));
                    // Non-convex bump keeps the curvature pairs honest.
                    let v = q.value(x) + 0.1 * x.iter().map(|a| (6.0 * a).sin()).sum::<f64>();
                    let mut g = q.grad(x);
                    for (gi, a) in g.iter_mut().zip(x) {
                        *gi += 0.6 * (6.0 * a).cos();
                    }
                    Ok((v, g))
                },
                &x0,
                &vec![0.0; n],
                &vec![1.0; n],
                &Default::default(),
            )
            .unwrap();
            prop_assert!(inside);
            prop_assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
        }
    }
}
