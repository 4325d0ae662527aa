// Copyright 2026 The bqctl Authors
// SPDX-License-Identifier: Apache-2.0

//! Slow reference implementations used to cross-check the fast paths.
//!
//! Everything here favours transparency over speed: exhaustive enumeration,
//! literal constraint checks, explicit index arithmetic and textbook
//! integrators. None of it shares code with the routines it validates.

use rand::Rng;

use crate::controls::{ControlSequence, Grid};
use crate::linalg::ComplexMatrix;
use crate::objectives::tv_seminorm;
use crate::rounding::{max_integral_deviation, RoundingConstraint};
use crate::scalar::{c, Real};

/// Kronecker product by explicit four-index loops.
pub fn naive_kron<R: Real>(a: &ComplexMatrix<R>, b: &ComplexMatrix<R>) -> ComplexMatrix<R> {
    let (ar, ac, br, bc) = (a.rows(), a.cols(), b.rows(), b.cols());
    let mut out = ComplexMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Random Hermitian matrix with entries of order one.
pub fn random_hermitian<R: Real>(n: usize, rng: &mut impl Rng) -> ComplexMatrix<R> {
    let mut m = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = c(R::lit(rng.gen_range(-1.0..1.0)), R::zero());
        for j in i + 1..n {
            let z = c(
                R::lit(rng.gen_range(-1.0..1.0)),
                R::lit(rng.gen_range(-1.0..1.0)),
            );
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

/// Integrates `dX/dt = -i H X` from `X = I` with classical RK4.
pub fn rk4_propagator(h: &ComplexMatrix<f64>, dt: f64, substeps: usize) -> ComplexMatrix<f64> {
    let n = h.rows();
    let minus_i_h = h.scale(c(0.0, -1.0));
    let f = |x: &ComplexMatrix<f64>| minus_i_h.matmul(x);
    let step = dt / substeps as f64;
    let mut x = ComplexMatrix::identity(n);
    for _ in 0..substeps {
        let k1 = f(&x);
        let mut tmp = x.clone();
        tmp.add_scaled_assign(step / 2.0, &k1);
        let k2 = f(&tmp);
        let mut tmp = x.clone();
        tmp.add_scaled_assign(step / 2.0, &k2);
        let k3 = f(&tmp);
        let mut tmp = x.clone();
        tmp.add_scaled_assign(step, &k3);
        let k4 = f(&tmp);
        x.add_scaled_assign(step / 6.0, &k1);
        x.add_scaled_assign(step / 3.0, &k2);
        x.add_scaled_assign(step / 3.0, &k3);
        x.add_scaled_assign(step / 6.0, &k4);
    }
    x
}

/// Central finite differences of `f` with respect to every control value.
pub fn central_difference<R: Real>(
    u: &ControlSequence<R>,
    h: R,
    mut f: impl FnMut(&ControlSequence<R>) -> R,
) -> Grid<R> {
    let mut g = Grid::zeros(u.n_controllers(), u.n_steps());
    let mut x = u.clone();
    for j in 0..u.n_controllers() {
        for k in 0..u.n_steps() {
            let orig = u.get(j, k);
            x.set(j, k, orig + h);
            let fp = f(&x);
            x.set(j, k, orig - h);
            let fm = f(&x);
            x.set(j, k, orig);
            g.set(j, k, (fp - fm) / (h + h));
        }
    }
    g
}

/// Worst ratio `|a - b| / max(rel |b|, floor)`; at most one means the check passes.
pub fn gradient_error_ratio<R: Real>(got: &Grid<R>, reference: &Grid<R>, rel: R, floor: R) -> R {
    got.as_slice()
        .iter()
        .zip(reference.as_slice())
        .map(|(&a, &b)| (a - b).abs() / (rel * b.abs()).max(floor))
        .fold(R::zero(), R::max)
}

/// Panics unless every component agrees to `rel` relative error or `floor` absolute.
pub fn assert_gradient_close<R: Real>(got: &Grid<R>, reference: &Grid<R>, rel: R, floor: R) {
    let ratio = gradient_error_ratio(got, reference, rel, floor);
    assert!(
        ratio <= R::one(),
        "gradient mismatch: worst error is {ratio} times the tolerance"
    );
}

/// Calls `f` on every assignment of one of `n` controllers to each of `t` steps.
pub fn for_each_assignment(n: usize, t: usize, mut f: impl FnMut(&[usize])) {
    let mut a = vec![0usize; t];
    loop {
        f(&a);
        let mut i = t;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            a[i] += 1;
            if a[i] < n {
                break;
            }
            a[i] = 0;
        }
    }
}

/// Exhaustive min-max integral deviation over constrained SOS1 sequences.
pub fn brute_force_cia<R: Real>(
    u_c: &ControlSequence<R>,
    constraint: RoundingConstraint,
) -> (ControlSequence<R>, R) {
    let n = u_c.n_controllers();
    let mut best: Option<(ControlSequence<R>, R)> = None;
    for_each_assignment(n, u_c.n_steps(), |a| {
        let u = ControlSequence::from_assignment(n, a, u_c.t_final()).expect("valid assignment");
        if !constraint.is_satisfied_by(&u) {
            return;
        }
        let v = max_integral_deviation(u_c, &u).expect("same grid");
        if best.as_ref().is_none_or(|(_, b)| v < *b) {
            best = Some((u, v));
        }
    });
    best.expect("some sequence is feasible")
}

/// Binary entries that differ between two sequences.
pub fn hamming<R: Real>(a: &ControlSequence<R>, b: &ControlSequence<R>) -> usize {
    a.values()
        .as_slice()
        .iter()
        .zip(b.values().as_slice())
        .filter(|(x, y)| x != y)
        .count()
}

/// Exhaustive trust-region subproblem. `alpha = None` drops the TV terms.
pub fn brute_force_trust_region<R: Real>(
    u_hat: &ControlSequence<R>,
    grad: &Grid<R>,
    alpha: Option<R>,
    radius: usize,
    constraint: RoundingConstraint,
) -> (ControlSequence<R>, R) {
    let n = u_hat.n_controllers();
    let tv_hat = tv_seminorm(u_hat);
    let mut best: Option<(ControlSequence<R>, R)> = None;
    for_each_assignment(n, u_hat.n_steps(), |a| {
        let u = ControlSequence::from_assignment(n, a, u_hat.t_final()).expect("valid assignment");
        if hamming(&u, u_hat) > radius || !constraint.is_satisfied_by(&u) {
            return;
        }
        let mut v = R::zero();
        for j in 0..n {
            for k in 0..u.n_steps() {
                v += grad.get(j, k) * (u.get(j, k) - u_hat.get(j, k));
            }
        }
        if let Some(al) = alpha {
            v += al * (tv_seminorm(&u) - tv_hat);
        }
        if best.as_ref().is_none_or(|(_, b)| v < *b) {
            best = Some((u, v));
        }
    });
    best.expect("the center is feasible")
}

/// Fixed-step projected gradient descent on a box, stopped early once the
/// largest coordinate move drops below `1e-15`.
pub fn projected_gradient_minimize(
    mut grad: impl FnMut(&[f64]) -> Vec<f64>,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    step: f64,
    iterations: usize,
) -> Vec<f64> {
    let mut x = x0.to_vec();
    for _ in 0..iterations {
        let g = grad(&x);
        let mut moved = 0.0f64;
        for i in 0..x.len() {
            let next = (x[i] - step * g[i]).clamp(lower[i], upper[i]);
            moved = moved.max((next - x[i]).abs());
            x[i] = next;
        }
        if moved <= 1e-15 {
            break;
        }
    }
    x
}
