// Copyright 2026 The bqctl Authors
// SPDX-License-Identifier: Apache-2.0

//! Energy and infidelity objectives, SOS1 penalty, total variation, and
//! adjoint gradients.

use serde::{Deserialize, Serialize};

use crate::controls::{ControlSequence, Grid};
use crate::dynamics::{evolve, evolve_spectral, EvolutionTrace};
use crate::error::{Error, Result};
use crate::instances::{cast_matrix, QuantumInstance};
use crate::linalg::{inner, ComplexMatrix};
use crate::scalar::{c, cr, times_i, Real, C};

/// Figure of merit evaluated on the final operator.
#[derive(Clone, Debug)]
pub enum ObjectiveSpec<R: Real> {
    /// `1 - <psi0| X_T^dagger hbar X_T |psi0> / e_min`.
    Energy {
        hbar: ComplexMatrix<R>,
        psi0: Vec<C<R>>,
        e_min: R,
    },
    /// `1 - |tr(target^dagger X_T)| / norm_dim`.
    Infidelity {
        target: ComplexMatrix<R>,
        norm_dim: R,
    },
}

impl<R: Real> ObjectiveSpec<R> {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Self::Energy { hbar, psi0, e_min } => {
                if hbar.rows() != dim || !hbar.is_square() || psi0.len() != dim {
                    return Err(Error::Dimension(format!(
                        "energy objective does not match system dimension {dim}"
                    )));
                }
                let d = hbar.hermitian_defect();
                if !(d <= R::hermitian_tol()) {
                    return Err(Error::NotHermitian { defect: d.as_f64() });
                }
                let norm = inner(psi0, psi0).re.sqrt();
                if !((norm - R::one()).abs() <= R::hermitian_tol()) {
                    return Err(Error::InvalidArgument(format!(
                        "initial state has norm {norm}"
                    )));
                }
                if !(*e_min < R::zero()) {
                    return Err(Error::InvalidArgument(format!(
                        "ground energy must be negative, got {e_min}"
                    )));
                }
            }
            Self::Infidelity { target, norm_dim } => {
                if target.rows() != dim || !target.is_square() {
                    return Err(Error::Dimension(format!(
                        "target is {}x{}, system dimension is {dim}",
                        target.rows(),
                        target.cols()
                    )));
                }
                if !(*norm_dim > R::zero()) {
                    return Err(Error::InvalidArgument(format!(
                        "normalization must be positive, got {norm_dim}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn cast<S: Real>(&self) -> ObjectiveSpec<S> {
        match self {
            Self::Energy { hbar, psi0, e_min } => ObjectiveSpec::Energy {
                hbar: cast_matrix(hbar),
                psi0: psi0
                    .iter()
                    .map(|z| c(S::lit(z.re.as_f64()), S::lit(z.im.as_f64())))
                    .collect(),
                e_min: S::lit(e_min.as_f64()),
            },
            Self::Infidelity { target, norm_dim } => ObjectiveSpec::Infidelity {
                target: cast_matrix(target),
                norm_dim: S::lit(norm_dim.as_f64()),
            },
        }
    }
}

/// How the SOS1 row-sum condition enters the relaxation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sos1Mode {
    /// Squared violation weighted by `rho`.
    Penalized,
    /// Two controllers with `u_2 = 1 - u_1`.
    SubstitutedTwoControl,
    /// No SOS1 coupling in the relaxation.
    Off,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PenaltyConfig<R> {
    pub rho: R,
    pub alpha: R,
    pub sos1_mode: Sos1Mode,
}

impl<R: Real> PenaltyConfig<R> {
    pub fn new(rho: R, alpha: R, sos1_mode: Sos1Mode) -> Result<Self> {
        if !(rho >= R::zero()) || !(alpha >= R::zero()) {
            return Err(Error::InvalidArgument(format!(
                "penalty weights must be nonnegative (rho = {rho}, alpha = {alpha})"
            )));
        }
        Ok(Self {
            rho,
            alpha,
            sos1_mode,
        })
    }

    pub fn off() -> Self {
        Self {
            rho: R::zero(),
            alpha: R::zero(),
            sos1_mode: Sos1Mode::Off,
        }
    }

    pub fn substituted() -> Self {
        Self {
            sos1_mode: Sos1Mode::SubstitutedTwoControl,
            ..Self::off()
        }
    }

    pub fn penalized(rho: R) -> Self {
        Self {
            rho,
            sos1_mode: Sos1Mode::Penalized,
            ..Self::off()
        }
    }
}

/// Derivative of each step propagator used by the adjoint sweep.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GradientMethod {
    /// Exact Frechet derivative of `exp(-i H dt)`.
    #[default]
    Exact,
    /// `dU/du_j ~ -i dt H_j U`, accurate to first order in `dt`.
    FirstOrder,
}

pub fn energy_objective<R: Real>(
    final_state: &ComplexMatrix<R>,
    hbar: &ComplexMatrix<R>,
    psi0: &[C<R>],
    e_min: R,
) -> Result<R> {
    let psi = final_state.mul_vec(psi0);
    let e = expectation(hbar, &psi, e_min)?;
    Ok(R::one() - e / e_min)
}

fn expectation<R: Real>(hbar: &ComplexMatrix<R>, psi: &[C<R>], e_min: R) -> Result<R> {
    let e = inner(psi, &hbar.mul_vec(psi));
    let tol = R::unitary_tol() * e_min.abs().max(R::one());
    if !(e.im.abs() <= tol) {
        return Err(Error::ImaginaryExpectation {
            residue: e.im.as_f64(),
        });
    }
    Ok(e.re)
}

pub fn infidelity_objective<R: Real>(
    final_state: &ComplexMatrix<R>,
    target: &ComplexMatrix<R>,
    norm_dim: R,
) -> Result<R> {
    if final_state.rows() != target.rows() || final_state.cols() != target.cols() {
        return Err(Error::Dimension(
            "final state and target differ in shape".into(),
        ));
    }
    let value = R::one() - overlap(target, final_state).norm() / norm_dim;
    debug_assert!(
        target.unitarity_defect() > R::unitary_tol()
            || final_state.unitarity_defect() > R::unitary_tol()
            || norm_dim != R::count(target.rows())
            || (value >= -R::unitary_tol() && value <= R::one() + R::unitary_tol()),
        "infidelity {value} outside [0, 1]"
    );
    Ok(value)
}

/// `tr(target^dagger x)` without forming the product.
fn overlap<R: Real>(target: &ComplexMatrix<R>, x: &ComplexMatrix<R>) -> C<R> {
    target
        .as_slice()
        .iter()
        .zip(x.as_slice())
        .fold(C::new(R::zero(), R::zero()), |acc, (&t, &v)| {
            acc + t.conj() * v
        })
}

/// Objective value of a finished trace.
pub fn objective_value<R: Real>(trace: &EvolutionTrace<R>, spec: &ObjectiveSpec<R>) -> Result<R> {
    match spec {
        ObjectiveSpec::Energy { hbar, psi0, e_min } => {
            energy_objective(trace.final_state(), hbar, psi0, *e_min)
        }
        ObjectiveSpec::Infidelity { target, norm_dim } => {
            infidelity_objective(trace.final_state(), target, *norm_dim)
        }
    }
}

/// Evolves and evaluates `spec` in one call.
pub fn evaluate<R: Real>(
    instance: &QuantumInstance<R>,
    controls: &ControlSequence<R>,
    spec: &ObjectiveSpec<R>,
) -> Result<R> {
    objective_value(&evolve(instance, controls)?, spec)
}

/// `sum_k (sum_j u_jk - 1)^2`.
pub fn sos1_penalty<R: Real>(controls: &ControlSequence<R>) -> R {
    (0..controls.n_steps())
        .map(|k| {
            let s = row_sum(controls, k) - R::one();
            s * s
        })
        .sum()
}

fn row_sum<R: Real>(controls: &ControlSequence<R>, k: usize) -> R {
    (0..controls.n_controllers())
        .map(|j| controls.get(j, k))
        .fold(R::zero(), |a, b| a + b)
}

/// `sum_j sum_k |u_jk - u_j,k+1|`.
pub fn tv_seminorm<R: Real>(controls: &ControlSequence<R>) -> R {
    (0..controls.n_controllers())
        .map(|j| {
            controls
                .values()
                .row(j)
                .windows(2)
                .map(|w| (w[0] - w[1]).abs())
                .fold(R::zero(), |a, b| a + b)
        })
        .fold(R::zero(), |a, b| a + b)
}

/// Adjoint-method gradient `dF/du_jk`.
pub fn adjoint_gradient<R: Real>(
    instance: &QuantumInstance<R>,
    controls: &ControlSequence<R>,
    spec: &ObjectiveSpec<R>,
    method: GradientMethod,
) -> Result<Grid<R>> {
    Ok(value_and_gradient(instance, controls, spec, method)?.1)
}

/// Objective value and its adjoint gradient from one forward and one backward sweep.
pub fn value_and_gradient<R: Real>(
    instance: &QuantumInstance<R>,
    controls: &ControlSequence<R>,
    spec: &ObjectiveSpec<R>,
    method: GradientMethod,
) -> Result<(R, Grid<R>)> {
    let (trace, spectra) = evolve_spectral(instance, controls, &instance.x_init)?;
    let n = controls.n_controllers();
    let t = controls.n_steps();
    let mut grad = Grid::zeros(n, t);
    let value = match spec {
        ObjectiveSpec::Energy { hbar, psi0, e_min } => {
            let psi: Vec<Vec<C<R>>> = trace.states.iter().map(|x| x.mul_vec(psi0)).collect();
            let e = expectation(hbar, &psi[t], *e_min)?;
            let scale = -R::lit(2.0) / *e_min;
            let mut kappa = hbar.mul_vec(&psi[t]);
            for k in (0..t).rev() {
                let s = &spectra[k];
                match method {
                    GradientMethod::Exact => {
                        let v = &s.eigen.vectors;
                        let a = v.adjoint_mul_vec(&kappa);
                        let b = v.adjoint_mul_vec(&psi[k]);
                        let kernel = s.frechet_kernel();
                        for (j, hj) in instance.h_controls.iter().enumerate() {
                            let hv = v.adjoint_matmul(&hj.matmul(v));
                            let mut acc = C::new(R::zero(), R::zero());
                            for p in 0..a.len() {
                                let mut row = C::new(R::zero(), R::zero());
                                for q in 0..b.len() {
                                    row += kernel[(p, q)] * hv[(p, q)] * b[q];
                                }
                                acc += a[p].conj() * row;
                            }
                            grad.set(j, k, scale * acc.re);
                        }
                    }
                    GradientMethod::FirstOrder => {
                        for (j, hj) in instance.h_controls.iter().enumerate() {
                            let d = inner(&kappa, &hj.mul_vec(&psi[k + 1]));
                            // <kappa| -i dt H_j psi_k>
                            let z = times_i(d) * (-s.dt);
                            grad.set(j, k, scale * z.re);
                        }
                    }
                }
                kappa = s.propagator.adjoint_mul_vec(&kappa);
            }
            R::one() - e / *e_min
        }
        ObjectiveSpec::Infidelity { target, norm_dim } => {
            let tau = overlap(target, trace.final_state());
            let mag = tau.norm();
            if !(mag > R::zero()) {
                return Err(Error::UndefinedPhase);
            }
            let unphase = tau.conj() / cr(mag);
            let scale = -R::one() / *norm_dim;
            let mut lambda = target.clone();
            for k in (0..t).rev() {
                let s = &spectra[k];
                match method {
                    GradientMethod::Exact => {
                        let v = &s.eigen.vectors;
                        // M = V^dagger X_{k-1} lambda_k^dagger V
                        let m = v
                            .adjoint_matmul(&trace.states[k])
                            .matmul(&lambda.adjoint())
                            .matmul(v);
                        let kernel = s.frechet_kernel();
                        for (j, hj) in instance.h_controls.iter().enumerate() {
                            let hv = v.adjoint_matmul(&hj.matmul(v));
                            let mut acc = C::new(R::zero(), R::zero());
                            for p in 0..hv.rows() {
                                for q in 0..hv.cols() {
                                    acc += kernel[(p, q)] * hv[(p, q)] * m[(q, p)];
                                }
                            }
                            grad.set(j, k, scale * (unphase * acc).re);
                        }
                    }
                    GradientMethod::FirstOrder => {
                        for (j, hj) in instance.h_controls.iter().enumerate() {
                            // tr(lambda^dagger (-i dt) H_j X_k)
                            let d = overlap(&lambda, &hj.matmul(&trace.states[k + 1]));
                            let z = times_i(d) * (-s.dt);
                            grad.set(j, k, scale * (unphase * z).re);
                        }
                    }
                }
                lambda = s.propagator.adjoint_matmul(&lambda);
            }
            R::one() - mag / *norm_dim
        }
    };
    Ok((value, grad))
}

/// Augmented-Lagrangian terms of the ADMM `u`-subproblem.
#[derive(Clone, Copy, Debug)]
pub struct AdmmTerms<'a, R: Real> {
    pub v: &'a Grid<R>,
    pub mu: &'a Grid<R>,
    pub beta: R,
}

/// `F + rho l(u) [+ beta/2 sum (u_jk - u_j,k+1 - v_jk + mu_jk)^2]` and its gradient.
///
/// The penalty term is only active in [`Sos1Mode::Penalized`]. Total variation
/// never appears here; it enters solvers through the ADMM split only.
pub fn composite_value_and_gradient<R: Real>(
    instance: &QuantumInstance<R>,
    controls: &ControlSequence<R>,
    spec: &ObjectiveSpec<R>,
    penalty: &PenaltyConfig<R>,
    admm: Option<&AdmmTerms<'_, R>>,
    method: GradientMethod,
) -> Result<(R, Grid<R>)> {
    let (mut value, mut grad) = value_and_gradient(instance, controls, spec, method)?;
    add_penalty_terms(controls, penalty, admm, &mut value, &mut grad)?;
    Ok((value, grad))
}

pub(crate) fn add_penalty_terms<R: Real>(
    controls: &ControlSequence<R>,
    penalty: &PenaltyConfig<R>,
    admm: Option<&AdmmTerms<'_, R>>,
    value: &mut R,
    grad: &mut Grid<R>,
) -> Result<()> {
    let n = controls.n_controllers();
    let t = controls.n_steps();
    if penalty.sos1_mode == Sos1Mode::Penalized && penalty.rho != R::zero() {
        for k in 0..t {
            let viol = row_sum(controls, k) - R::one();
            *value += penalty.rho * viol * viol;
            let g = R::lit(2.0) * penalty.rho * viol;
            for j in 0..n {
                grad.add_at(j, k, g);
            }
        }
    }
    if let Some(terms) = admm {
        if terms.v.rows() != n
            || terms.v.cols() + 1 != t
            || terms.mu.rows() != n
            || terms.mu.cols() + 1 != t
        {
            return Err(Error::Dimension(format!(
                "ADMM split variables must be {n}x{}",
                t.saturating_sub(1)
            )));
        }
        let half = R::lit(0.5);
        for j in 0..n {
            for k in 0..t - 1 {
                let r = controls.get(j, k) - controls.get(j, k + 1) - terms.v.get(j, k)
                    + terms.mu.get(j, k);
                *value += half * terms.beta * r * r;
                grad.add_at(j, k, terms.beta * r);
                grad.add_at(j, k + 1, -terms.beta * r);
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{
        build_circuit_instance_with_target, build_cnot_instance, build_not_instance,
        energy_instance_for, grid_edges, pauli, random_unitary,
    };
    use crate::oracle;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn seq(rows: &[&[f64]], tf: f64) -> ControlSequence<f64> {
        ControlSequence::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>(), tf)
            .unwrap()
    }

    #[test]
    fn energy2_at_identity_is_one() {
        let inst = energy_instance_for::<f64>(2, 0).unwrap();
        let ObjectiveSpec::Energy { hbar, psi0, e_min } = &inst.objective else {
            panic!()
        };
        let f = energy_objective(&ComplexMatrix::identity(4), hbar, psi0, *e_min).unwrap();
        assert!((f - 1.0).abs() < 1e-15);
    }

    #[test]
    fn energy_at_ground_state_is_zero() {
        let inst = energy_instance_for::<f64>(2, 0).unwrap();
        let ObjectiveSpec::Energy { hbar, psi0, e_min } = &inst.objective else {
            panic!()
        };
        // Map psi0 onto |01>, a ground state of diag(2, -2, -2, 2).
        let mut w = ComplexMatrix::zeros(4, 4);
        for i in 0..4 {
            w[(1, i)] = psi0[i].conj();
        }
        let f = {
            let psi = w.mul_vec(psi0);
            let e = inner(&psi, &hbar.mul_vec(&psi)).re;
            1.0 - e / e_min
        };
        assert!(f.abs() < 1e-15);
    }

    #[test]
    fn infidelity_basic_cases() {
        let t = random_unitary::<f64>(4, 5);
        assert!(infidelity_objective(&t, &t, 4.0).unwrap().abs() < 1e-15);
        let rotated = t.scale(c(0.3f64.cos(), 0.3f64.sin()));
        assert!(infidelity_objective(&rotated, &t, 4.0).unwrap().abs() < 1e-15);
        let f = infidelity_objective(&pauli::x::<f64>(), &ComplexMatrix::identity(2), 2.0).unwrap();
        assert_eq!(f, 1.0);
    }

    #[test]
    fn not_objective_at_identity_is_one() {
        let inst = build_not_instance::<f64>(6.0, 60);
        let ObjectiveSpec::Infidelity { target, norm_dim } = &inst.objective else {
            panic!()
        };
        let f = infidelity_objective(&ComplexMatrix::identity(3), target, *norm_dim).unwrap();
        assert_eq!(f, 1.0);
    }

    #[test]
    fn penalty_and_tv_examples() {
        assert_eq!(sos1_penalty(&seq(&[&[1.0, 0.0], &[0.0, 1.0]], 1.0)), 0.0);
        assert!((sos1_penalty(&seq(&[&[0.7], &[0.7]], 1.0)) - 0.16).abs() < 1e-15);
        assert_eq!(sos1_penalty(&ControlSequence::zeros(3, 2, 1.0)), 2.0);
        assert_eq!(tv_seminorm(&ControlSequence::constant(2, 5, 1.0, 0.3)), 0.0);
        assert_eq!(tv_seminorm(&seq(&[&[0.0, 1.0, 0.0]], 1.0)), 2.0);
        let alt = seq(&[&[1.0, 0.0, 1.0, 0.0], &[0.0, 1.0, 0.0, 1.0]], 1.0);
        assert_eq!(tv_seminorm(&alt), 6.0);
        assert_eq!(tv_seminorm(&ControlSequence::constant(3, 1, 1.0, 0.5)), 0.0);
    }

    #[test]
    fn identity_hbar_gives_zero_gradient() {
        let inst = energy_instance_for::<f64>(2, 0).unwrap();
        let ObjectiveSpec::Energy { psi0, .. } = inst.objective.clone() else {
            panic!()
        };
        let spec = ObjectiveSpec::Energy {
            hbar: ComplexMatrix::identity(4),
            psi0,
            e_min: -1.0,
        };
        let u = ControlSequence::constant(2, 10, 2.0, 0.3);
        let g = adjoint_gradient(&inst, &u, &spec, GradientMethod::Exact).unwrap();
        assert!(g.max_abs() < 1e-10);
    }

    #[test]
    fn orthogonal_target_has_undefined_phase() {
        let inst = QuantumInstance::<f64>::bare(ComplexMatrix::zeros(2, 2), vec![pauli::z()]);
        let spec = ObjectiveSpec::Infidelity {
            target: pauli::x(),
            norm_dim: 2.0,
        };
        let u = ControlSequence::zeros(1, 3, 1.0);
        assert!(matches!(
            adjoint_gradient(&inst, &u, &spec, GradientMethod::Exact),
            Err(Error::UndefinedPhase)
        ));
    }

    fn assert_matches_fd(inst: &QuantumInstance<f64>, u: &ControlSequence<f64>) {
        let spec = &inst.objective;
        let g = adjoint_gradient(inst, u, spec, GradientMethod::Exact).unwrap();
        let fd = oracle::central_difference(u, 1e-6, |x| evaluate(inst, x, spec).unwrap());
        oracle::assert_gradient_close(&g, &fd, 1e-5, 1e-8);
    }

    fn random_interior(n: usize, t: usize, tf: f64, rng: &mut ChaCha8Rng) -> ControlSequence<f64> {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..t).map(|_| rng.gen_range(0.05..0.95)).collect())
            .collect();
        ControlSequence::from_rows(&rows, tf).unwrap()
    }

    #[test]
    fn energy_gradient_matches_finite_differences() {
        let inst = energy_instance_for::<f64>(2, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..3 {
            assert_matches_fd(&inst, &random_interior(2, 12, 2.0, &mut rng));
        }
    }

    #[test]
    fn infidelity_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cnot = build_cnot_instance::<f64>(5.0, 20);
        assert_matches_fd(&cnot, &random_interior(2, 20, 5.0, &mut rng));
        let not = build_not_instance::<f64>(6.0, 15);
        assert_matches_fd(&not, &random_interior(2, 15, 6.0, &mut rng));
        let circ =
            build_circuit_instance_with_target(2, &grid_edges(1, 2), random_unitary(4, 7)).unwrap();
        assert_matches_fd(&circ, &random_interior(5, 10, 4.0, &mut rng));
    }

    #[test]
    fn first_order_gradient_converges_as_steps_shrink() {
        let inst = build_cnot_instance::<f64>(2.0, 10);
        let mut errs = Vec::new();
        for t in [10, 40, 160] {
            let u = ControlSequence::constant(2, t, 2.0, 0.4);
            let exact =
                adjoint_gradient(&inst, &u, &inst.objective, GradientMethod::Exact).unwrap();
            let approx =
                adjoint_gradient(&inst, &u, &inst.objective, GradientMethod::FirstOrder).unwrap();
            errs.push(exact.max_abs_diff(&approx) / exact.max_abs());
        }
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
        assert!(errs[2] < 0.05, "{errs:?}");
    }

    #[test]
    fn composite_reduces_to_plain_gradient_without_penalty() {
        let inst = build_cnot_instance::<f64>(5.0, 10);
        let u = ControlSequence::constant(2, 10, 5.0, 0.5);
        let (v0, g0) =
            value_and_gradient(&inst, &u, &inst.objective, GradientMethod::Exact).unwrap();
        let (v1, g1) = composite_value_and_gradient(
            &inst,
            &u,
            &inst.objective,
            &PenaltyConfig::off(),
            None,
            GradientMethod::Exact,
        )
        .unwrap();
        assert_eq!(v0, v1);
        assert_eq!(g0, g1);
    }

    #[test]
    fn penalty_closed_form() {
        let zero = ComplexMatrix::<f64>::zeros(2, 2);
        let inst = QuantumInstance::bare(zero.clone(), vec![zero.clone(), zero]);
        let u = seq(&[&[0.7], &[0.7]], 1.0);
        let (base, _) =
            value_and_gradient(&inst, &u, &inst.objective, GradientMethod::Exact).unwrap();
        let (v, g) = composite_value_and_gradient(
            &inst,
            &u,
            &inst.objective,
            &PenaltyConfig::penalized(1.0),
            None,
            GradientMethod::Exact,
        )
        .unwrap();
        assert!((v - base - 0.16).abs() < 1e-15);
        assert!((g.get(0, 0) - 0.8).abs() < 1e-15 && (g.get(1, 0) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn full_composite_matches_finite_differences() {
        let circ =
            build_circuit_instance_with_target(2, &grid_edges(1, 2), random_unitary(4, 3)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = random_interior(5, 8, 4.0, &mut rng);
        let v = Grid::from_vec(5, 7, (0..35).map(|_| rng.gen_range(-0.3..0.3)).collect()).unwrap();
        let mu = Grid::from_vec(5, 7, (0..35).map(|_| rng.gen_range(-0.3..0.3)).collect()).unwrap();
        let terms = AdmmTerms {
            v: &v,
            mu: &mu,
            beta: 0.5,
        };
        let pen = PenaltyConfig::penalized(0.7);
        let f = |x: &ControlSequence<f64>| {
            composite_value_and_gradient(
                &circ,
                x,
                &circ.objective,
                &pen,
                Some(&terms),
                GradientMethod::Exact,
            )
            .unwrap()
        };
        let (_, g) = f(&u);
        let fd = oracle::central_difference(&u, 1e-6, |x| f(x).0);
        oracle::assert_gradient_close(&g, &fd, 1e-5, 1e-8);
    }

    #[test]
    fn appending_duplicate_column() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = random_interior(3, 6, 1.0, &mut rng);
        let mut rows: Vec<Vec<f64>> = (0..3).map(|j| u.values().row(j).to_vec()).collect();
        for r in rows.iter_mut() {
            let last = *r.last().unwrap();
            r.push(last);
        }
        let ext = ControlSequence::from_rows(&rows, 7.0 / 6.0).unwrap();
        assert_eq!(tv_seminorm(&ext), tv_seminorm(&u));
        let last: f64 = (0..3).map(|j| u.get(j, 5)).sum::<f64>() - 1.0;
        assert!((sos1_penalty(&ext) - sos1_penalty(&u) - last * last).abs() < 1e-15);
    }

    #[test]
    fn single_precision_gradient_tracks_double() {
        let inst = build_cnot_instance::<f64>(5.0, 20);
        let u = ControlSequence::constant(2, 20, 5.0, 0.5);
        let g64 = adjoint_gradient(&inst, &u, &inst.objective, GradientMethod::Exact).unwrap();
        let inst32 = inst.cast::<f32>();
        let g32 =
            adjoint_gradient(&inst32, &u.cast(), &inst32.objective, GradientMethod::Exact).unwrap();
        for (a, b) in g64.as_slice().iter().zip(g32.as_slice()) {
            assert!((a - *b as f64).abs() < 1e-4);
        }
    }
}
