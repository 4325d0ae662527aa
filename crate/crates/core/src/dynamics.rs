// Copyright 2026 The bqctl Authors
// SPDX-License-Identifier: Apache-2.0

//! Step Hamiltonians, propagators and time evolution on the control grid.

use crate::controls::ControlSequence;
use crate::error::{Error, Result};
use crate::instances::QuantumInstance;
use crate::linalg::{ComplexMatrix, HermitianEigen};
use crate::scalar::{c, Real, C};

/// `H_k = H0 + sum_j u_jk H_j`.
pub fn assemble_hamiltonian<R: Real>(
    instance: &QuantumInstance<R>,
    controls_at_step: &[R],
) -> Result<ComplexMatrix<R>> {
    let n = instance.h_controls.len();
    if controls_at_step.len() != n {
        return Err(Error::ControlLength {
            expected: n,
            found: controls_at_step.len(),
        });
    }
    let dim = instance.h_drift.rows();
    if !instance.h_drift.is_square() {
        return Err(Error::Dimension("drift Hamiltonian is not square".into()));
    }
    let mut h = instance.h_drift.clone();
    for (index, (hj, &u)) in instance.h_controls.iter().zip(controls_at_step).enumerate() {
        if hj.rows() != dim || hj.cols() != dim {
            return Err(Error::ControllerDimension {
                index,
                expected: dim,
                found: hj.rows(),
            });
        }
        if u != R::zero() {
            h.add_scaled_assign(u, hj);
        }
    }
    Ok(h)
}

/// Eigendecomposition of a step Hamiltonian together with its propagator.
#[derive(Clone, Debug)]
pub struct StepSpectrum<R: Real> {
    pub eigen: HermitianEigen<R>,
    pub dt: R,
    pub propagator: ComplexMatrix<R>,
}

impl<R: Real> StepSpectrum<R> {
    pub fn new(h: &ComplexMatrix<R>, dt: R) -> Result<Self> {
        check_hermitian(h)?;
        let eigen = h.hermitian_eigen();
        let propagator = eigen.map_spectrum(|l| phase(-l * dt));
        Ok(Self {
            eigen,
            dt,
            propagator,
        })
    }

    /// Divided-difference kernel `Phi` with `dU[E] = V (Phi o (V^dagger E V)) V^dagger`.
    pub fn frechet_kernel(&self) -> ComplexMatrix<R> {
        let lam = &self.eigen.values;
        let dt = self.dt;
        let half = R::lit(0.5);
        ComplexMatrix::from_fn(lam.len(), lam.len(), |a, b| {
            let z = (lam[a] - lam[b]) * dt * half;
            let sinc = if z.abs() < R::lit(1e-4) {
                R::one() - z * z / R::lit(6.0)
            } else {
                z.sin() / z
            };
            let p = phase(-(lam[a] + lam[b]) * dt * half);
            // -i dt e^{-i dt (la + lb)/2} sinc(dt (la - lb)/2)
            c(p.im, -p.re) * (dt * sinc)
        })
    }

    /// Exact derivative of `exp(-i H dt)` along direction `e`.
    pub fn derivative(&self, e: &ComplexMatrix<R>) -> ComplexMatrix<R> {
        let v = &self.eigen.vectors;
        let kernel = self.frechet_kernel();
        let mut a = v.adjoint_matmul(&e.matmul(v));
        hadamard_assign(&mut a, &kernel);
        v.matmul(&a.matmul(&v.adjoint()))
    }
}

/// `exp(-i H dt)` by Hermitian eigendecomposition. Rejects non-Hermitian input.
pub fn step_propagator<R: Real>(h: &ComplexMatrix<R>, dt: R) -> Result<ComplexMatrix<R>> {
    Ok(StepSpectrum::new(h, dt)?.propagator)
}

/// Per-step propagators `U_k` and cumulative operators `X_0..X_T`.
#[derive(Clone, Debug)]
pub struct EvolutionTrace<R: Real> {
    pub propagators: Vec<ComplexMatrix<R>>,
    pub states: Vec<ComplexMatrix<R>>,
}

impl<R: Real> EvolutionTrace<R> {
    pub fn final_state(&self) -> &ComplexMatrix<R> {
        self.states.last().expect("trace holds X_0")
    }

    pub fn n_steps(&self) -> usize {
        self.propagators.len()
    }
}

/// Evolves `instance.x_init` under the piecewise-constant controls.
pub fn evolve<R: Real>(
    instance: &QuantumInstance<R>,
    controls: &ControlSequence<R>,
) -> Result<EvolutionTrace<R>> {
    evolve_from(instance, controls, &instance.x_init)
}

/// Like [`evolve`] but starting from an arbitrary operator.
pub fn evolve_from<R: Real>(
    instance: &QuantumInstance<R>,
    controls: &ControlSequence<R>,
    x_start: &ComplexMatrix<R>,
) -> Result<EvolutionTrace<R>> {
    Ok(evolve_spectral(instance, controls, x_start)?.0)
}

pub(crate) fn evolve_spectral<R: Real>(
    instance: &QuantumInstance<R>,
    controls: &ControlSequence<R>,
    x_start: &ComplexMatrix<R>,
) -> Result<(EvolutionTrace<R>, Vec<StepSpectrum<R>>)> {
    check_controls(instance, controls)?;
    if x_start.rows() != instance.dim() || !x_start.is_square() {
        return Err(Error::Dimension(format!(
            "initial operator is {}x{}, system dimension is {}",
            x_start.rows(),
            x_start.cols(),
            instance.dim()
        )));
    }
    let t = controls.n_steps();
    let mut spectra = Vec::with_capacity(t);
    let mut propagators = Vec::with_capacity(t);
    let mut states = Vec::with_capacity(t + 1);
    states.push(x_start.clone());
    for k in 0..t {
        let h = assemble_hamiltonian(instance, &controls.column(k))?;
        let s = StepSpectrum::new(&h, controls.dt())?;
        let next = s.propagator.matmul(&states[k]);
        propagators.push(s.propagator.clone());
        states.push(next);
        spectra.push(s);
    }
    Ok((
        EvolutionTrace {
            propagators,
            states,
        },
        spectra,
    ))
}

pub(crate) fn check_controls<R: Real>(
    instance: &QuantumInstance<R>,
    controls: &ControlSequence<R>,
) -> Result<()> {
    if controls.n_controllers() != instance.n_controllers() {
        return Err(Error::ControlLength {
            expected: instance.n_controllers(),
            found: controls.n_controllers(),
        });
    }
    Ok(())
}

pub(crate) fn check_hermitian<R: Real>(h: &ComplexMatrix<R>) -> Result<()> {
    let defect = h.hermitian_defect();
    if defect > R::hermitian_tol() || defect.is_nan() {
        return Err(Error::NotHermitian {
            defect: defect.as_f64(),
        });
    }
    Ok(())
}

pub(crate) fn hadamard_assign<R: Real>(a: &mut ComplexMatrix<R>, b: &ComplexMatrix<R>) {
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            a[(i, j)] *= b[(i, j)];
        }
    }
}

#[inline]
fn phase<R: Real>(theta: R) -> C<R> {
    c(theta.cos(), theta.sin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{build_cnot_instance, pauli, QuantumInstance};
    use crate::oracle;
    use crate::scalar::cr;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn single_control(h1: ComplexMatrix<f64>) -> QuantumInstance<f64> {
        QuantumInstance::bare(ComplexMatrix::zeros(2, 2), vec![h1])
    }

    #[test]
    fn zero_controls_and_drift_give_zero_hamiltonian() {
        let inst = QuantumInstance::bare(ComplexMatrix::zeros(2, 2), vec![pauli::x(), pauli::z()]);
        assert!(assemble_hamiltonian(&inst, &[0.0, 0.0]).unwrap().is_zero());
    }

    #[test]
    fn single_term_sum_is_the_control_hamiltonian() {
        let inst = single_control(pauli::x());
        assert_eq!(assemble_hamiltonian(&inst, &[1.0]).unwrap(), pauli::x());
    }

    #[test]
    fn wrong_control_length_is_rejected() {
        let inst = single_control(pauli::x());
        assert!(matches!(
            assemble_hamiltonian(&inst, &[1.0, 0.0]),
            Err(Error::ControlLength {
                expected: 1,
                found: 2
            })
        ));
    }

    #[test]
    fn mismatched_controller_is_named() {
        let inst = QuantumInstance::bare(
            ComplexMatrix::zeros(2, 2),
            vec![pauli::x(), ComplexMatrix::identity(3)],
        );
        match assemble_hamiltonian(&inst, &[0.0, 1.0]) {
            Err(Error::ControllerDimension { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cnot_hamiltonian_matches_hand_built_matrix() {
        let inst = build_cnot_instance::<f64>(5.0, 100);
        let h = assemble_hamiltonian(&inst, &[1.0, 0.0]).unwrap();
        let (x, y, z) = (pauli::x(), pauli::y(), pauli::z());
        let i2 = ComplexMatrix::identity(2);
        let k = oracle::naive_kron;
        let mut want = k(&x, &x);
        want = &want + &k(&y, &y);
        want = &want + &k(&z, &z);
        want = &want + &k(&x, &i2);
        assert!(h.max_abs_diff(&want) < 1e-15);
        // Spot-check against explicit entries: XX+YY+ZZ = [[1,0,0,0],[0,-1,2,0],[0,2,-1,0],[0,0,0,1]].
        assert_eq!(h[(1, 2)], cr(2.0));
        assert_eq!(h[(0, 2)], cr(1.0));
        assert_eq!(h[(1, 1)], cr(-1.0));
    }

    #[test]
    fn propagator_of_zero_is_identity() {
        let u = step_propagator(&ComplexMatrix::<f64>::zeros(3, 3), 0.3).unwrap();
        assert_eq!(u, ComplexMatrix::identity(3));
    }

    #[test]
    fn pauli_x_for_time_pi_is_minus_identity() {
        let u = step_propagator(&pauli::x::<f64>(), PI).unwrap();
        let want = ComplexMatrix::identity(2).scale_real(-1.0);
        assert!(u.max_abs_diff(&want) < 1e-14);
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let mut h = pauli::x::<f64>();
        h[(0, 1)] = c(1.0, 1e-9);
        assert!(matches!(
            step_propagator(&h, 0.1),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn propagator_matches_rk4_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = oracle::random_hermitian(4, &mut rng);
        let u = step_propagator(&h, 0.05).unwrap();
        let reference = oracle::rk4_propagator(&h, 0.05, 10_000);
        assert!((&u - &reference).frobenius_norm() < 1e-8);
        assert!(u.unitarity_defect() < 1e-10);
    }

    #[test]
    fn zero_hamiltonians_leave_state_fixed() {
        let inst =
            QuantumInstance::bare(ComplexMatrix::zeros(2, 2), vec![ComplexMatrix::zeros(2, 2)]);
        let u = ControlSequence::constant(1, 7, 1.0, 0.4);
        let trace = evolve(&inst, &u).unwrap();
        assert_eq!(trace.states.len(), 8);
        assert!(trace.states.iter().all(|x| *x == inst.x_init));
    }

    #[test]
    fn constant_pauli_drive_flips_sign_at_pi() {
        let inst = single_control(pauli::x());
        for t in [1, 4, 17] {
            let u = ControlSequence::constant(1, t, PI, 1.0);
            let trace = evolve(&inst, &u).unwrap();
            let want = inst.x_init.scale_real(-1.0);
            assert!(trace.final_state().max_abs_diff(&want) < 1e-12, "T={t}");
        }
    }

    #[test]
    fn frechet_derivative_matches_finite_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = oracle::random_hermitian(4, &mut rng);
        let e = oracle::random_hermitian(4, &mut rng);
        let s = StepSpectrum::new(&h, 0.7).unwrap();
        let eps = 1e-6;
        let mut hp = h.clone();
        hp.add_scaled_assign(eps, &e);
        let mut hm = h.clone();
        hm.add_scaled_assign(-eps, &e);
        let fd = (&step_propagator(&hp, 0.7).unwrap() - &step_propagator(&hm, 0.7).unwrap())
            .scale_real(0.5 / eps);
        assert!(s.derivative(&e).max_abs_diff(&fd) < 1e-8);
    }

    #[test]
    fn degenerate_spectrum_derivative_is_finite() {
        let s = StepSpectrum::new(&ComplexMatrix::<f64>::identity(2), 0.3).unwrap();
        let d = s.derivative(&pauli::x());
        assert!(d
            .as_slice()
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite()));
    }

    #[test]
    fn split_evolution_composes() {
        let inst = build_cnot_instance::<f64>(2.0, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rows: Vec<Vec<f64>> = (0..2)
            .map(|_| (0..10).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect();
        let full = ControlSequence::from_rows(&rows, 2.0).unwrap();
        let first: Vec<Vec<f64>> = rows.iter().map(|r| r[..5].to_vec()).collect();
        let second: Vec<Vec<f64>> = rows.iter().map(|r| r[5..].to_vec()).collect();
        let a = evolve(&inst, &ControlSequence::from_rows(&first, 1.0).unwrap()).unwrap();
        let b = evolve_from(
            &inst,
            &ControlSequence::from_rows(&second, 1.0).unwrap(),
            a.final_state(),
        )
        .unwrap();
        let whole = evolve(&inst, &full).unwrap();
        assert!(whole.final_state().max_abs_diff(b.final_state()) < 1e-12);
    }

    #[test]
    fn trace_is_consistent_and_unitary() {
        let inst = build_cnot_instance::<f64>(5.0, 50);
        let u = ControlSequence::constant(2, 50, 5.0, 0.5);
        let trace = evolve(&inst, &u).unwrap();
        assert_eq!(trace.states[0], inst.x_init);
        for k in 0..50 {
            let next = trace.propagators[k].matmul(&trace.states[k]);
            assert!(next.max_abs_diff(&trace.states[k + 1]) <= 1e-12);
            assert!(trace.propagators[k].unitarity_defect() <= 1e-10);
            assert!(trace.states[k + 1].unitarity_defect() <= 1e-10);
        }
    }

    #[test]
    fn evolution_is_deterministic() {
        let inst = build_cnot_instance::<f64>(5.0, 20);
        let u = ControlSequence::constant(2, 20, 5.0, 0.3);
        let a = evolve(&inst, &u).unwrap();
        let b = evolve(&inst, &u).unwrap();
        assert_eq!(a.final_state(), b.final_state());
    }
}
