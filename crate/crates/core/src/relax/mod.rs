// Copyright 2026 The bqctl Authors
// SPDX-License-Identifier: Apache-2.0

//! Continuous relaxation solvers.

mod admm;
mod pgrape;
mod qn;

pub use admm::{admm_solve, soft_threshold, AdmmConfig, AdmmState};
pub use pgrape::{pgrape_solve, PgrapeConfig};
pub use qn::{bound_qn_minimize, QnResult, QuasiNewtonConfig};

use crate::controls::{ControlSequence, Grid};
use crate::error::{Error, Result};
use crate::instances::QuantumInstance;
use crate::objectives::{
    composite_value_and_gradient, AdmmTerms, GradientMethod, ObjectiveSpec, PenaltyConfig, Sos1Mode,
};
use crate::scalar::Real;

/// Maps the free optimization vector to controls and back.
///
/// In substitution mode only the first row is free and the second is `1 - x`.
struct Parametrization<'a, R: Real> {
    template: &'a ControlSequence<R>,
    substituted: bool,
}

impl<'a, R: Real> Parametrization<'a, R> {
    fn new(template: &'a ControlSequence<R>, mode: Sos1Mode) -> Result<Self> {
        let substituted = mode == Sos1Mode::SubstitutedTwoControl;
        if substituted && template.n_controllers() != 2 {
            return Err(Error::InvalidArgument(format!(
                "substitution needs exactly 2 controllers, found {}",
                template.n_controllers()
            )));
        }
        Ok(Self {
            template,
            substituted,
        })
    }

    fn pack(&self, u: &ControlSequence<R>) -> Vec<R> {
        if self.substituted {
            u.values().row(0).to_vec()
        } else {
            u.values().as_slice().to_vec()
        }
    }

    fn unpack(&self, x: &[R]) -> ControlSequence<R> {
        let n = self.template.n_controllers();
        let t = self.template.n_steps();
        let values = if self.substituted {
            let mut g = Grid::zeros(2, t);
            for (k, &v) in x.iter().enumerate() {
                g.set(0, k, v);
                g.set(1, k, R::one() - v);
            }
            g
        } else {
            Grid::from_vec(n, t, x.to_vec()).expect("packed length")
        };
        self.template.with_values(values).expect("same grid")
    }

    fn pull_back(&self, g: &Grid<R>) -> Vec<R> {
        if self.substituted {
            g.row(0)
                .iter()
                .zip(g.row(1))
                .map(|(&a, &b)| a - b)
                .collect()
        } else {
            g.as_slice().to_vec()
        }
    }
}

/// Minimizes the composite relaxed objective over the box from `x0`.
fn minimize_composite<R: Real>(
    instance: &QuantumInstance<R>,
    spec: &ObjectiveSpec<R>,
    penalty: &PenaltyConfig<R>,
    admm: Option<&AdmmTerms<'_, R>>,
    x0: &ControlSequence<R>,
    qn: &QuasiNewtonConfig,
    gradient: GradientMethod,
) -> Result<(ControlSequence<R>, QnResult<R>)> {
    if !x0.is_in_box() {
        return Err(Error::InvalidArgument(
            "initial controls must lie in [0, 1]".into(),
        ));
    }
    let map = Parametrization::new(x0, penalty.sos1_mode)?;
    let start = map.pack(x0);
    let lower = vec![R::zero(); start.len()];
    let upper = vec![R::one(); start.len()];
    let result = bound_qn_minimize(
        |x| {
            let u = map.unpack(x);
            let (v, g) = composite_value_and_gradient(instance, &u, spec, penalty, admm, gradient)?;
            Ok((v, map.pull_back(&g)))
        },
        &start,
        &lower,
        &upper,
        qn,
    )?;
    Ok((map.unpack(&result.x), result))
}
