// Copyright 2026 The bqctl Authors
// SPDX-License-Identifier: Apache-2.0

//! Binary quantum control on a piecewise-constant time grid.
//!
//! The pipeline relaxes the binary SOS1 controls to `[0, 1]`, solves the
//! relaxation ([`relax`]), rounds back to binary ([`rounding`]) and improves
//! the binary point with a trust-region local search ([`alb`]). The numerical
//! core is generic over [`Real`]; the aliases below fix it to `f64` or `f32`.

pub mod alb;
pub mod controls;
pub mod dynamics;
pub mod error;
pub mod instances;
pub mod io;
pub mod linalg;
pub mod objectives;
pub mod oracle;
pub mod relax;
pub mod report;
pub mod rounding;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Controls = controls::ControlSequence<f64>;
pub type Controls32 = controls::ControlSequence<f32>;
pub type Matrix = linalg::ComplexMatrix<f64>;
pub type Matrix32 = linalg::ComplexMatrix<f32>;
pub type Instance = instances::QuantumInstance<f64>;
pub type Instance32 = instances::QuantumInstance<f32>;
