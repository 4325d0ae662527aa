// Copyright 2026 The bqctl Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("control Hamiltonian {index} is {found}x{found}, expected {expected}x{expected}")]
    ControllerDimension {
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("expected {expected} control values, got {found}")]
    ControlLength { expected: usize, found: usize },

    #[error("matrix is not Hermitian (max |A - A^dagger| = {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("matrix is not unitary (max |U^dagger U - I| = {defect:e})")]
    NotUnitary { defect: f64 },

    #[error("energy expectation has imaginary part {residue:e}")]
    ImaginaryExpectation { residue: f64 },

    #[error("undefined phase: tr(X_targ^dagger X_T) vanishes; restart from perturbed controls")]
    UndefinedPhase,

    #[error("control grids differ: {0}")]
    GridMismatch(String),

    #[error("infeasible constraint set: {0}")]
    Infeasible(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
