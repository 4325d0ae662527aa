// Copyright 2026 The bqctl Authors
// SPDX-License-Identifier: Apache-2.0

//! Real scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::str::FromStr;

use num_complex::Complex;
use num_traits as nt;

/// Floating-point type the solvers are generic over (`f32` or `f64`).
///
/// The associated tolerances scale the acceptance thresholds that are stated
/// for double precision down to what single precision can honour.
pub trait Real:
    nt::Float
    + nt::FloatConst
    + nt::FromPrimitive
    + nt::NumAssign
    + Debug
    + Display
    + LowerExp
    + FromStr
    + Sum
    + Default
    + Send
    + Sync
    + 'static
{
    /// Maximum entrywise |A - A^dagger| accepted for a Hermitian input.
    const HERMITIAN_TOL: f64;
    /// Maximum entrywise |U^dagger U - I| accepted for a unitary.
    const UNITARY_TOL: f64;

    /// Converts an `f64` literal. Values outside the target range saturate.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as nt::FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn count(n: usize) -> Self {
        Self::lit(n as f64)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        nt::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    #[inline]
    fn hermitian_tol() -> Self {
        Self::lit(Self::HERMITIAN_TOL)
    }

    #[inline]
    fn unitary_tol() -> Self {
        Self::lit(Self::UNITARY_TOL)
    }
}

impl Real for f64 {
    const HERMITIAN_TOL: f64 = 1e-12;
    const UNITARY_TOL: f64 = 1e-10;
}

impl Real for f32 {
    const HERMITIAN_TOL: f64 = 1e-5;
    const UNITARY_TOL: f64 = 1e-4;
}

/// Complex scalar over a [`Real`].
pub type C<R> = Complex<R>;

#[inline]
pub(crate) fn c<R: Real>(re: R, im: R) -> C<R> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn cr<R: Real>(re: R) -> C<R> {
    Complex::new(re, R::zero())
}

/// Multiplies by the imaginary unit without a full complex product.
#[inline]
pub(crate) fn times_i<R: Real>(z: C<R>) -> C<R> {
    Complex::new(-z.im, z.re)
}
