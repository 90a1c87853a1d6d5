//! Scalar abstractions.
//!
//! [`Scalar`] is the minimal ordered field needed by the exact matrix-game
//! solver and the mixed-strategy types; it is implemented for `f32`, `f64`
//! and the rational types from `num-rational`, so the simplex routine can be
//! run in exact arithmetic. [`Real`] adds the floating-point operations the
//! PDE, ODE and conjugation code relies on.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive};

/// Ordered field used by the LP kernel.
pub trait Scalar:
    Clone + PartialOrd + Debug + Display + Num + Signed + Send + Sync + 'static
{
    /// Magnitude below which a quantity is treated as zero when pivoting.
    /// Exact types return zero.
    fn pivot_eps() -> Self;

    /// Tolerance for the unit-sum check on probability vectors.
    fn simplex_tol() -> Self;

    /// Lossy conversion used for diagnostics and error messages.
    fn to_f64_lossy(&self) -> f64;

    /// Conversion from a literal; exact types convert exactly where possible.
    fn from_f64_lossy(v: f64) -> Self;
}

impl Scalar for f64 {
    fn pivot_eps() -> Self {
        1e-12
    }
    fn simplex_tol() -> Self {
        1e-12
    }
    fn to_f64_lossy(&self) -> f64 {
        *self
    }
    fn from_f64_lossy(v: f64) -> Self {
        v
    }
}

impl Scalar for f32 {
    fn pivot_eps() -> Self {
        1e-6
    }
    fn simplex_tol() -> Self {
        1e-5
    }
    fn to_f64_lossy(&self) -> f64 {
        *self as f64
    }
    fn from_f64_lossy(v: f64) -> Self {
        v as f32
    }
}

impl Scalar for Ratio<i64> {
    fn pivot_eps() -> Self {
        Ratio::from_integer(0)
    }
    fn simplex_tol() -> Self {
        Ratio::from_integer(0)
    }
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
    fn from_f64_lossy(v: f64) -> Self {
        Ratio::from_f64(v).unwrap_or_else(|| Ratio::from_integer(0))
    }
}

impl Scalar for BigRational {
    fn pivot_eps() -> Self {
        BigRational::from_integer(BigInt::from(0))
    }
    fn simplex_tol() -> Self {
        BigRational::from_integer(BigInt::from(0))
    }
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
    fn from_f64_lossy(v: f64) -> Self {
        BigRational::from_float(v).unwrap_or_else(|| BigRational::from_integer(BigInt::from(0)))
    }
}

/// Floating-point scalar for the continuous parts of the pipeline.
pub trait Real: Scalar + Float + FromPrimitive + Sum + Copy {}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into `S`.
#[inline]
pub fn lit<S: Real>(v: f64) -> S {
    S::from_f64(v).expect("literal representable in target float type")
}

/// Converts a count into `S`.
#[inline]
pub fn count<S: Real>(n: usize) -> S {
    S::from_usize(n).expect("count representable in target float type")
}

/// Euclidean norm.
pub fn norm2<S: Real>(v: &[S]) -> S {
    v.iter().map(|&a| a * a).sum::<S>().sqrt()
}

/// Dot product of equally sized slices.
pub fn dot<S: Real>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}
