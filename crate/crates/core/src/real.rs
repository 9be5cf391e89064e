use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar used throughout the crate.
///
/// Implemented for `f32` and `f64`. Tolerances that depend on the precision
/// of the type (solver stopping rules, symmetry checks, singularity
/// thresholds) are exposed as associated functions so that generic code does
/// not hard-code `f64` constants.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Relative tolerance for iterative solvers (Newton, bisection).
    fn solver_tol() -> Self;

    /// Relative tolerance used when checking symmetry of a matrix.
    fn symmetry_tol() -> Self;

    /// Smallest admissible eigenvalue as a fraction of the trace.
    fn singular_tol() -> Self;

    /// Converts an `f64` literal. Panics only if the literal is not
    /// representable, which never happens for `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in Real")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in Real")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn solver_tol() -> Self {
        1e-12
    }
    fn symmetry_tol() -> Self {
        1e-12
    }
    fn singular_tol() -> Self {
        1e-10
    }
}

impl Real for f32 {
    fn solver_tol() -> Self {
        1e-5
    }
    fn symmetry_tol() -> Self {
        1e-5
    }
    fn singular_tol() -> Self {
        1e-5
    }
}

/// Sum with Neumaier compensation, in iteration order.
pub fn compensated_sum<T: Real, I: IntoIterator<Item = T>>(values: I) -> T {
    let mut sum = T::zero();
    let mut comp = T::zero();
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
