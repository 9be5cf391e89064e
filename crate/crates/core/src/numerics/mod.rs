//! Numerical kernel: special functions, χ² mixtures and small dense
//! linear algebra.

pub mod chisq;
pub mod linalg;
pub mod special;

pub use chisq::{chisq_cdf, chisq_quantile, chisq_sf, mixture_cdf, mixture_quantile, ChiBarMixture};
pub use linalg::{cholesky2, dot, forward_substitute, Matrix, SymMatrix};
pub use special::{
    digamma, erfc, ln_gamma, normal_cdf, normal_quantile, normal_sf, reg_lower_gamma, reg_upper_gamma, trigamma,
};

use crate::error::Result;
use crate::real::Real;

/// The constant 1 + ψ′(2) − ψ(2)² that appears in the published Weibull
/// frailty denominator √(4n − 4n/q).
///
/// Kept for reference and comparison only: the Weibull test in
/// [`crate::models`] uses the exact residual variance, see
/// [`crate::models::weibull_residual_variance_factor`].
pub fn weibull_q<T: Real>() -> Result<T> {
    let two = T::lit(2.0);
    let psi = digamma(two)?;
    Ok(T::one() + trigamma(two)? - psi * psi)
}
