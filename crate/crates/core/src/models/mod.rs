//! The concrete heterogeneity tests.
//!
//! Each test takes data plus the restricted MLE of the nuisance parameters,
//! checks that the estimate really solves the score equations, and returns a
//! finished [`TestReport`](crate::calpha::TestReport). The matching
//! `*_decomposition` functions expose the per-observation scores and analytic
//! information blocks at arbitrary parameter values, so the closed-form
//! statistics can be cross-checked against the generic projection route.

mod duration;
mod panel;
mod poisson;

pub use duration::{
    cox_exp_frailty, cox_weibull_frailty, cox_weibull_frailty_with, exp_frailty_decomposition, exp_frailty_statistic,
    weibull_frailty_decomposition, weibull_frailty_numerator, weibull_published_variance_factor,
    weibull_residual_variance_factor, WeibullInformation, WeibullVariance,
};
pub use panel::{gaussian_panel_components, gaussian_panel_decomposition, gaussian_panel_joint, PanelInformation};
pub use poisson::{
    poisson_second_factorial, poisson_second_factorial_decomposition, poisson_second_factorial_statistic,
    poisson_second_moment, poisson_second_moment_decomposition, poisson_second_moment_statistic,
};

use crate::error::{Error, Result};
use crate::numerics::dot;
use crate::real::Real;

/// How far above the solver tolerance a supplied estimate may sit and still
/// count as the MLE. Estimates from other software are typically accurate to
/// about 1e-8 relative, well inside this margin.
pub const MLE_CHECK_FACTOR: f64 = 1e4;

pub(crate) fn ensure_at_mle<T: Real>(score: &[T], solver_tol: T) -> Result<()> {
    let norm = dot(score, score).sqrt();
    let tol = solver_tol * T::lit(MLE_CHECK_FACTOR);
    if !(norm <= tol) {
        return Err(Error::NotAtMle {
            score_norm: norm.as_f64(),
            tolerance: tol.as_f64(),
        });
    }
    Ok(())
}

pub(crate) fn named_betas<T: Real>(beta: &[T]) -> Vec<(String, T)> {
    beta.iter().enumerate().map(|(j, &b)| (format!("beta{j}"), b)).collect()
}
