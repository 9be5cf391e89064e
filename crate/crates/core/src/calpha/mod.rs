//! Model-agnostic C(α) machinery.

mod cone;
mod decomposition;
mod regular;
mod report;

pub use cone::{bivariate_t, bivariate_test, bivariate_weights, diag_t, diag_test, BivariateCase};
pub use decomposition::{projection_coefficients, residual_score, z_statistic, ResidualScore, ScoreDecomposition};
pub use regular::{regular_calpha, regular_calpha_from_residual, RegularCalpha};
pub use report::{one_sided_decision, NullDistribution, OneSidedDecision, TestReport};
