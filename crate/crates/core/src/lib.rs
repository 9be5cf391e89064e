//! C(α) score tests for unobserved heterogeneity.
//!
//! The building blocks are the projected (residual) heterogeneity score, the
//! one-sided decision for a single parameter and the chi-bar-squared cone
//! projection for two. Concrete tests cover Poisson overdispersion, Cox
//! frailty with exponential and Weibull baselines, and a joint mean/variance
//! heterogeneity test for Gaussian panels.
//!
//! Everything is generic over the scalar type through [`Real`]; the `*64`
//! aliases fix it to `f64`.

// `!(x > 0)` style guards are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calpha;
pub mod data;
pub mod error;
pub mod im_test;
pub mod mle;
pub mod models;
pub mod numerics;
pub mod real;

pub use error::{Error, Result};
pub use real::Real;

pub type Matrix64 = numerics::Matrix<f64>;
pub type SymMatrix64 = numerics::SymMatrix<f64>;
pub type ChiBarMixture64 = numerics::ChiBarMixture<f64>;
pub type ScoreDecomposition64 = calpha::ScoreDecomposition<f64>;
pub type ResidualScore64 = calpha::ResidualScore<f64>;
pub type TestReport64 = calpha::TestReport<f64>;
pub type NullDistribution64 = calpha::NullDistribution<f64>;
pub type CountData64 = data::CountData<f64>;
pub type DurationData64 = data::DurationData<f64>;
pub type PanelData64 = data::PanelData<f64>;
pub type RegressionData64 = data::RegressionData<f64>;
pub type FitResult64 = mle::FitResult<f64>;
pub type EquivalenceReport64 = im_test::EquivalenceReport<f64>;
