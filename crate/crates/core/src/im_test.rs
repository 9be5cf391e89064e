//! Information-matrix test for the intercept and its equivalence with C(α).
//!
//! For a model whose mean λ depends on the intercept β₀, the IM indicator
//! for β₀ is
//!
//! ```text
//! Σ_i [ (∇²_λ p / p)(∇_β₀ λ)² + (∇_λ p / p) ∇²_β₀ λ ]
//! ```
//!
//! Under additive heterogeneity λ_i = λ₀ᵢ + ξ U_i k(λ₀ᵢ) the C(α) score is
//! Σ k² (∇²_λ p / p). The two agree, up to a constant factor, when
//! (1) k(λ)² = C (∇_β₀ λ)² for every observation and
//! (2) Σ (∇_λ p / p) ∇²_β₀ λ vanishes. Both statistics are standardized by
//! their own analytic null standard deviation before they are compared.

use crate::data::{CountData, RegressionData};
use crate::error::{Error, Result};
use crate::numerics::dot;
use crate::real::{compensated_sum, Real};

/// Residuals below this count as an identity that holds.
pub const IDENTITY_TOL: f64 = 1e-8;

/// A fitted model to run the IM test on.
#[derive(Debug, Clone, Copy)]
pub enum ImModel<'a, T: Real = f64> {
    /// Poisson regression with log link, λ = e^{x′β}.
    Poisson { data: &'a CountData<T>, beta: &'a [T] },
    /// Gaussian regression with unit variance, μ = x′β.
    Gaussian { data: &'a RegressionData<T>, beta: &'a [T] },
}

/// Heterogeneity scale function k(λ).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeterogeneityScale {
    /// k(λ) = 1
    Constant,
    /// k(λ) = λ
    Identity,
    /// k(λ) = √λ
    Sqrt,
}

impl HeterogeneityScale {
    pub fn name(self) -> &'static str {
        match self {
            HeterogeneityScale::Constant => "constant",
            HeterogeneityScale::Identity => "identity",
            HeterogeneityScale::Sqrt => "sqrt",
        }
    }

    fn eval<T: Real>(self, m: T) -> Result<T> {
        match self {
            HeterogeneityScale::Constant => Ok(T::one()),
            HeterogeneityScale::Identity => Ok(m),
            HeterogeneityScale::Sqrt if m > T::zero() => Ok(m.sqrt()),
            HeterogeneityScale::Sqrt => Err(Error::domain("k(m) = sqrt(m)", m.as_f64(), "m > 0")),
        }
    }
}

impl std::str::FromStr for HeterogeneityScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(HeterogeneityScale::Constant),
            "identity" => Ok(HeterogeneityScale::Identity),
            "sqrt" => Ok(HeterogeneityScale::Sqrt),
            other => Err(Error::Unsupported(format!(
                "heterogeneity scale '{other}' (expected constant, identity or sqrt)"
            ))),
        }
    }
}

/// Outcome of comparing the IM and C(α) statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport<T: Real = f64> {
    pub im_value: T,
    pub calpha_value: T,
    pub abs_diff: T,
    /// max_i |r_i / r̄ − 1| with r_i = k(λ_i)² / (∇_β₀ λ_i)².
    pub identity1_residual: T,
    /// |Σ (∇_λ p / p) ∇²_β₀ λ|.
    pub identity2_residual: T,
    /// Both identity residuals below [`IDENTITY_TOL`].
    pub equivalent: bool,
}

/// Per-observation pieces: mean, first and second relative derivatives of
/// the density in the mean, and first and second derivatives of the mean in
/// β₀. `var2` is Var(∇²_λ p / p).
struct Pieces<T> {
    mean: Vec<T>,
    d1: Vec<T>,
    d2: Vec<T>,
    grad: Vec<T>,
    hess: Vec<T>,
    var2: Vec<T>,
}

fn check_beta<T: Real>(beta: &[T], p: usize) -> Result<()> {
    if beta.len() != p {
        return Err(Error::Dimension(format!(
            "{} coefficients for {p} design columns",
            beta.len()
        )));
    }
    Ok(())
}

fn pieces<T: Real>(model: &ImModel<'_, T>) -> Result<Pieces<T>> {
    match *model {
        ImModel::Poisson { data, beta } => {
            check_beta(beta, data.x().ncols())?;
            let mean: Vec<T> = data.x().rows_iter().map(|r| dot(r, beta).exp()).collect();
            let mut d1 = Vec::with_capacity(mean.len());
            let mut d2 = Vec::with_capacity(mean.len());
            for (i, &l) in mean.iter().enumerate() {
                let y = data.y_real(i);
                let r = y - l;
                d1.push(r / l);
                d2.push((r * r - y) / (l * l));
            }
            let two = T::lit(2.0);
            Ok(Pieces {
                var2: mean.iter().map(|&l| two / (l * l)).collect(),
                grad: mean.clone(),
                hess: mean.clone(),
                d1,
                d2,
                mean,
            })
        }
        ImModel::Gaussian { data, beta } => {
            check_beta(beta, data.x().ncols())?;
            let mean: Vec<T> = data.x().rows_iter().map(|r| dot(r, beta)).collect();
            let n = mean.len();
            let resid: Vec<T> = data.y().iter().zip(&mean).map(|(&y, &m)| y - m).collect();
            Ok(Pieces {
                d2: resid.iter().map(|&e| e * e - T::one()).collect(),
                d1: resid,
                grad: vec![T::one(); n],
                hess: vec![T::zero(); n],
                var2: vec![T::lit(2.0); n],
                mean,
            })
        }
    }
}

fn im_from_pieces<T: Real>(pc: &Pieces<T>) -> T {
    let n = pc.mean.len();
    let num = compensated_sum((0..n).map(|i| pc.d2[i] * pc.grad[i] * pc.grad[i] + pc.d1[i] * pc.hess[i]));
    // the second term is removed by projection on the intercept score, so
    // the null variance is that of the first alone
    let var = compensated_sum((0..n).map(|i| pc.var2[i] * pc.grad[i].powi(4)));
    num / var.sqrt()
}

/// The standardized IM indicator for the intercept.
///
/// Poisson: Σ[(y − λ)² − λ] / √(2Σλ²). Gaussian: Σ[(y − μ)² − 1] / √(2n).
pub fn im_intercept_statistic<T: Real>(model: &ImModel<'_, T>) -> Result<T> {
    Ok(im_from_pieces(&pieces(model)?))
}

/// The standardized C(α) statistic for additive heterogeneity with scale k:
/// Σ k²(∇²_λ p / p) / √(Σ k⁴ Var(∇²_λ p / p)).
pub fn calpha_additive_statistic<T: Real>(model: &ImModel<'_, T>, k: HeterogeneityScale) -> Result<T> {
    calpha_from_pieces(&pieces(model)?, k)
}

fn calpha_from_pieces<T: Real>(pc: &Pieces<T>, k: HeterogeneityScale) -> Result<T> {
    let k2: Vec<T> = pc
        .mean
        .iter()
        .map(|&m| k.eval(m).map(|v| v * v))
        .collect::<Result<_>>()?;
    let num = compensated_sum(k2.iter().zip(&pc.d2).map(|(&a, &b)| a * b));
    let var = compensated_sum(k2.iter().zip(&pc.var2).map(|(&a, &v)| a * a * v));
    Ok(num / var.sqrt())
}

/// Evaluates both statistics and the two identities.
pub fn check_equivalence<T: Real>(model: &ImModel<'_, T>, k: HeterogeneityScale) -> Result<EquivalenceReport<T>> {
    let pc = pieces(model)?;
    let im_value = im_from_pieces(&pc);
    let calpha_value = calpha_from_pieces(&pc, k)?;

    let ratios: Vec<T> = pc
        .mean
        .iter()
        .zip(&pc.grad)
        .map(|(&m, &g)| k.eval(m).map(|v| v * v / (g * g)))
        .collect::<Result<_>>()?;
    let c = compensated_sum(ratios.iter().copied()) / T::from_count(ratios.len());
    let identity1_residual = ratios
        .iter()
        .fold(T::zero(), |acc, &r| acc.max((r / c - T::one()).abs()));
    let identity2_residual = compensated_sum(pc.d1.iter().zip(&pc.hess).map(|(&a, &b)| a * b)).abs();
    let tol = T::lit(IDENTITY_TOL);
    Ok(EquivalenceReport {
        im_value,
        calpha_value,
        abs_diff: (im_value - calpha_value).abs(),
        identity1_residual,
        identity2_residual,
        equivalent: identity1_residual < tol && identity2_residual < tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mle::{fit_gaussian_regression, fit_poisson};
    use crate::models::{poisson_second_factorial_statistic, poisson_second_moment_statistic};
    use proptest::prelude::*;

    #[test]
    fn poisson_identity_scale_is_equivalent() {
        let d = CountData::<f64>::from_covariates(
            vec![0, 1, 4, 3, 2, 7],
            &[vec![0.3], vec![1.0], vec![2.0], vec![1.5], vec![0.1], vec![2.2]],
        )
        .unwrap();
        let b = fit_poisson(&d).unwrap().estimates;
        let m = ImModel::Poisson { data: &d, beta: &b };
        let rep = check_equivalence(&m, HeterogeneityScale::Identity).unwrap();
        assert!(rep.equivalent);
        assert!(rep.abs_diff < 1e-10);
        assert!((rep.im_value - poisson_second_moment_statistic(&d, &b).unwrap()).abs() < 1e-12);
        let sq = check_equivalence(&m, HeterogeneityScale::Sqrt).unwrap();
        assert!(!sq.equivalent);
        assert!(sq.identity1_residual > 0.1);
        assert!((sq.calpha_value - poisson_second_factorial_statistic(&d, &b).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn no_covariates_any_scale_is_equivalent() {
        let d = CountData::<f64>::intercept_only(vec![0, 1, 4, 3, 2, 7]).unwrap();
        let b = fit_poisson(&d).unwrap().estimates;
        let m = ImModel::Poisson { data: &d, beta: &b };
        for k in [
            HeterogeneityScale::Constant,
            HeterogeneityScale::Identity,
            HeterogeneityScale::Sqrt,
        ] {
            let rep = check_equivalence(&m, k).unwrap();
            assert!(rep.equivalent, "{k:?}");
            assert!(rep.abs_diff < 1e-10, "{k:?}");
        }
    }

    #[test]
    fn gaussian_constant_scale() {
        let y = vec![0.3, 1.9, 2.2, 4.1, 3.7, 6.2, 5.5];
        let cov: Vec<Vec<f64>> = (0..7).map(|i| vec![i as f64]).collect();
        let d = RegressionData::<f64>::from_covariates(y.clone(), &cov).unwrap();
        let b = fit_gaussian_regression(&d).unwrap().estimates;
        let m = ImModel::Gaussian { data: &d, beta: &b };
        let rep = check_equivalence(&m, HeterogeneityScale::Constant).unwrap();
        assert!(rep.equivalent && rep.abs_diff < 1e-12);
        assert_eq!(rep.identity2_residual, 0.0);
        let direct: f64 = (0..7)
            .map(|i| (y[i] - b[0] - b[1] * i as f64).powi(2) - 1.0)
            .sum::<f64>()
            / 14f64.sqrt();
        assert!((rep.im_value - direct).abs() < 1e-12);
        let id = check_equivalence(&m, HeterogeneityScale::Identity).unwrap();
        assert!(!id.equivalent);
    }

    #[test]
    fn parse_scale() {
        assert_eq!("sqrt".parse::<HeterogeneityScale>().unwrap(), HeterogeneityScale::Sqrt);
        assert!("cubic".parse::<HeterogeneityScale>().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn equivalence_implies_agreement(
            rows in prop::collection::vec((0u64..10, -1.0f64..1.0), 8..50),
            k in prop_oneof![Just(HeterogeneityScale::Constant), Just(HeterogeneityScale::Identity), Just(HeterogeneityScale::Sqrt)],
        ) {
            let y: Vec<u64> = rows.iter().map(|r| r.0).collect();
            let cov: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.1]).collect();
            let Ok(d) = CountData::<f64>::from_covariates(y, &cov) else { return Ok(()); };
            let Ok(fit) = fit_poisson(&d) else { return Ok(()); };
            let m = ImModel::Poisson { data: &d, beta: &fit.estimates };
            let rep = check_equivalence(&m, k).unwrap();
            if rep.equivalent {
                prop_assert!(rep.abs_diff < 1e-8);
            }
            if k == HeterogeneityScale::Identity {
                prop_assert!(rep.identity2_residual < 1e-8);
                prop_assert!(rep.identity1_residual < 1e-12);
            }
        }
    }
}
