//! Overdispersion tests for Poisson regression.

use crate::calpha::{ScoreDecomposition, TestReport};
use crate::data::CountData;
use crate::error::{Error, Result};
use crate::mle::{poisson_score, poisson_tolerance};
use crate::models::{ensure_at_mle, named_betas};
use crate::numerics::{dot, Matrix, SymMatrix};
use crate::real::{compensated_sum, Real};

fn fitted_means<T: Real>(d: &CountData<T>, beta: &[T]) -> Result<Vec<T>> {
    if beta.len() != d.x().ncols() {
        return Err(Error::Dimension(format!(
            "{} coefficients for a design with {} columns",
            beta.len(),
            d.x().ncols()
        )));
    }
    Ok(d.x().rows_iter().map(|r| dot(r, beta).exp()).collect())
}

/// Σ[(y − λ̂)² − λ̂] / √(2 Σ λ̂²), evaluated as written at any β.
pub fn poisson_second_moment_statistic<T: Real>(d: &CountData<T>, beta: &[T]) -> Result<T> {
    let lambda = fitted_means(d, beta)?;
    let num = compensated_sum(lambda.iter().enumerate().map(|(i, &l)| {
        let r = d.y_real(i) - l;
        r * r - l
    }));
    let den = (T::lit(2.0) * compensated_sum(lambda.iter().map(|&l| l * l))).sqrt();
    Ok(num / den)
}

/// (2n)^{-1/2} Σ [y(y − 1) − λ̂²] / λ̂, evaluated as written at any β.
pub fn poisson_second_factorial_statistic<T: Real>(d: &CountData<T>, beta: &[T]) -> Result<T> {
    let lambda = fitted_means(d, beta)?;
    let num = compensated_sum(lambda.iter().enumerate().map(|(i, &l)| {
        let y = d.y_real(i);
        (y * (y - T::one()) - l * l) / l
    }));
    Ok(num / (T::lit(2.0) * T::from_count(d.n())).sqrt())
}

fn nuisance_block<T: Real>(d: &CountData<T>, lambda: &[T]) -> Result<(Matrix<T>, SymMatrix<T>)> {
    let (n, p) = d.x().shape();
    let nt = T::from_count(n);
    let mut theta = Matrix::zeros(n, p);
    for i in 0..n {
        let r = d.y_real(i) - lambda[i];
        for j in 0..p {
            theta[(i, j)] = r * d.x()[(i, j)];
        }
    }
    let mut jtt = Matrix::zeros(p, p);
    for a in 0..p {
        for b in 0..=a {
            let v = compensated_sum((0..n).map(|i| lambda[i] * d.x()[(i, a)] * d.x()[(i, b)])) / nt;
            jtt[(a, b)] = v;
            jtt[(b, a)] = v;
        }
    }
    Ok((theta, SymMatrix::new(jtt)?))
}

/// Multiplicative heterogeneity λ_i = λ₀ᵢ e^{ξU_i}: ξ-score ½[(y−λ)² − λ],
/// nuisance score (y−λ)x, with J_ξξ = avg (λ + 2λ²)/4, J_ξθ = ½ avg λx′,
/// J_θθ = avg λxx′.
pub fn poisson_second_moment_decomposition<T: Real>(d: &CountData<T>, beta: &[T]) -> Result<ScoreDecomposition<T>> {
    let lambda = fitted_means(d, beta)?;
    let (n, p) = d.x().shape();
    let nt = T::from_count(n);
    let half = T::lit(0.5);
    let xi: Vec<T> = (0..n)
        .map(|i| {
            let r = d.y_real(i) - lambda[i];
            half * (r * r - lambda[i])
        })
        .collect();
    let (theta, jtt) = nuisance_block(d, &lambda)?;
    let jxx = compensated_sum(lambda.iter().map(|&l| (l + T::lit(2.0) * l * l) / T::lit(4.0))) / nt;
    let mut jxt = Matrix::zeros(1, p);
    for j in 0..p {
        jxt[(0, j)] = half * compensated_sum((0..n).map(|i| lambda[i] * d.x()[(i, j)])) / nt;
    }
    ScoreDecomposition::new(Matrix::column(&xi), theta, SymMatrix::scalar(jxx), jxt, jtt)
}

/// Heterogeneity λ_i = λ₀ᵢ(1 + ξU_i/√λ₀ᵢ): ξ-score ½[(y−λ)² − y]/λ, which is
/// orthogonal to the nuisance scores, with J_ξξ = ½.
pub fn poisson_second_factorial_decomposition<T: Real>(d: &CountData<T>, beta: &[T]) -> Result<ScoreDecomposition<T>> {
    let lambda = fitted_means(d, beta)?;
    let (n, p) = d.x().shape();
    let half = T::lit(0.5);
    let xi: Vec<T> = (0..n)
        .map(|i| {
            let y = d.y_real(i);
            let r = y - lambda[i];
            half * (r * r - y) / lambda[i]
        })
        .collect();
    let (theta, jtt) = nuisance_block(d, &lambda)?;
    ScoreDecomposition::new(
        Matrix::column(&xi),
        theta,
        SymMatrix::scalar(half),
        Matrix::zeros(1, p),
        jtt,
    )
}

fn count_warnings<T: Real>(d: &CountData<T>) -> Vec<String> {
    if d.is_degenerate() {
        vec![format!(
            "degenerate_counts: all {} counts equal {}; the statistic is finite but uninformative",
            d.n(),
            d.y()[0]
        )]
    } else {
        Vec::new()
    }
}

/// Second-moment overdispersion test.
pub fn poisson_second_moment<T: Real>(d: &CountData<T>, beta_hat: &[T], alpha: T) -> Result<TestReport<T>> {
    ensure_at_mle(&poisson_score(d, beta_hat)?, poisson_tolerance(d))?;
    let z = poisson_second_moment_statistic(d, beta_hat)?;
    let mut report = TestReport::scalar("poisson-secmom", z, alpha, named_betas(beta_hat), d.n())?;
    report.warnings = count_warnings(d);
    Ok(report)
}

/// Second-factorial-moment overdispersion test.
pub fn poisson_second_factorial<T: Real>(d: &CountData<T>, beta_hat: &[T], alpha: T) -> Result<TestReport<T>> {
    ensure_at_mle(&poisson_score(d, beta_hat)?, poisson_tolerance(d))?;
    let z = poisson_second_factorial_statistic(d, beta_hat)?;
    let mut report = TestReport::scalar("poisson-factorial", z, alpha, named_betas(beta_hat), d.n())?;
    report.warnings = count_warnings(d);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calpha::{projection_coefficients, z_statistic};
    use crate::mle::fit_poisson;
    use proptest::prelude::*;

    const HAND: f64 = -0.235_702_260_395_515_8;

    fn toy() -> (CountData, Vec<f64>) {
        let d = CountData::<f64>::intercept_only(vec![0, 1, 2, 3]).unwrap();
        let b = fit_poisson(&d).unwrap().estimates;
        (d, b)
    }

    #[test]
    fn hand_values() {
        let (d, b) = toy();
        let r = poisson_second_moment(&d, &b, 0.05).unwrap();
        assert!((r.statistic - HAND).abs() < 1e-10);
        assert!((r.statistic + 1.0 / 18f64.sqrt()).abs() < 1e-10);
        let r = poisson_second_factorial(&d, &b, 0.05).unwrap();
        assert!((r.statistic - HAND).abs() < 1e-10);
        assert!(!r.reject);

        let d = CountData::<f64>::intercept_only(vec![0, 2]).unwrap();
        let b = fit_poisson(&d).unwrap().estimates;
        assert!(poisson_second_moment(&d, &b, 0.05).unwrap().statistic.abs() < 1e-12);
        assert!(poisson_second_factorial(&d, &b, 0.05).unwrap().statistic.abs() < 1e-12);
    }

    #[test]
    fn covariate_breaks_the_tie() {
        let d =
            CountData::<f64>::from_covariates(vec![0, 1, 2, 3], &[vec![0.0], vec![0.0], vec![1.0], vec![1.0]]).unwrap();
        let b = fit_poisson(&d).unwrap().estimates;
        let z1 = poisson_second_moment(&d, &b, 0.05).unwrap().statistic;
        let z2 = poisson_second_factorial(&d, &b, 0.05).unwrap().statistic;
        // direct evaluation with group means 0.5 and 2.5
        let m = [0.5f64, 0.5, 2.5, 2.5];
        let y = [0.0f64, 1.0, 2.0, 3.0];
        let num1: f64 = (0..4).map(|i| (y[i] - m[i]).powi(2) - m[i]).sum();
        let den1 = (2.0 * m.iter().map(|v| v * v).sum::<f64>()).sqrt();
        let num2: f64 = (0..4).map(|i| (y[i] * (y[i] - 1.0) - m[i] * m[i]) / m[i]).sum();
        assert!((z1 - num1 / den1).abs() < 1e-10);
        assert!((z2 - num2 / 8f64.sqrt()).abs() < 1e-10);
        assert!((z1 - z2).abs() > 1e-3);
    }

    #[test]
    fn projection_coefficient_is_intercept_unit_vector() {
        // in the ½ convention a = ½e₀, i.e. e₀ for the unhalved score
        let d = CountData::<f64>::from_covariates(
            vec![0, 1, 4, 3, 2],
            &[vec![0.3], vec![1.0], vec![2.0], vec![1.5], vec![0.1]],
        )
        .unwrap();
        let b = fit_poisson(&d).unwrap().estimates;
        let sd = poisson_second_moment_decomposition(&d, &b).unwrap();
        let a = projection_coefficients(&sd).unwrap();
        assert!((2.0 * a[(0, 0)] - 1.0).abs() < 1e-12);
        assert!(a[(0, 1)].abs() < 1e-12);
    }

    #[test]
    fn not_at_mle_is_reported() {
        let d = CountData::<f64>::intercept_only(vec![0, 1, 2, 3]).unwrap();
        let r = poisson_second_moment(&d, &[0.0], 0.05);
        assert!(matches!(r, Err(Error::NotAtMle { .. })));
    }

    #[test]
    fn degenerate_counts_warn() {
        let d = CountData::<f64>::intercept_only(vec![2, 2, 2]).unwrap();
        let b = fit_poisson(&d).unwrap().estimates;
        let r = poisson_second_moment(&d, &b, 0.05).unwrap();
        assert!(r.statistic.is_finite());
        assert_eq!(r.warnings.len(), 1);
    }

    fn dataset() -> impl Strategy<Value = (Vec<u64>, Vec<Vec<f64>>)> {
        prop::collection::vec((0u64..12, -1.0f64..1.0), 6..40).prop_map(|rows| {
            (
                rows.iter().map(|r| r.0).collect(),
                rows.iter().map(|r| vec![r.1]).collect(),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn generic_route_matches_closed_forms((y, cov) in dataset()) {
            let Ok(d) = CountData::<f64>::from_covariates(y, &cov) else { return Ok(()); };
            let Ok(fit) = fit_poisson(&d) else { return Ok(()); };
            let b = fit.estimates;
            let z1 = z_statistic(&poisson_second_moment_decomposition(&d, &b).unwrap()).unwrap();
            let z1c = poisson_second_moment_statistic(&d, &b).unwrap();
            prop_assert!((z1 - z1c).abs() < 1e-8, "{} vs {}", z1, z1c);
            let z2 = z_statistic(&poisson_second_factorial_decomposition(&d, &b).unwrap()).unwrap();
            let z2c = poisson_second_factorial_statistic(&d, &b).unwrap();
            prop_assert!((z2 - z2c).abs() < 1e-8, "{} vs {}", z2, z2c);
        }

        #[test]
        fn intercept_only_statistics_coincide(y in prop::collection::vec(0u64..15, 3..60)) {
            let d = CountData::<f64>::intercept_only(y).unwrap();
            let Ok(fit) = fit_poisson(&d) else { return Ok(()); };
            let z1 = poisson_second_moment_statistic(&d, &fit.estimates).unwrap();
            let z2 = poisson_second_factorial_statistic(&d, &fit.estimates).unwrap();
            prop_assert!((z1 - z2).abs() < 1e-10);
        }
    }
}
