//! Frailty tests for single-spell uncensored durations.
//!
//! With integrated hazard q = Λ₀(t)e^{x′β}, which is Exp(1) under the null,
//! the heterogeneity score is s = 1 − 3q + q² (Var s = 5) for both baselines.

use crate::calpha::{ScoreDecomposition, TestReport};
use crate::data::DurationData;
use crate::error::{Error, Result};
use crate::mle::{duration_tolerance, exponential_score, weibull_score};
use crate::models::{ensure_at_mle, named_betas};
use crate::numerics::{digamma, dot, trigamma, weibull_q, Matrix, SymMatrix};
use crate::real::{compensated_sum, Real};

fn check_beta<T: Real>(d: &DurationData<T>, beta: &[T]) -> Result<()> {
    if beta.len() != d.x().ncols() {
        return Err(Error::Dimension(format!(
            "{} coefficients for a design with {} columns",
            beta.len(),
            d.x().ncols()
        )));
    }
    Ok(())
}

fn check_shape<T: Real>(alpha: T) -> Result<()> {
    if !(alpha > T::zero()) || !alpha.is_finite() {
        return Err(Error::domain("weibull shape", alpha.as_f64(), "alpha > 0"));
    }
    Ok(())
}

/// Integrated hazards t^α e^{x′β}.
fn integrated_hazards<T: Real>(d: &DurationData<T>, beta: &[T], alpha: T) -> Vec<T> {
    d.x()
        .rows_iter()
        .zip(d.t())
        .map(|(r, &t)| (alpha * t.ln() + dot(r, beta)).exp())
        .collect()
}

fn frailty_score<T: Real>(q: T) -> T {
    T::one() - T::lit(3.0) * q + q * q
}

// ------------------------------------------------------------ exponential

/// Σ(1 − 3q + q²)/√(4n) with q = t e^{x′β}, evaluated as written at any β.
pub fn exp_frailty_statistic<T: Real>(d: &DurationData<T>, beta: &[T]) -> Result<T> {
    check_beta(d, beta)?;
    let q = integrated_hazards(d, beta, T::one());
    let num = compensated_sum(q.iter().map(|&v| frailty_score(v)));
    Ok(num / (T::lit(4.0) * T::from_count(d.n())).sqrt())
}

/// ξ-score ½s, nuisance score (1 − q)x; J_ξξ = 5/4, J_ξθ = −½ avg x′,
/// J_θθ = avg xx′.
pub fn exp_frailty_decomposition<T: Real>(d: &DurationData<T>, beta: &[T]) -> Result<ScoreDecomposition<T>> {
    check_beta(d, beta)?;
    let q = integrated_hazards(d, beta, T::one());
    let (n, p) = d.x().shape();
    let nt = T::from_count(n);
    let half = T::lit(0.5);
    let xi: Vec<T> = q.iter().map(|&v| half * frailty_score(v)).collect();
    let mut theta = Matrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            theta[(i, j)] = (T::one() - q[i]) * d.x()[(i, j)];
        }
    }
    let mut jxt = Matrix::zeros(1, p);
    let mut jtt = Matrix::zeros(p, p);
    for a in 0..p {
        jxt[(0, a)] = -half * compensated_sum(d.x().col(a)) / nt;
        for b in 0..=a {
            let v = compensated_sum((0..n).map(|i| d.x()[(i, a)] * d.x()[(i, b)])) / nt;
            jtt[(a, b)] = v;
            jtt[(b, a)] = v;
        }
    }
    ScoreDecomposition::new(
        Matrix::column(&xi),
        theta,
        SymMatrix::scalar(T::lit(1.25)),
        jxt,
        SymMatrix::new(jtt)?,
    )
}

/// Exponential-baseline frailty test.
pub fn cox_exp_frailty<T: Real>(d: &DurationData<T>, beta_hat: &[T], alpha: T) -> Result<TestReport<T>> {
    ensure_at_mle(&exponential_score(d, beta_hat)?, duration_tolerance(d))?;
    let z = exp_frailty_statistic(d, beta_hat)?;
    TestReport::scalar("cox-exp", z, alpha, named_betas(beta_hat), d.n())
}

// ---------------------------------------------------------------- Weibull

/// Which information matrix normalizes the Weibull statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeibullVariance {
    /// The exact Fisher information. Per-observation residual variance
    /// 4 − 4/ψ′(1) = 4 − 24/π² ≈ 1.5683.
    #[default]
    Exact,
    /// The published closed form, whose shape-shape entry
    /// (1 + ψ′(2) − 2ψ(2)x′β + (x′β)²)/α² omits a ψ(2)² term. Gives
    /// 4 − 4/q ≈ 1.2718 with q = 1 + ψ′(2) − ψ(2)², which understates the
    /// null variance and makes the test oversized.
    Published,
}

/// 4 − 4/ψ′(1): exact residual variance of s per observation.
pub fn weibull_residual_variance_factor<T: Real>() -> Result<T> {
    let four = T::lit(4.0);
    Ok(four - four / trigamma(T::one())?)
}

/// 4 − 4/q with q = 1 + ψ′(2) − ψ(2)².
pub fn weibull_published_variance_factor<T: Real>() -> Result<T> {
    let four = T::lit(4.0);
    Ok(four - four / weibull_q::<T>()?)
}

/// Analytic information of the Weibull PH model with one frailty parameter,
/// as totals over observations. Nuisance order is (β₀, …, β_k, α).
#[derive(Debug, Clone, PartialEq)]
pub struct WeibullInformation<T: Real = f64> {
    n: usize,
    variance: WeibullVariance,
    /// Σxx′
    a: SymMatrix<T>,
    /// Σ e_i x_i / α with e_i = ψ(2) − x_i′β
    b: Vec<T>,
    /// Σ I_αα,i
    c: T,
    i_xt: Vec<T>,
}

impl<T: Real> WeibullInformation<T> {
    pub fn new(x: &Matrix<T>, beta: &[T], alpha: T, variance: WeibullVariance) -> Result<Self> {
        check_shape(alpha)?;
        let (n, p) = x.shape();
        if beta.len() != p {
            return Err(Error::Dimension(format!(
                "{} coefficients for {p} design columns",
                beta.len()
            )));
        }
        let psi = digamma(T::lit(2.0))?;
        let tri = trigamma(T::lit(2.0))?;
        let two = T::lit(2.0);
        let a2 = alpha * alpha;
        let xb: Vec<T> = x.rows_iter().map(|r| dot(r, beta)).collect();
        let e: Vec<T> = xb.iter().map(|&v| psi - v).collect();

        let mut a = Matrix::zeros(p, p);
        for j in 0..p {
            for k in 0..=j {
                let v = compensated_sum((0..n).map(|i| x[(i, j)] * x[(i, k)]));
                a[(j, k)] = v;
                a[(k, j)] = v;
            }
        }
        let b: Vec<T> = (0..p)
            .map(|j| compensated_sum((0..n).map(|i| e[i] * x[(i, j)])) / alpha)
            .collect();
        let c = compensated_sum(e.iter().zip(&xb).map(|(&ei, &v)| match variance {
            WeibullVariance::Exact => T::one() + tri + ei * ei,
            WeibullVariance::Published => T::one() + tri - two * psi * v + v * v,
        })) / a2;
        let mut i_xt: Vec<T> = (0..p).map(|j| -compensated_sum(x.col(j))).collect();
        i_xt.push(compensated_sum(xb.iter().map(|&v| (-two - psi + v) / alpha)));
        let a = SymMatrix::new(a)?;
        a.ensure_positive_definite("Weibull design block")?;
        Ok(WeibullInformation {
            n,
            variance,
            a,
            b,
            c,
            i_xt,
        })
    }

    pub fn variance(&self) -> WeibullVariance {
        self.variance
    }

    /// I_ξξ = Σ Var(s_i) = 5n.
    pub fn i_xx(&self) -> T {
        T::lit(5.0) * T::from_count(self.n)
    }

    /// I_ξθ = Σ(−x_i′, (−2 − ψ(2) + x_i′β)/α).
    pub fn i_xt(&self) -> &[T] {
        &self.i_xt
    }

    /// I_θθ assembled from its blocks.
    pub fn i_tt(&self) -> SymMatrix<T> {
        let p = self.b.len();
        let mut m = Matrix::zeros(p + 1, p + 1);
        for j in 0..p {
            for k in 0..p {
                m[(j, k)] = self.a.get(j, k);
            }
            m[(j, p)] = self.b[j];
            m[(p, j)] = self.b[j];
        }
        m[(p, p)] = self.c;
        SymMatrix::new(m).expect("assembled symmetric")
    }

    fn schur(&self) -> Result<(SymMatrix<T>, Vec<T>, T)> {
        let a_inv = self.a.inverse()?;
        let ab = a_inv.as_matrix().matvec(&self.b)?;
        let s = self.c - dot(&self.b, &ab);
        if !(s > T::singular_tol() * self.c.abs()) {
            return Err(Error::Singular(format!("Weibull information Schur complement {s}")));
        }
        Ok((a_inv, ab, s))
    }

    /// I_θθ⁻¹ in closed form through the Schur complement
    /// s = c − b′A⁻¹b of the shape entry.
    pub fn i_tt_inverse(&self) -> Result<SymMatrix<T>> {
        let (a_inv, ab, s) = self.schur()?;
        let p = self.b.len();
        let mut m = Matrix::zeros(p + 1, p + 1);
        for j in 0..p {
            for k in 0..p {
                m[(j, k)] = a_inv.get(j, k) + ab[j] * ab[k] / s;
            }
            m[(j, p)] = -ab[j] / s;
            m[(p, j)] = -ab[j] / s;
        }
        m[(p, p)] = s.recip();
        SymMatrix::new(m.symmetrized()?)
    }

    /// I_θθ⁻¹ I_θξ.
    pub fn projection(&self) -> Result<Vec<T>> {
        self.i_tt_inverse()?.as_matrix().matvec(&self.i_xt)
    }

    /// I_ξξ − I_ξθ I_θθ⁻¹ I_θξ.
    pub fn residual_variance(&self) -> Result<T> {
        Ok(self.i_xx() - dot(&self.i_xt, &self.projection()?))
    }
}

/// Σ(1 − 3q + q²) with q = t^α e^{x′β}.
pub fn weibull_frailty_numerator<T: Real>(d: &DurationData<T>, beta: &[T], alpha: T) -> Result<T> {
    check_beta(d, beta)?;
    check_shape(alpha)?;
    let q = integrated_hazards(d, beta, alpha);
    Ok(compensated_sum(q.iter().map(|&v| frailty_score(v))))
}

/// ξ-score ½s, nuisance scores ((1 − q)x, 1/α + ln t·(1 − q)), with the
/// exact information blocks averaged over observations.
pub fn weibull_frailty_decomposition<T: Real>(
    d: &DurationData<T>,
    beta: &[T],
    alpha: T,
) -> Result<ScoreDecomposition<T>> {
    check_beta(d, beta)?;
    let info = WeibullInformation::new(d.x(), beta, alpha, WeibullVariance::Exact)?;
    let q = integrated_hazards(d, beta, alpha);
    let (n, p) = d.x().shape();
    let nt = T::from_count(n);
    let half = T::lit(0.5);
    let xi: Vec<T> = q.iter().map(|&v| half * frailty_score(v)).collect();
    let mut theta = Matrix::zeros(n, p + 1);
    for i in 0..n {
        let r = T::one() - q[i];
        for j in 0..p {
            theta[(i, j)] = r * d.x()[(i, j)];
        }
        theta[(i, p)] = alpha.recip() + d.t()[i].ln() * r;
    }
    let mut jxt = Matrix::zeros(1, p + 1);
    for (j, &v) in info.i_xt().iter().enumerate() {
        jxt[(0, j)] = half * v / nt;
    }
    let jtt = SymMatrix::new(info.i_tt().as_matrix().scale(nt.recip()))?;
    ScoreDecomposition::new(Matrix::column(&xi), theta, SymMatrix::scalar(T::lit(1.25)), jxt, jtt)
}

/// Weibull-baseline frailty test with the exact variance.
pub fn cox_weibull_frailty<T: Real>(
    d: &DurationData<T>,
    beta_hat: &[T],
    shape_hat: T,
    alpha: T,
) -> Result<TestReport<T>> {
    cox_weibull_frailty_with(d, beta_hat, shape_hat, alpha, WeibullVariance::Exact)
}

/// Weibull-baseline frailty test, Σs / √(n·v) with v chosen by `variance`.
pub fn cox_weibull_frailty_with<T: Real>(
    d: &DurationData<T>,
    beta_hat: &[T],
    shape_hat: T,
    alpha: T,
    variance: WeibullVariance,
) -> Result<TestReport<T>> {
    check_shape(shape_hat)?;
    ensure_at_mle(&weibull_score(d, beta_hat, shape_hat)?, duration_tolerance(d))?;
    let num = weibull_frailty_numerator(d, beta_hat, shape_hat)?;
    let factor = match variance {
        WeibullVariance::Exact => weibull_residual_variance_factor()?,
        WeibullVariance::Published => weibull_published_variance_factor()?,
    };
    let z = num / (T::from_count(d.n()) * factor).sqrt();
    let mut nuisance = named_betas(beta_hat);
    nuisance.push(("alpha".into(), shape_hat));
    let mut report = TestReport::scalar("cox-weibull", z, alpha, nuisance, d.n())?;
    if variance == WeibullVariance::Published {
        report.warnings.push(
            "published_normalization: 4 - 4/q understates the null variance of the numerator; \
             the test is oversized"
                .into(),
        );
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calpha::{projection_coefficients, z_statistic};
    use crate::mle::{fit_exponential_ph, fit_weibull_ph};
    use proptest::prelude::*;

    fn design(cov: &[f64]) -> Matrix {
        let rows: Vec<Vec<f64>> = cov.iter().map(|&c| vec![1.0, c]).collect();
        Matrix::<f64>::from_rows(&rows).unwrap()
    }

    #[test]
    fn exponential_hand_value() {
        let d = DurationData::<f64>::intercept_only(vec![1.0, 1.0]).unwrap();
        let b = fit_exponential_ph(&d).unwrap().estimates;
        assert!(b[0].abs() < 1e-12);
        let r = cox_exp_frailty(&d, &b, 0.05).unwrap();
        assert!((r.statistic + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-10);
    }

    #[test]
    fn matched_moments_give_zero() {
        // three copies of 1 − 1/√3 and one of 1 + √3: mean 1, mean square 2
        let a = 1.0 - (1.0f64 / 3.0).sqrt();
        let d = DurationData::<f64>::intercept_only(vec![a, a, a, 4.0 - 3.0 * a]).unwrap();
        let b = fit_exponential_ph(&d).unwrap().estimates;
        assert!(cox_exp_frailty(&d, &b, 0.05).unwrap().statistic.abs() < 1e-12);
    }

    #[test]
    fn variance_constants() {
        assert!((weibull_published_variance_factor::<f64>().unwrap() - 1.271_835_918_607_144).abs() < 1e-12);
        let exact = 4.0 - 24.0 / std::f64::consts::PI.powi(2);
        assert!((weibull_residual_variance_factor::<f64>().unwrap() - exact).abs() < 1e-12);
    }

    #[test]
    fn information_inverse_and_residual() {
        let x = design(&[0.3, -1.2, 0.8, 2.0, -0.4, 0.0]);
        let beta = [0.4, -0.7];
        for variance in [WeibullVariance::Exact, WeibullVariance::Published] {
            let info = WeibullInformation::new(&x, &beta, 1.7, variance).unwrap();
            let prod = info
                .i_tt()
                .as_matrix()
                .matmul(info.i_tt_inverse().unwrap().as_matrix())
                .unwrap();
            assert!(prod.max_abs_diff(&Matrix::<f64>::identity(3)).unwrap() < 1e-10);
            let factor = match variance {
                WeibullVariance::Exact => weibull_residual_variance_factor::<f64>().unwrap(),
                WeibullVariance::Published => weibull_published_variance_factor::<f64>().unwrap(),
            };
            assert!((info.residual_variance().unwrap() - 6.0 * factor).abs() < 1e-8);
        }
    }

    #[test]
    fn exact_projection_has_closed_form() {
        // b = βη/α − (1 + ψ(2)η/α)e₀, η = −2α/ψ′(1), the same for every row
        let x = design(&[0.3, -1.2, 0.8, 2.0]);
        let (beta, alpha) = ([0.4, -0.7], 1.7);
        let info = WeibullInformation::new(&x, &beta, alpha, WeibullVariance::Exact).unwrap();
        let proj = info.projection().unwrap();
        let psi = digamma(2.0).unwrap();
        let eta = -2.0 * alpha / trigamma(1.0).unwrap();
        assert!((proj[2] - eta).abs() < 1e-10);
        assert!((proj[0] - (beta[0] * eta / alpha - 1.0 - psi * eta / alpha)).abs() < 1e-10);
        assert!((proj[1] - beta[1] * eta / alpha).abs() < 1e-10);
    }

    #[test]
    fn unit_shape_numerator_matches_exponential() {
        let d = DurationData::<f64>::from_covariates(
            vec![0.5, 1.3, 0.2, 2.2, 0.9],
            &[vec![0.0], vec![1.0], vec![0.0], vec![1.0], vec![0.5]],
        )
        .unwrap();
        let b = [0.1, -0.3];
        let num = weibull_frailty_numerator(&d, &b, 1.0).unwrap();
        let exp = exp_frailty_statistic(&d, &b).unwrap() * (4.0 * 5.0f64).sqrt();
        assert!((num - exp).abs() < 1e-12);
    }

    #[test]
    fn bad_shape_rejected() {
        let d = DurationData::<f64>::intercept_only(vec![0.5, 1.3, 0.2]).unwrap();
        assert!(matches!(
            cox_weibull_frailty(&d, &[0.0], 0.0, 0.05),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            cox_weibull_frailty(&d, &[0.0], -1.0, 0.05),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn published_variant_warns_and_is_larger() {
        let d = DurationData::<f64>::intercept_only(vec![0.1, 0.5, 1.3, 0.2, 4.0, 0.05]).unwrap();
        let fit = fit_weibull_ph(&d).unwrap();
        let (b, a) = (fit.beta(), fit.get("alpha").unwrap());
        let exact = cox_weibull_frailty(&d, &b, a, 0.05).unwrap();
        let published = cox_weibull_frailty_with(&d, &b, a, 0.05, WeibullVariance::Published).unwrap();
        assert!(exact.warnings.is_empty());
        assert_eq!(published.warnings.len(), 1);
        let ratio = published.statistic / exact.statistic;
        let expect = (weibull_residual_variance_factor::<f64>().unwrap()
            / weibull_published_variance_factor::<f64>().unwrap())
        .sqrt();
        assert!((ratio - expect).abs() < 1e-10);
    }

    #[test]
    fn exponential_projection_coefficient() {
        let d = DurationData::<f64>::from_covariates(
            vec![0.5, 1.3, 0.2, 2.2, 0.9],
            &[vec![0.0], vec![1.0], vec![0.0], vec![1.0], vec![0.5]],
        )
        .unwrap();
        let b = fit_exponential_ph(&d).unwrap().estimates;
        let a = projection_coefficients(&exp_frailty_decomposition(&d, &b).unwrap()).unwrap();
        // ½ convention: a = −½e₀
        assert!((a[(0, 0)] + 0.5).abs() < 1e-12);
        assert!(a[(0, 1)].abs() < 1e-12);
    }

    fn durations() -> impl Strategy<Value = (Vec<f64>, Vec<Vec<f64>>)> {
        prop::collection::vec((0.01f64..5.0, -1.0f64..1.0), 8..40).prop_map(|rows| {
            (
                rows.iter().map(|r| r.0).collect(),
                rows.iter().map(|r| vec![r.1]).collect(),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn exponential_moment_identity((t, cov) in durations()) {
            let Ok(d) = DurationData::<f64>::from_covariates(t, &cov) else { return Ok(()); };
            let b = fit_exponential_ph(&d).unwrap().estimates;
            let q = integrated_hazards(&d, &b, 1.0);
            let with: f64 = q.iter().map(|&v| frailty_score(v) + (1.0 - v)).sum();
            let without: f64 = q.iter().map(|&v| frailty_score(v)).sum();
            let scale = (4.0 * d.n() as f64).sqrt();
            prop_assert!((with / scale - without / scale).abs() < 1e-10);
            let z = z_statistic(&exp_frailty_decomposition(&d, &b).unwrap()).unwrap();
            prop_assert!((z - without / scale).abs() < 1e-9);
        }

        #[test]
        fn weibull_generic_route_matches((t, cov) in durations()) {
            let Ok(d) = DurationData::<f64>::from_covariates(t, &cov) else { return Ok(()); };
            let Ok(fit) = fit_weibull_ph(&d) else { return Ok(()); };
            let (b, a) = (fit.beta(), fit.get("alpha").unwrap());
            let z = z_statistic(&weibull_frailty_decomposition(&d, &b, a).unwrap()).unwrap();
            let closed = cox_weibull_frailty(&d, &b, a, 0.05).unwrap().statistic;
            prop_assert!((z - closed).abs() < 1e-8, "{} vs {}", z, closed);
        }
    }
}
