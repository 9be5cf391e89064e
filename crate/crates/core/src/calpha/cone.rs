//! One-sided joint statistics: the bivariate cone projection and the
//! diagonal q-dimensional statistic.

use crate::calpha::decomposition::{residual_score, ScoreDecomposition};
use crate::calpha::report::TestReport;
use crate::error::{Error, Result};
use crate::numerics::{cholesky2, forward_substitute, ChiBarMixture};
use crate::real::Real;

/// Which piece of the cone projection produced T.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BivariateCase {
    /// w lies in the cone, T = |w|².
    Interior = 1,
    /// Projection onto the first generator (1, 0), T = w₁².
    FirstEdge = 2,
    /// Projection onto the second generator (ρ, √(1−ρ²)).
    SecondEdge = 3,
    /// w lies in the polar cone, T = 0.
    Polar = 4,
}

impl BivariateCase {
    pub fn number(self) -> u8 {
        self as u8
    }
}

fn check_rho<T: Real>(rho: T) -> Result<()> {
    if !(rho.abs() < T::one()) {
        return Err(Error::Singular(format!(
            "correlation {rho} of the second-order scores must lie strictly inside (-1, 1)"
        )));
    }
    Ok(())
}

/// Squared norm of the Euclidean projection of `w` onto the cone generated
/// by (1, 0) and (ρ, √(1−ρ²)).
///
/// `w` is the whitened residual score Λ⁻¹ n^{-1/2} Σ g_i with ΛΛᵀ = Σ.
pub fn bivariate_t<T: Real>(w: [T; 2], rho: T) -> Result<(T, BivariateCase)> {
    check_rho(rho)?;
    let s = (T::one() - rho * rho).sqrt();
    let [w1, w2] = w;
    // w = a·d1 + b·d2
    let b = w2 / s;
    let a = w1 - rho * b;
    if a >= T::zero() && b >= T::zero() {
        return Ok((w1 * w1 + w2 * w2, BivariateCase::Interior));
    }
    let p1 = w1;
    let p2 = rho * w1 + s * w2;
    if p1 <= T::zero() && p2 <= T::zero() {
        return Ok((T::zero(), BivariateCase::Polar));
    }
    let t1 = p1.max(T::zero()).powi(2);
    let t2 = p2.max(T::zero()).powi(2);
    if t1 >= t2 {
        Ok((t1, BivariateCase::FirstEdge))
    } else {
        Ok((t2, BivariateCase::SecondEdge))
    }
}

/// Weights (½ − β/2π, ½, β/2π) on (χ²₀, χ²₁, χ²₂), β = arccos ρ.
pub fn bivariate_weights<T: Real>(rho: T) -> Result<ChiBarMixture<T>> {
    check_rho(rho)?;
    let half = T::lit(0.5);
    let w2 = rho.acos() / T::TAU();
    // (1 − w₂) − ½ is exact, which makes w₀ + ½ + w₂ round to exactly 1.
    let w0 = (T::one() - w2) - half;
    ChiBarMixture::new(vec![(w0, 0), (half, 1), (w2, 2)])
}

/// Joint one-sided test of two heterogeneity parameters.
pub fn bivariate_test<T: Real>(
    test: &str,
    sd: &ScoreDecomposition<T>,
    alpha: T,
    nuisance_estimates: Vec<(String, T)>,
) -> Result<TestReport<T>> {
    if sd.q() != 2 {
        return Err(Error::Dimension(format!("bivariate test needs q = 2, got {}", sd.q())));
    }
    let r = residual_score(sd)?;
    let s = r.normalized_sum();
    let l = cholesky2(&r.sigma)?;
    let w = forward_substitute(&l, &s)?;
    let rho = r.sigma.get(0, 1) / (r.sigma.get(0, 0) * r.sigma.get(1, 1)).sqrt();
    let (t, _) = bivariate_t([w[0], w[1]], rho)?;
    TestReport::mixture(test, t, w, bivariate_weights(rho)?, alpha, nuisance_estimates, sd.n())
}

/// T = Σ_k (0 ∨ S̃_k)² / Σ_kk for a diagonal residual covariance.
pub fn diag_t<T: Real>(residual_scores: &[T], sigma_diag: &[T]) -> Result<T> {
    if residual_scores.len() != sigma_diag.len() || residual_scores.is_empty() {
        return Err(Error::Dimension(format!(
            "{} residual scores against {} variances",
            residual_scores.len(),
            sigma_diag.len()
        )));
    }
    let mut t = T::zero();
    for (k, (&s, &v)) in residual_scores.iter().zip(sigma_diag).enumerate() {
        if !(v > T::zero()) {
            return Err(Error::Singular(format!("residual variance {k} is {v}")));
        }
        let pos = s.max(T::zero());
        t += pos * pos / v;
    }
    Ok(t)
}

/// One-sided test of q parameters with diagonal residual information,
/// null law Σ C(q,i) 2^{-q} χ²_i.
pub fn diag_test<T: Real>(
    test: &str,
    residual_scores: &[T],
    sigma_diag: &[T],
    alpha: T,
    nuisance_estimates: Vec<(String, T)>,
    n: usize,
) -> Result<TestReport<T>> {
    let t = diag_t(residual_scores, sigma_diag)?;
    let components: Vec<T> = residual_scores
        .iter()
        .zip(sigma_diag)
        .map(|(&s, &v)| s / v.sqrt())
        .collect();
    let null = ChiBarMixture::binomial(residual_scores.len() as u32)?;
    TestReport::mixture(test, t, components, null, alpha, nuisance_estimates, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bivariate_examples() {
        assert_eq!(
            bivariate_t([1.0, -1.0], 0.0f64).unwrap(),
            (1.0, BivariateCase::FirstEdge)
        );

        let (t, case) = bivariate_t([1.0, 2.0], 0.5f64).unwrap();
        assert!((t - 4.982_05).abs() < 1e-5, "{t}");
        assert!((t - (0.5 + 0.866_025_403_784_438_6 * 2.0f64).powi(2)).abs() < 1e-12);
        assert_eq!(case, BivariateCase::SecondEdge);

        assert_eq!(bivariate_t([-1.0, -1.0], 0.5f64).unwrap(), (0.0, BivariateCase::Polar));
        assert_eq!(bivariate_t([3.0, 1.0], 0.5f64).unwrap().1, BivariateCase::Interior);
        assert!(matches!(bivariate_t([1.0, 1.0], 1.0f64), Err(Error::Singular(_))));
    }

    #[test]
    fn weights_examples() {
        let m = bivariate_weights(0.0f64).unwrap();
        assert_eq!(m.weights(), &[0.25, 0.5, 0.25]);
        let m = bivariate_weights(0.5f64).unwrap();
        assert!((m.weights()[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.weights()[2] - 1.0 / 6.0).abs() < 1e-15);
        let m = bivariate_weights(1.0f64 - 1e-12).unwrap();
        assert!((m.weights()[0] - 0.5).abs() < 1e-5 && m.weights()[2] < 1e-5);
        assert!(bivariate_weights(-1.0).is_err());
    }

    #[test]
    fn diag_examples() {
        assert_eq!(diag_t(&[-1.0, -0.2], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(diag_t(&[2.0, -1.0], &[4.0, 1.0]).unwrap(), 1.0);
        assert!(matches!(diag_t(&[1.0], &[0.0]), Err(Error::Singular(_))));
        let z: f64 = 1.3;
        assert!((diag_t(&[z * 2.0], &[4.0]).unwrap() - z * z).abs() < 1e-12);
    }

    fn grid_projection(w: [f64; 2], rho: f64) -> f64 {
        let beta = rho.acos();
        let steps = (beta / 1e-4).ceil() as usize;
        let mut best = 0.0f64;
        for k in 0..=steps {
            let phi = beta * k as f64 / steps as f64;
            let ip = w[0] * phi.cos() + w[1] * phi.sin();
            best = best.max(ip.max(0.0).powi(2));
        }
        best
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]
        #[test]
        fn rho_zero_is_sum_of_positive_parts(w1 in -5.0f64..5.0, w2 in -5.0f64..5.0) {
            let (t, _) = bivariate_t([w1, w2], 0.0f64).unwrap();
            prop_assert_eq!(t, w1.max(0.0).powi(2) + w2.max(0.0).powi(2));
        }

        #[test]
        fn matches_grid_projection(w1 in -4.0f64..4.0, w2 in -4.0f64..4.0, rho in -0.95f64..0.95) {
            let (t, _) = bivariate_t([w1, w2], rho).unwrap();
            let oracle = grid_projection([w1, w2], rho);
            prop_assert!((t - oracle).abs() < 1e-6 * (1.0 + oracle), "{} vs {}", t, oracle);
        }

        #[test]
        fn weights_sum_to_one(rho in -0.999f64..0.999) {
            let m = bivariate_weights(rho).unwrap();
            let w = m.weights();
            prop_assert_eq!(w[0] + w[1] + w[2], 1.0);
        }
    }
}
