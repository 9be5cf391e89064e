//! Joint test for heterogeneous means and variances in a Gaussian panel.
//!
//! y_it = μ_i + σ_i ε_it with both μ_i and σ_i² perturbed around (μ, σ²).
//! Per individual, with ȳ the individual mean and 2Z = Σ_t(y − μ)²/σ²:
//!
//! - v₁ = ((ȳ − μ)/(σ²/T))² − T/σ², the mean-heterogeneity score
//! - v₂ = (Z − T/2)² − Z, the variance-heterogeneity score
//! - v₃ = (ȳ − μ)/(σ²/T) and v₄ = (Z − T/2)/σ², the nuisance scores

use crate::calpha::{diag_test, ScoreDecomposition, TestReport};
use crate::data::PanelData;
use crate::error::{Error, Result};
use crate::numerics::{Matrix, SymMatrix};
use crate::real::{compensated_sum, Real};

fn check_variance<T: Real>(sigma2: T) -> Result<()> {
    if !(sigma2 > T::zero()) || !sigma2.is_finite() {
        return Err(Error::domain("gaussian panel", sigma2.as_f64(), "sigma2 > 0"));
    }
    Ok(())
}

/// Per-individual scores (v₁, v₂, v₃, v₄).
fn individual_scores<T: Real>(d: &PanelData<T>, mu: T, sigma2: T) -> Vec<[T; 4]> {
    let t = T::from_count(d.n_periods());
    let half_t = t / T::lit(2.0);
    let prec = t / sigma2;
    d.y()
        .rows_iter()
        .map(|row| {
            let ybar = compensated_sum(row.iter().copied()) / t;
            let m = (ybar - mu) * prec;
            let z = compensated_sum(row.iter().map(|&v| (v - mu) * (v - mu))) / (T::lit(2.0) * sigma2);
            [m * m - prec, (z - half_t) * (z - half_t) - z, m, (z - half_t) / sigma2]
        })
        .collect()
}

/// Analytic information of (ξ₁, ξ₂, μ, σ²) for the unhalved scores, as
/// totals over N individuals:
///
/// ```text
/// NT/σ⁴ · [ 2T   σ²           0   1    ]
///         [ σ²   (T+3)σ⁴/2    0   σ²/2 ]
///         [ 0    0            σ²  0    ]
///         [ 1    σ²/2         0   1/2  ]
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct PanelInformation<T: Real = f64> {
    sigma2: T,
    n: usize,
    t: usize,
    full: SymMatrix<T>,
}

impl<T: Real> PanelInformation<T> {
    pub fn new(sigma2: T, n_individuals: usize, n_periods: usize) -> Result<Self> {
        check_variance(sigma2)?;
        if n_individuals == 0 || n_periods < 2 {
            return Err(Error::InvalidData(format!(
                "panel information needs N >= 1 and T >= 2, got {n_individuals}x{n_periods}"
            )));
        }
        let s = sigma2;
        let tt = T::from_count(n_periods);
        let (zero, one, two) = (T::zero(), T::one(), T::lit(2.0));
        let half = T::lit(0.5);
        let m = Matrix::from_rows(&[
            vec![two * tt, s, zero, one],
            vec![s, (tt + T::lit(3.0)) * s * s / two, zero, s / two],
            vec![zero, zero, s, zero],
            vec![one, s / two, zero, half],
        ])?;
        let factor = T::from_count(n_individuals) * tt / (s * s);
        Ok(PanelInformation {
            sigma2,
            n: n_individuals,
            t: n_periods,
            full: SymMatrix::new(m.scale(factor))?,
        })
    }

    pub fn matrix(&self) -> &SymMatrix<T> {
        &self.full
    }

    fn block(&self, rows: [usize; 2], cols: [usize; 2]) -> Matrix<T> {
        let mut b = Matrix::zeros(2, 2);
        for (i, &r) in rows.iter().enumerate() {
            for (j, &c) in cols.iter().enumerate() {
                b[(i, j)] = self.full.get(r, c);
            }
        }
        b
    }

    pub fn i_xx(&self) -> SymMatrix<T> {
        SymMatrix::new(self.block([0, 1], [0, 1])).expect("symmetric block")
    }

    pub fn i_xt(&self) -> Matrix<T> {
        self.block([0, 1], [2, 3])
    }

    pub fn i_tt(&self) -> SymMatrix<T> {
        SymMatrix::new(self.block([2, 3], [2, 3])).expect("symmetric block")
    }

    /// I_ξθ I_θθ⁻¹, solved numerically.
    pub fn projection(&self) -> Result<Matrix<T>> {
        Ok(self.i_tt().solve_matrix(&self.i_xt().transpose())?.transpose())
    }

    /// I_ξ.θ = I_ξξ − I_ξθ I_θθ⁻¹ I_θξ, solved numerically.
    pub fn residual(&self) -> Result<SymMatrix<T>> {
        let adj = self.projection()?.matmul(&self.i_xt().transpose())?;
        SymMatrix::new(self.i_xx().as_matrix().sub(&adj)?.symmetrized()?)
    }

    /// diag(2NT(T−1)/σ⁴, NT(T/2 + 1)).
    pub fn residual_closed_form(&self) -> SymMatrix<T> {
        let nt = T::from_count(self.n) * T::from_count(self.t);
        let tt = T::from_count(self.t);
        let two = T::lit(2.0);
        SymMatrix::diag(&[
            two * nt * (tt - T::one()) / (self.sigma2 * self.sigma2),
            nt * (tt / two + T::one()),
        ])
    }

    /// [[0, 2], [0, σ²]].
    pub fn projection_closed_form(&self) -> Matrix<T> {
        let z = T::zero();
        Matrix::from_rows(&[vec![z, T::lit(2.0)], vec![z, self.sigma2]]).expect("2x2")
    }
}

/// (t₁, t₂) evaluated as written at any (μ, σ²):
/// t₁ = (2NT(T−1)/σ⁴)^{-1/2}(Σ((ȳ−μ)/(σ²/T))² − NT/σ²),
/// t₂ = (NT(T/2+1))^{-1/2}(Σ(Z−T/2)² − NT/2).
pub fn gaussian_panel_components<T: Real>(d: &PanelData<T>, mu: T, sigma2: T) -> Result<[T; 2]> {
    let (num, var) = component_parts(d, mu, sigma2)?;
    Ok([num[0] / var[0].sqrt(), num[1] / var[1].sqrt()])
}

fn component_parts<T: Real>(d: &PanelData<T>, mu: T, sigma2: T) -> Result<([T; 2], [T; 2])> {
    check_variance(sigma2)?;
    let scores = individual_scores(d, mu, sigma2);
    let nt = T::from_count(d.n_individuals()) * T::from_count(d.n_periods());
    let two = T::lit(2.0);
    let num1 = compensated_sum(scores.iter().map(|s| s[2] * s[2])) - nt / sigma2;
    let num2 = compensated_sum(scores.iter().map(|s| {
        let c = s[3] * sigma2;
        c * c
    })) - nt / two;
    let info = PanelInformation::new(sigma2, d.n_individuals(), d.n_periods())?.residual_closed_form();
    Ok(([num1, num2], [info.get(0, 0), info.get(1, 1)]))
}

/// ξ-scores ½(v₁, v₂) and nuisance scores (v₃, v₄) per individual, with the
/// analytic information averaged over individuals.
pub fn gaussian_panel_decomposition<T: Real>(d: &PanelData<T>, mu: T, sigma2: T) -> Result<ScoreDecomposition<T>> {
    check_variance(sigma2)?;
    let n = d.n_individuals();
    let scores = individual_scores(d, mu, sigma2);
    let half = T::lit(0.5);
    let mut xi = Matrix::zeros(n, 2);
    let mut theta = Matrix::zeros(n, 2);
    for (i, s) in scores.iter().enumerate() {
        xi[(i, 0)] = half * s[0];
        xi[(i, 1)] = half * s[1];
        theta[(i, 0)] = s[2];
        theta[(i, 1)] = s[3];
    }
    let info = PanelInformation::new(sigma2, n, d.n_periods())?;
    let inv_n = T::from_count(n).recip();
    let jxx = SymMatrix::new(info.i_xx().as_matrix().scale(half * half * inv_n))?;
    let jxt = info.i_xt().scale(half * inv_n);
    let jtt = SymMatrix::new(info.i_tt().as_matrix().scale(inv_n))?;
    ScoreDecomposition::new(xi, theta, jxx, jxt, jtt)
}

fn ensure_panel_mle<T: Real>(d: &PanelData<T>, mu: T, sigma2: T) -> Result<()> {
    let y = d.y().as_slice();
    let nt = T::from_count(y.len());
    let mean = compensated_sum(y.iter().copied()) / nt;
    let var = compensated_sum(y.iter().map(|&v| (v - mean) * (v - mean))) / nt;
    let tol = T::solver_tol() * T::lit(crate::models::MLE_CHECK_FACTOR);
    let dev_mu = (mu - mean).abs() / var.sqrt();
    let dev_s2 = (sigma2 - var).abs() / var;
    let dev = dev_mu.max(dev_s2);
    if !(dev <= tol) {
        return Err(Error::NotAtMle {
            score_norm: dev.as_f64(),
            tolerance: tol.as_f64(),
        });
    }
    Ok(())
}

/// Joint one-sided test T = (0 ∨ t₁)² + (0 ∨ t₂)² against ¼χ²₀ + ½χ²₁ + ¼χ²₂.
pub fn gaussian_panel_joint<T: Real>(d: &PanelData<T>, mu_hat: T, sigma2_hat: T, alpha: T) -> Result<TestReport<T>> {
    check_variance(sigma2_hat)?;
    ensure_panel_mle(d, mu_hat, sigma2_hat)?;
    let (num, var) = component_parts(d, mu_hat, sigma2_hat)?;
    let nuisance = vec![("mu".to_string(), mu_hat), ("sigma2".to_string(), sigma2_hat)];
    diag_test("gaussian-panel", &num, &var, alpha, nuisance, d.n_individuals())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calpha::bivariate_test;
    use crate::mle::fit_gaussian_panel;
    use proptest::prelude::*;

    fn fitted(d: &PanelData) -> (f64, f64) {
        let f = fit_gaussian_panel(d).unwrap();
        (f.get("mu").unwrap(), f.get("sigma2").unwrap())
    }

    #[test]
    fn hand_value() {
        let d = PanelData::<f64>::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        let (mu, s2) = fitted(&d);
        assert!(mu.abs() < 1e-15 && (s2 - 1.0).abs() < 1e-15);
        let r = gaussian_panel_joint(&d, mu, s2, 0.05).unwrap();
        let c = r.components.clone().unwrap();
        assert!((c[0] + 2f64.sqrt()).abs() < 1e-12);
        assert!((c[1] + 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert!((r.critical_value - 4.230_599_177_831_493).abs() < 1e-8);
    }

    #[test]
    fn not_at_mle_rejected() {
        let d = PanelData::<f64>::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        assert!(matches!(
            gaussian_panel_joint(&d, 0.1, 1.0, 0.05),
            Err(Error::NotAtMle { .. })
        ));
        assert!(matches!(
            gaussian_panel_joint(&d, 0.0, 0.0, 0.05),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn information_closed_forms() {
        for &(s2, n, t) in &[(1.0, 2, 2), (0.37, 50, 7), (12.5, 3, 30)] {
            let info = PanelInformation::<f64>::new(s2, n, t).unwrap();
            let r = info.residual().unwrap();
            let rc = info.residual_closed_form();
            let scale = rc.as_matrix().max_abs();
            assert!(r.as_matrix().max_abs_diff(rc.as_matrix()).unwrap() <= 1e-10 * scale);
            let p = info.projection().unwrap();
            assert!(p.max_abs_diff(&info.projection_closed_form()).unwrap() < 1e-10 * s2.max(1.0));
        }
    }

    fn panel() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (4usize..12, 2usize..6).prop_flat_map(|(n, t)| prop::collection::vec(prop::collection::vec(-3.0f64..3.0, t), n))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn location_scale_equivariance(rows in panel(), a in -50.0f64..50.0, b in prop_oneof![-20.0f64..-0.05, 0.05f64..20.0]) {
            let d = PanelData::<f64>::from_rows(&rows).unwrap();
            let (mu, s2) = fitted(&d);
            let r1 = gaussian_panel_joint(&d, mu, s2, 0.05).unwrap();
            let moved: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| a + b * v).collect()).collect();
            let d2 = PanelData::<f64>::from_rows(&moved).unwrap();
            let (mu2, s22) = fitted(&d2);
            let r2 = gaussian_panel_joint(&d2, mu2, s22, 0.05).unwrap();
            let (c1, c2) = (r1.components.unwrap(), r2.components.unwrap());
            prop_assert!((c1[0] - c2[0]).abs() < 1e-10);
            prop_assert!((c1[1] - c2[1]).abs() < 1e-10);
            prop_assert!((r1.statistic - r2.statistic).abs() < 1e-10);
        }

        #[test]
        fn generic_route_matches(rows in panel()) {
            let d = PanelData::<f64>::from_rows(&rows).unwrap();
            let (mu, s2) = fitted(&d);
            let joint = gaussian_panel_joint(&d, mu, s2, 0.05).unwrap();
            let generic = bivariate_test("g", &gaussian_panel_decomposition(&d, mu, s2).unwrap(), 0.05, vec![]).unwrap();
            prop_assert!((joint.statistic - generic.statistic).abs() < 1e-9);
            let (c, g) = (joint.components.unwrap(), generic.components.unwrap());
            prop_assert!((c[0] - g[0]).abs() < 1e-9 && (c[1] - g[1]).abs() < 1e-9);
        }

        #[test]
        fn random_information_draws(s2 in 0.01f64..100.0, n in 1usize..500, t in 2usize..40) {
            let info = PanelInformation::<f64>::new(s2, n, t).unwrap();
            let rc = info.residual_closed_form();
            let diff = info.residual().unwrap().as_matrix().max_abs_diff(rc.as_matrix()).unwrap();
            prop_assert!(diff <= 1e-10 * rc.as_matrix().max_abs());
            let pd = info.projection().unwrap().max_abs_diff(&info.projection_closed_form()).unwrap();
            prop_assert!(pd <= 1e-10 * s2.max(1.0));
        }
    }
}
