//! The regular C(α) test, for comparison with the irregular statistics.
//! When the first-order ξ-score is informative it reduces to Rao's score test.

use crate::calpha::decomposition::{residual_score, ScoreDecomposition};
use crate::error::{Error, Result};
use crate::numerics::{chisq_sf, Matrix, SymMatrix};
use crate::real::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct RegularCalpha<T: Real = f64> {
    pub statistic: T,
    pub df: u32,
    pub p_value: T,
    /// gₙ = n^{-1/2} Σ_i (c_ξ,i − I_ξθ I_θθ⁻¹ c_θ,i)
    pub residual: Vec<T>,
}

/// T = gₙᵀ I_ξ·θ⁻¹ gₙ with a χ²_q p-value.
///
/// `i_xx`, `i_xt`, `i_tt` are per-observation information blocks for the
/// first-order ξ-scores and the nuisance scores.
pub fn regular_calpha<T: Real>(
    first_order_xi_scores: Matrix<T>,
    theta_scores: Matrix<T>,
    i_xx: SymMatrix<T>,
    i_xt: Matrix<T>,
    i_tt: SymMatrix<T>,
) -> Result<RegularCalpha<T>> {
    let sd = ScoreDecomposition::new(first_order_xi_scores, theta_scores, i_xx, i_xt, i_tt)?;
    let r = residual_score(&sd)?;
    regular_calpha_from_residual(&r.normalized_sum(), &r.sigma)
}

/// Same statistic from an already residualized, n^{-1/2}-normed score and
/// the residual information I_ξ·θ.
pub fn regular_calpha_from_residual<T: Real>(g: &[T], i_resid: &SymMatrix<T>) -> Result<RegularCalpha<T>> {
    if g.len() != i_resid.dim() || g.is_empty() {
        return Err(Error::Dimension(format!(
            "score of length {} against a {}x{} information",
            g.len(),
            i_resid.dim(),
            i_resid.dim()
        )));
    }
    i_resid.ensure_positive_definite("residual information")?;
    let x = i_resid.solve(g)?;
    let t = crate::numerics::dot(g, &x).max(T::zero());
    let df = g.len() as u32;
    let p_value = if t == T::zero() { T::one() } else { chisq_sf(t, df)? };
    Ok(RegularCalpha {
        statistic: t,
        df,
        p_value,
        residual: g.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let r = regular_calpha_from_residual(&[0.0], &SymMatrix::scalar(3.0f64)).unwrap();
        assert_eq!((r.statistic, r.p_value), (0.0, 1.0));

        let r = regular_calpha_from_residual(&[2.0], &SymMatrix::scalar(4.0f64)).unwrap();
        assert!((r.statistic - 1.0).abs() < 1e-15);

        let r = regular_calpha_from_residual(&[1.0f64, 1.0], &SymMatrix::identity(2)).unwrap();
        assert!((r.statistic - 2.0).abs() < 1e-15);
        assert!((r.p_value - (-1.0f64).exp()).abs() < 1e-14);
        assert!((r.p_value - 0.36788).abs() < 1e-5);
    }

    #[test]
    fn singular_information_rejected() {
        let i = SymMatrix::<f64>::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(
            regular_calpha_from_residual(&[1.0, 0.0], &i),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn normal_mean_score_test() {
        // N(μ, 1) with μ tested at 0 and no nuisance: T = n ȳ²
        let y = [0.3, -0.1, 0.8, 0.4, 1.1];
        let n = y.len() as f64;
        let xi = Matrix::column(&y);
        let r = regular_calpha(
            xi,
            Matrix::zeros(5, 0),
            SymMatrix::scalar(1.0f64),
            Matrix::zeros(1, 0),
            SymMatrix::new(Matrix::zeros(0, 0)).unwrap(),
        )
        .unwrap();
        let mean = y.iter().sum::<f64>() / n;
        assert!((r.statistic - n * mean * mean).abs() < 1e-12);
    }
}
