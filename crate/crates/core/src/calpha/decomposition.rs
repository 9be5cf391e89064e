use crate::error::{Error, Result};
use crate::numerics::{Matrix, SymMatrix};
use crate::real::{compensated_sum, Real};

/// Per-observation scores and information blocks for a C(α) test.
///
/// `xi_scores` holds ½·∇²_ξ p / p for each observation (n×q) and
/// `theta_scores` the first-order nuisance scores (n×p). The information
/// blocks are per-observation expectations, so that n·J is the information
/// of the whole sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreDecomposition<T: Real = f64> {
    xi_scores: Matrix<T>,
    theta_scores: Matrix<T>,
    j_xx: SymMatrix<T>,
    j_xt: Matrix<T>,
    j_tt: SymMatrix<T>,
    empirical: bool,
}

impl<T: Real> ScoreDecomposition<T> {
    /// Decomposition with analytic information blocks.
    pub fn new(
        xi_scores: Matrix<T>,
        theta_scores: Matrix<T>,
        j_xx: SymMatrix<T>,
        j_xt: Matrix<T>,
        j_tt: SymMatrix<T>,
    ) -> Result<Self> {
        let sd = ScoreDecomposition {
            xi_scores,
            theta_scores,
            j_xx,
            j_xt,
            j_tt,
            empirical: false,
        };
        sd.validate()?;
        Ok(sd)
    }

    /// Decomposition whose information blocks are the average outer product
    /// of the stacked score rows `(xi_i, theta_i)`.
    pub fn with_empirical_information(xi_scores: Matrix<T>, theta_scores: Matrix<T>) -> Result<Self> {
        let (n, q) = xi_scores.shape();
        let p = theta_scores.ncols();
        if theta_scores.nrows() != n {
            return Err(Error::Dimension(format!(
                "xi scores have {n} rows but nuisance scores have {}",
                theta_scores.nrows()
            )));
        }
        if n == 0 {
            return Err(Error::InvalidData("no observations".into()));
        }
        let nt = T::from_count(n);
        let avg = |a: &Matrix<T>, ai: usize, b: &Matrix<T>, bi: usize| {
            compensated_sum((0..n).map(|r| a[(r, ai)] * b[(r, bi)])) / nt
        };
        let mut j_xx = Matrix::zeros(q, q);
        for a in 0..q {
            for b in 0..=a {
                let v = avg(&xi_scores, a, &xi_scores, b);
                j_xx[(a, b)] = v;
                j_xx[(b, a)] = v;
            }
        }
        let mut j_xt = Matrix::zeros(q, p);
        for a in 0..q {
            for b in 0..p {
                j_xt[(a, b)] = avg(&xi_scores, a, &theta_scores, b);
            }
        }
        let mut j_tt = Matrix::zeros(p, p);
        for a in 0..p {
            for b in 0..=a {
                let v = avg(&theta_scores, a, &theta_scores, b);
                j_tt[(a, b)] = v;
                j_tt[(b, a)] = v;
            }
        }
        let sd = ScoreDecomposition {
            xi_scores,
            theta_scores,
            j_xx: SymMatrix::new(j_xx)?,
            j_xt,
            j_tt: SymMatrix::new(j_tt)?,
            empirical: true,
        };
        sd.validate()?;
        Ok(sd)
    }

    fn validate(&self) -> Result<()> {
        let (n, q) = self.xi_scores.shape();
        let p = self.theta_scores.ncols();
        if q == 0 {
            return Err(Error::Dimension("at least one tested parameter is required".into()));
        }
        if self.theta_scores.nrows() != n {
            return Err(Error::Dimension(format!(
                "xi scores have {n} rows but nuisance scores have {}",
                self.theta_scores.nrows()
            )));
        }
        if n < q + p {
            return Err(Error::InvalidData(format!(
                "{n} observations cannot support {q} tested and {p} nuisance parameters"
            )));
        }
        if self.j_xx.dim() != q || self.j_xt.shape() != (q, p) || self.j_tt.dim() != p {
            return Err(Error::Dimension(format!(
                "information blocks {}x{}, {:?}, {}x{} do not match q = {q}, p = {p}",
                self.j_xx.dim(),
                self.j_xx.dim(),
                self.j_xt.shape(),
                self.j_tt.dim(),
                self.j_tt.dim()
            )));
        }
        if p > 0 {
            self.j_tt.ensure_positive_definite("nuisance information")?;
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.xi_scores.nrows()
    }

    pub fn q(&self) -> usize {
        self.xi_scores.ncols()
    }

    pub fn p(&self) -> usize {
        self.theta_scores.ncols()
    }

    pub fn xi_scores(&self) -> &Matrix<T> {
        &self.xi_scores
    }

    pub fn theta_scores(&self) -> &Matrix<T> {
        &self.theta_scores
    }

    pub fn j_xx(&self) -> &SymMatrix<T> {
        &self.j_xx
    }

    pub fn j_xt(&self) -> &Matrix<T> {
        &self.j_xt
    }

    pub fn j_tt(&self) -> &SymMatrix<T> {
        &self.j_tt
    }

    pub fn is_empirical(&self) -> bool {
        self.empirical
    }
}

/// Residual scores and their covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualScore<T: Real = f64> {
    /// n×q, row i is xi_i − A·theta_i.
    pub g: Matrix<T>,
    /// J_ξξ − J_ξθ J_θθ⁻¹ J_θξ.
    pub sigma: SymMatrix<T>,
    /// Projection coefficients A = J_ξθ J_θθ⁻¹ (q×p).
    pub projection: Matrix<T>,
}

impl<T: Real> ResidualScore<T> {
    /// n^{-1/2} Σ_i g_i, one entry per tested parameter.
    pub fn normalized_sum(&self) -> Vec<T> {
        let n = self.g.nrows();
        let root_n = T::from_count(n).sqrt();
        (0..self.g.ncols())
            .map(|k| compensated_sum((0..n).map(|i| self.g[(i, k)])) / root_n)
            .collect()
    }
}

/// A = J_ξθ J_θθ⁻¹.
pub fn projection_coefficients<T: Real>(sd: &ScoreDecomposition<T>) -> Result<Matrix<T>> {
    if sd.p() == 0 {
        return Ok(Matrix::zeros(sd.q(), 0));
    }
    // A = (J_θθ⁻¹ J_θξ)ᵀ since J_θθ is symmetric
    Ok(sd.j_tt.solve_matrix(&sd.j_xt.transpose())?.transpose())
}

/// Projects the ξ-scores off the nuisance scores.
pub fn residual_score<T: Real>(sd: &ScoreDecomposition<T>) -> Result<ResidualScore<T>> {
    let a = projection_coefficients(sd)?;
    let (n, q) = sd.xi_scores.shape();
    let p = sd.p();
    let mut g = sd.xi_scores.clone();
    if p > 0 {
        for i in 0..n {
            let theta = sd.theta_scores.row(i);
            for k in 0..q {
                let adj = crate::numerics::dot(a.row(k), theta);
                g[(i, k)] -= adj;
            }
        }
    }
    let sigma = if p > 0 {
        let correction = a.matmul(&sd.j_xt.transpose())?;
        SymMatrix::new(sd.j_xx.as_matrix().sub(&correction)?.symmetrized()?)?
    } else {
        sd.j_xx.clone()
    };
    sigma.ensure_positive_definite("residual information")?;
    Ok(ResidualScore {
        g,
        sigma,
        projection: a,
    })
}

/// Z_n = Σ^{-1/2} n^{-1/2} Σ_i g_i for a single tested parameter.
pub fn z_statistic<T: Real>(sd: &ScoreDecomposition<T>) -> Result<T> {
    if sd.q() != 1 {
        return Err(Error::Dimension(format!(
            "z_statistic needs one tested parameter, got {}",
            sd.q()
        )));
    }
    let r = residual_score(sd)?;
    let s = r.normalized_sum()[0];
    Ok(s / r.sigma.get(0, 0).sqrt())
}
