//! Validated datasets.
//!
//! Regression designs always carry the intercept as their first column.

use crate::error::{Error, Result};
use crate::numerics::{Matrix, SymMatrix};
use crate::real::Real;

fn design_with_intercept<T: Real>(n: usize, covariates: &[Vec<T>]) -> Result<Matrix<T>> {
    let k = covariates.first().map_or(0, Vec::len);
    if !covariates.is_empty() && covariates.len() != n {
        return Err(Error::Dimension(format!(
            "{n} responses but {} covariate rows",
            covariates.len()
        )));
    }
    let mut x = Matrix::zeros(n, k + 1);
    for i in 0..n {
        x[(i, 0)] = T::one();
        if k > 0 {
            let row = &covariates[i];
            if row.len() != k {
                return Err(Error::Dimension(format!(
                    "covariate row {i} has {} entries, expected {k}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                x[(i, j + 1)] = v;
            }
        }
    }
    Ok(x)
}

fn check_design<T: Real>(x: &Matrix<T>, n: usize) -> Result<()> {
    if x.nrows() != n {
        return Err(Error::Dimension(format!(
            "design has {} rows for {n} observations",
            x.nrows()
        )));
    }
    let p = x.ncols();
    if p == 0 {
        return Err(Error::Dimension("design has no columns".into()));
    }
    if n <= p {
        return Err(Error::InvalidData(format!(
            "need more observations than coefficients ({n} observations, {p} coefficients)"
        )));
    }
    for i in 0..n {
        if x[(i, 0)] != T::one() {
            return Err(Error::InvalidData(format!(
                "first design column must be the intercept (row {i} has {})",
                x[(i, 0)]
            )));
        }
        for j in 0..p {
            if !x[(i, j)].is_finite() {
                return Err(Error::InvalidData(format!("design entry ({i},{j}) is not finite")));
            }
        }
    }
    let xtx = SymMatrix::new(x.transpose().matmul(x)?)?;
    xtx.ensure_positive_definite("design cross-product X'X")
        .map_err(|_| Error::InvalidData("design matrix is not of full column rank".into()))
}

/// Counts with a regression design.
#[derive(Debug, Clone, PartialEq)]
pub struct CountData<T: Real = f64> {
    y: Vec<u64>,
    x: Matrix<T>,
}

impl<T: Real> CountData<T> {
    /// `x` must already contain the intercept column.
    pub fn new(y: Vec<u64>, x: Matrix<T>) -> Result<Self> {
        check_design(&x, y.len())?;
        Ok(CountData { y, x })
    }

    /// Builds the design from covariate rows, prepending the intercept.
    pub fn from_covariates(y: Vec<u64>, covariates: &[Vec<T>]) -> Result<Self> {
        let x = design_with_intercept(y.len(), covariates)?;
        Self::new(y, x)
    }

    pub fn intercept_only(y: Vec<u64>) -> Result<Self> {
        Self::from_covariates(y, &[])
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Number of covariates, excluding the intercept.
    pub fn k(&self) -> usize {
        self.x.ncols() - 1
    }

    pub fn y(&self) -> &[u64] {
        &self.y
    }

    pub fn y_real(&self, i: usize) -> T {
        T::lit(self.y[i] as f64)
    }

    pub fn x(&self) -> &Matrix<T> {
        &self.x
    }

    /// All counts equal: the fit is a constant and the overdispersion
    /// statistic, while finite, carries little information.
    pub fn is_degenerate(&self) -> bool {
        self.y.windows(2).all(|w| w[0] == w[1])
    }
}

/// Uncensored single-spell durations with a regression design.
#[derive(Debug, Clone, PartialEq)]
pub struct DurationData<T: Real = f64> {
    t: Vec<T>,
    x: Matrix<T>,
}

impl<T: Real> DurationData<T> {
    pub fn new(t: Vec<T>, x: Matrix<T>) -> Result<Self> {
        for (i, &ti) in t.iter().enumerate() {
            if !(ti > T::zero()) || !ti.is_finite() {
                return Err(Error::InvalidData(format!(
                    "duration {i} is {ti}; durations must be positive"
                )));
            }
        }
        check_design(&x, t.len())?;
        Ok(DurationData { t, x })
    }

    pub fn from_covariates(t: Vec<T>, covariates: &[Vec<T>]) -> Result<Self> {
        let x = design_with_intercept(t.len(), covariates)?;
        Self::new(t, x)
    }

    pub fn intercept_only(t: Vec<T>) -> Result<Self> {
        Self::from_covariates(t, &[])
    }

    pub fn n(&self) -> usize {
        self.t.len()
    }

    pub fn k(&self) -> usize {
        self.x.ncols() - 1
    }

    pub fn t(&self) -> &[T] {
        &self.t
    }

    pub fn x(&self) -> &Matrix<T> {
        &self.x
    }
}

/// Balanced N×T panel, one row per individual.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelData<T: Real = f64> {
    y: Matrix<T>,
}

impl<T: Real> PanelData<T> {
    pub fn new(y: Matrix<T>) -> Result<Self> {
        let (n, t) = y.shape();
        if n < 2 || t < 2 {
            return Err(Error::InvalidData(format!(
                "panel needs N >= 2 and T >= 2, got {n}x{t}"
            )));
        }
        if let Some(pos) = y.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "panel entry ({}, {}) is not finite",
                pos / t,
                pos % t
            )));
        }
        Ok(PanelData { y })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    /// Number of individuals N.
    pub fn n_individuals(&self) -> usize {
        self.y.nrows()
    }

    /// Number of periods T.
    pub fn n_periods(&self) -> usize {
        self.y.ncols()
    }

    pub fn y(&self) -> &Matrix<T> {
        &self.y
    }
}

/// Gaussian regression with unit error variance, y = Xβ + ε.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionData<T: Real = f64> {
    y: Vec<T>,
    x: Matrix<T>,
}

impl<T: Real> RegressionData<T> {
    pub fn new(y: Vec<T>, x: Matrix<T>) -> Result<Self> {
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!("response {i} is not finite")));
        }
        check_design(&x, y.len())?;
        Ok(RegressionData { y, x })
    }

    pub fn from_covariates(y: Vec<T>, covariates: &[Vec<T>]) -> Result<Self> {
        let x = design_with_intercept(y.len(), covariates)?;
        Self::new(y, x)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn x(&self) -> &Matrix<T> {
        &self.x
    }
}

/// Any dataset the tests accept.
#[derive(Debug, Clone, PartialEq)]
pub enum ObservationSet<T: Real = f64> {
    Counts(CountData<T>),
    Durations(DurationData<T>),
    Panel(PanelData<T>),
}

impl<T: Real> ObservationSet<T> {
    pub fn kind(&self) -> &'static str {
        match self {
            ObservationSet::Counts(_) => "counts",
            ObservationSet::Durations(_) => "durations",
            ObservationSet::Panel(_) => "panel",
        }
    }

    /// Number of independent units (observations, or individuals for panels).
    pub fn n(&self) -> usize {
        match self {
            ObservationSet::Counts(d) => d.n(),
            ObservationSet::Durations(d) => d.n(),
            ObservationSet::Panel(d) => d.n_individuals(),
        }
    }
}
