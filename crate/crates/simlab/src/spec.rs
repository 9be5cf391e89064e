use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Poisson,
    ExponentialPh,
    WeibullPh,
    GaussianPanel,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Poisson => "poisson",
            ModelKind::ExponentialPh => "exponential_ph",
            ModelKind::WeibullPh => "weibull_ph",
            ModelKind::GaussianPanel => "gaussian_panel",
        }
    }
}

/// Mixing distribution of U; all have mean 0 and variance 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UDist {
    Gaussian,
    Rademacher,
    /// Exp(1) − 1, skewed.
    CenteredExponential,
}

impl UDist {
    pub fn name(self) -> &'static str {
        match self {
            UDist::Gaussian => "gaussian",
            UDist::Rademacher => "rademacher",
            UDist::CenteredExponential => "centered_exponential",
        }
    }
}

/// How U enters the individual parameter λ_i.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeterogeneityForm {
    /// λ₀ e^{ξU}
    MultiplicativeExp,
    /// λ₀ + ξU
    Additive,
    /// λ₀ (1 + ξU/√λ₀)
    SqrtScaled,
}

impl HeterogeneityForm {
    pub fn name(self) -> &'static str {
        match self {
            HeterogeneityForm::MultiplicativeExp => "multiplicative_exp",
            HeterogeneityForm::Additive => "additive",
            HeterogeneityForm::SqrtScaled => "sqrt_scaled",
        }
    }
}

/// Distribution of the single covariate x₁, when there is one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovariateScheme {
    None,
    /// x₁ ∈ {0, 1} with probability ½ each.
    Bernoulli,
    /// x₁ ~ U(0, 1).
    Uniform,
}

impl CovariateScheme {
    pub fn name(self) -> &'static str {
        match self {
            CovariateScheme::None => "none",
            CovariateScheme::Bernoulli => "bernoulli",
            CovariateScheme::Uniform => "uniform",
        }
    }
}

macro_rules! parse_by_name {
    ($ty:ident, $what:literal, [$($v:ident),+]) => {
        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                let norm = s.replace('-', "_");
                $(if norm == $ty::$v.name() { return Ok($ty::$v); })+
                Err(Error::InvalidSpec(format!(
                    concat!("unknown ", $what, " '{}' (expected one of: {})"),
                    s,
                    [$($ty::$v.name()),+].join(", ")
                )))
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }
    };
}

parse_by_name!(ModelKind, "model", [Poisson, ExponentialPh, WeibullPh, GaussianPanel]);
parse_by_name!(UDist, "u distribution", [Gaussian, Rademacher, CenteredExponential]);
parse_by_name!(
    HeterogeneityForm,
    "heterogeneity form",
    [MultiplicativeExp, Additive, SqrtScaled]
);
parse_by_name!(CovariateScheme, "covariate scheme", [None, Bernoulli, Uniform]);

/// Everything needed to draw one dataset.
///
/// Nuisance names: `beta0`, `beta1` (with a covariate) for the regression
/// models, plus `alpha` (shape) for Weibull; `mu` and `sigma2` for panels.
/// For panels `xi` perturbs the individual means additively and `xi2` the
/// variances multiplicatively, σ_i² = σ² e^{ξ₂U₂}; `form` is ignored there.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub model: ModelKind,
    pub nuisance: Vec<(String, f64)>,
    pub xi: f64,
    pub xi2: f64,
    pub u_dist: UDist,
    pub form: HeterogeneityForm,
    pub n: usize,
    pub periods: usize,
    pub covariates: CovariateScheme,
}

impl GeneratorSpec {
    /// Intercept-only Poisson(λ₀) under the null.
    pub fn poisson(lambda0: f64, n: usize) -> Self {
        GeneratorSpec {
            model: ModelKind::Poisson,
            nuisance: vec![("beta0".into(), lambda0.ln())],
            xi: 0.0,
            xi2: 0.0,
            u_dist: UDist::Gaussian,
            form: HeterogeneityForm::MultiplicativeExp,
            n,
            periods: 0,
            covariates: CovariateScheme::None,
        }
    }

    /// Intercept-only exponential durations with rate e^{β₀}.
    pub fn exponential(beta0: f64, n: usize) -> Self {
        GeneratorSpec {
            model: ModelKind::ExponentialPh,
            nuisance: vec![("beta0".into(), beta0)],
            ..Self::poisson(1.0, n)
        }
    }

    /// Intercept-only Weibull PH durations.
    pub fn weibull(beta0: f64, shape: f64, n: usize) -> Self {
        GeneratorSpec {
            model: ModelKind::WeibullPh,
            nuisance: vec![("beta0".into(), beta0), ("alpha".into(), shape)],
            ..Self::poisson(1.0, n)
        }
    }

    /// N×T Gaussian panel.
    pub fn gaussian_panel(mu: f64, sigma2: f64, n: usize, periods: usize) -> Self {
        GeneratorSpec {
            model: ModelKind::GaussianPanel,
            nuisance: vec![("mu".into(), mu), ("sigma2".into(), sigma2)],
            periods,
            ..Self::poisson(1.0, n)
        }
    }

    pub fn with_xi(mut self, xi: f64) -> Self {
        self.xi = xi;
        self
    }

    pub fn with_xi2(mut self, xi2: f64) -> Self {
        self.xi2 = xi2;
        self
    }

    pub fn with_u(mut self, u: UDist) -> Self {
        self.u_dist = u;
        self
    }

    pub fn with_form(mut self, form: HeterogeneityForm) -> Self {
        self.form = form;
        self
    }

    /// Adds a covariate with coefficient `beta1`.
    pub fn with_covariate(mut self, scheme: CovariateScheme, beta1: f64) -> Self {
        self.covariates = scheme;
        self.nuisance.retain(|(k, _)| k != "beta1");
        if scheme != CovariateScheme::None {
            self.nuisance.push(("beta1".into(), beta1));
        }
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.nuisance.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    pub(crate) fn require(&self, name: &str) -> Result<f64> {
        let v = self
            .get(name)
            .ok_or_else(|| Error::InvalidSpec(format!("{} model needs nuisance value '{name}'", self.model)))?;
        if !v.is_finite() {
            return Err(Error::InvalidSpec(format!("nuisance value '{name}' is {v}")));
        }
        Ok(v)
    }

    /// True coefficient vector (β₀[, β₁]) for the regression models.
    pub fn beta(&self) -> Result<Vec<f64>> {
        let mut b = vec![self.require("beta0")?];
        if self.covariates != CovariateScheme::None {
            b.push(self.require("beta1")?);
        }
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("xi", self.xi), ("xi2", self.xi2)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidSpec(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        match self.model {
            ModelKind::GaussianPanel => {
                self.require("mu")?;
                let s2 = self.require("sigma2")?;
                if !(s2 > 0.0) {
                    return Err(Error::InvalidSpec(format!("sigma2 must be positive, got {s2}")));
                }
                if self.n < 2 || self.periods < 2 {
                    return Err(Error::InvalidSpec(format!(
                        "panel needs N >= 2 and T >= 2, got {}x{}",
                        self.n, self.periods
                    )));
                }
                if self.covariates != CovariateScheme::None {
                    return Err(Error::InvalidSpec("panels take no covariates".into()));
                }
            }
            model => {
                self.beta()?;
                if model == ModelKind::WeibullPh {
                    let a = self.require("alpha")?;
                    if !(a > 0.0) {
                        return Err(Error::InvalidSpec(format!("Weibull shape must be positive, got {a}")));
                    }
                } else if self.xi2 != 0.0 {
                    return Err(Error::InvalidSpec("xi2 only applies to panels".into()));
                }
                let p = self.beta()?.len();
                if self.n <= p {
                    return Err(Error::InvalidSpec(format!(
                        "n = {} is too small for {p} coefficients",
                        self.n
                    )));
                }
            }
        }
        Ok(())
    }

    /// Number of independent units.
    pub fn units(&self) -> usize {
        self.n
    }
}
