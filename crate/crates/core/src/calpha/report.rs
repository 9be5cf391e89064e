use crate::error::{Error, Result};
use crate::numerics::{normal_quantile, normal_sf, ChiBarMixture};
use crate::real::Real;

/// Null law attached to a statistic.
#[derive(Debug, Clone, PartialEq)]
pub enum NullDistribution<T: Real = f64> {
    /// Scalar Z_n compared with the standard normal upper tail.
    StandardNormal,
    /// Cone-constrained statistic with a chi-bar-squared law.
    ChiBar(ChiBarMixture<T>),
    /// Regular score statistic, central χ² with the given degrees of freedom.
    ChiSquare(u32),
}

impl<T: Real> NullDistribution<T> {
    pub fn label(&self) -> String {
        match self {
            NullDistribution::StandardNormal => "standard_normal".into(),
            NullDistribution::ChiBar(m) => {
                let parts: Vec<String> = m.components().map(|(w, df)| format!("{w}*chi2({df})")).collect();
                format!("chi_bar[{}]", parts.join(" + "))
            }
            NullDistribution::ChiSquare(df) => format!("chi2({df})"),
        }
    }
}

/// Outcome of a one-sided scalar test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneSidedDecision<T: Real = f64> {
    pub statistic: T,
    pub p_value: T,
    pub alpha: T,
    /// Φ⁻¹(1 − α). Its square is the (1 − α) quantile of ½χ²₀ + ½χ²₁.
    pub critical_value: T,
    pub reject: bool,
}

pub(crate) fn check_alpha<T: Real>(alpha: T) -> Result<()> {
    if !(alpha > T::zero() && alpha < T::lit(0.5)) {
        return Err(Error::domain("alpha", alpha.as_f64(), "0 < alpha < 0.5"));
    }
    Ok(())
}

/// Rejects when (0 ∨ Z)² exceeds the (1 − α) quantile of ½χ²₀ + ½χ²₁, which
/// for α < ½ is the same as Z > Φ⁻¹(1 − α). The reported p-value is 1 − Φ(Z).
pub fn one_sided_decision<T: Real>(z: T, alpha: T) -> Result<OneSidedDecision<T>> {
    check_alpha(alpha)?;
    if !z.is_finite() {
        return Err(Error::InvalidData(format!("statistic {z} is not finite")));
    }
    let critical_value = normal_quantile(T::one() - alpha)?;
    Ok(OneSidedDecision {
        statistic: z,
        p_value: normal_sf(z),
        alpha,
        critical_value,
        reject: z > critical_value,
    })
}

/// Finished test: statistic, null law, decision and fitted nuisance values.
#[derive(Debug, Clone, PartialEq)]
pub struct TestReport<T: Real = f64> {
    /// Short identifier of the test that produced the report.
    pub test: String,
    /// Z_n for scalar tests, T_n for cone-constrained ones.
    pub statistic: T,
    /// Component statistics: (w₁, w₂) or (t₁, t₂) for joint tests.
    pub components: Option<Vec<T>>,
    pub null_distribution: NullDistribution<T>,
    pub p_value: T,
    pub alpha: T,
    /// On the scale of `statistic`: reject iff `statistic > critical_value`.
    pub critical_value: T,
    pub reject: bool,
    pub nuisance_estimates: Vec<(String, T)>,
    pub n: usize,
    pub warnings: Vec<String>,
}

impl<T: Real> TestReport<T> {
    pub(crate) fn scalar(test: &str, z: T, alpha: T, nuisance_estimates: Vec<(String, T)>, n: usize) -> Result<Self> {
        let d = one_sided_decision(z, alpha)?;
        Ok(TestReport {
            test: test.to_string(),
            statistic: z,
            components: None,
            null_distribution: NullDistribution::StandardNormal,
            p_value: d.p_value,
            alpha,
            critical_value: d.critical_value,
            reject: d.reject,
            nuisance_estimates,
            n,
            warnings: Vec::new(),
        })
    }

    pub(crate) fn mixture(
        test: &str,
        t: T,
        components: Vec<T>,
        null: ChiBarMixture<T>,
        alpha: T,
        nuisance_estimates: Vec<(String, T)>,
        n: usize,
    ) -> Result<Self> {
        check_alpha(alpha)?;
        let critical_value = null.quantile(T::one() - alpha)?;
        let p_value = null.p_value(t)?;
        Ok(TestReport {
            test: test.to_string(),
            statistic: t,
            components: Some(components),
            null_distribution: NullDistribution::ChiBar(null),
            p_value,
            alpha,
            critical_value,
            reject: t > critical_value,
            nuisance_estimates,
            n,
            warnings: Vec::new(),
        })
    }

    /// Looks up a nuisance estimate by name.
    pub fn nuisance(&self, name: &str) -> Option<T> {
        self.nuisance_estimates.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    /// True when the three decision representations agree: `reject`,
    /// `p_value <= alpha` and `statistic > critical_value`. Statistics within
    /// `slack` of the critical value are accepted either way.
    pub fn decision_is_consistent(&self, slack: T) -> bool {
        let by_stat = self.statistic > self.critical_value;
        let by_p = self.p_value <= self.alpha;
        if (self.statistic - self.critical_value).abs() <= slack {
            return true;
        }
        self.reject == by_stat && self.reject == by_p
    }
}
