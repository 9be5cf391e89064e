use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use calpha_core::calpha::{NullDistribution, TestReport};
use calpha_core::data::ObservationSet;
use calpha_core::mle::{fit_exponential_ph, fit_gaussian_panel, fit_poisson, fit_weibull_ph, FitResult};
use calpha_core::models::{
    cox_exp_frailty, cox_weibull_frailty_with, gaussian_panel_joint, poisson_second_factorial, poisson_second_moment,
    WeibullVariance,
};
use calpha_core::numerics::{normal_cdf, normal_quantile, ChiBarMixture};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::generate::generate_replication;
use crate::rng::SEED_RULE;
use crate::spec::{GeneratorSpec, ModelKind};

pub const MIN_REPS: usize = 100;

/// Which test a simulation runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestChoice {
    PoissonSecondMoment,
    PoissonSecondFactorial,
    CoxExp,
    CoxWeibull(WeibullVariance),
    GaussianPanel,
}

impl TestChoice {
    pub const ALL: [TestChoice; 6] = [
        TestChoice::PoissonSecondMoment,
        TestChoice::PoissonSecondFactorial,
        TestChoice::CoxExp,
        TestChoice::CoxWeibull(WeibullVariance::Exact),
        TestChoice::CoxWeibull(WeibullVariance::Published),
        TestChoice::GaussianPanel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestChoice::PoissonSecondMoment => "poisson-secmom",
            TestChoice::PoissonSecondFactorial => "poisson-factorial",
            TestChoice::CoxExp => "cox-exp",
            TestChoice::CoxWeibull(WeibullVariance::Exact) => "cox-weibull",
            TestChoice::CoxWeibull(WeibullVariance::Published) => "cox-weibull-published",
            TestChoice::GaussianPanel => "gaussian-panel",
        }
    }

    pub fn model(self) -> ModelKind {
        match self {
            TestChoice::PoissonSecondMoment | TestChoice::PoissonSecondFactorial => ModelKind::Poisson,
            TestChoice::CoxExp => ModelKind::ExponentialPh,
            TestChoice::CoxWeibull(_) => ModelKind::WeibullPh,
            TestChoice::GaussianPanel => ModelKind::GaussianPanel,
        }
    }

    pub fn null_distribution(self) -> NullDistribution {
        match self {
            TestChoice::GaussianPanel => NullDistribution::ChiBar(ChiBarMixture::binomial(2).expect("q = 2")),
            _ => NullDistribution::StandardNormal,
        }
    }

    /// Fits the null model and runs the test.
    pub fn run(self, data: &ObservationSet, alpha: f64) -> Result<TestReport> {
        Ok(self.fit_and_run(data, alpha)?.1)
    }

    /// Like [`TestChoice::run`], also returning the restricted fit.
    pub fn fit_and_run(self, data: &ObservationSet, alpha: f64) -> Result<(FitResult, TestReport)> {
        let mismatch = || Error::Mismatch {
            test: self.name(),
            model: data.kind(),
        };
        Ok(match (self, data) {
            (TestChoice::PoissonSecondMoment, ObservationSet::Counts(d)) => {
                let fit = fit_poisson(d)?;
                let report = poisson_second_moment(d, &fit.estimates, alpha)?;
                (fit, report)
            }
            (TestChoice::PoissonSecondFactorial, ObservationSet::Counts(d)) => {
                let fit = fit_poisson(d)?;
                let report = poisson_second_factorial(d, &fit.estimates, alpha)?;
                (fit, report)
            }
            (TestChoice::CoxExp, ObservationSet::Durations(d)) => {
                let fit = fit_exponential_ph(d)?;
                let report = cox_exp_frailty(d, &fit.estimates, alpha)?;
                (fit, report)
            }
            (TestChoice::CoxWeibull(variance), ObservationSet::Durations(d)) => {
                let fit = fit_weibull_ph(d)?;
                let shape = fit.get("alpha").expect("weibull fit has alpha");
                let report = cox_weibull_frailty_with(d, &fit.beta(), shape, alpha, variance)?;
                (fit, report)
            }
            (TestChoice::GaussianPanel, ObservationSet::Panel(d)) => {
                let fit = fit_gaussian_panel(d)?;
                let report = gaussian_panel_joint(d, fit.estimates[0], fit.estimates[1], alpha)?;
                (fit, report)
            }
            _ => return Err(mismatch()),
        })
    }
}

impl FromStr for TestChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TestChoice::ALL.into_iter().find(|t| t.name() == s).ok_or_else(|| {
            let names: Vec<&str> = TestChoice::ALL.iter().map(|t| t.name()).collect();
            Error::InvalidSpec(format!("unknown test '{s}' (expected one of: {})", names.join(", ")))
        })
    }
}

impl fmt::Display for TestChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Sample mean, unbiased variance and moment skewness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
}

impl Moments {
    pub fn of(x: &[f64]) -> Moments {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let (mut m2, mut m3) = (0.0, 0.0);
        for &v in x {
            let d = v - mean;
            m2 += d * d;
            m3 += d * d * d;
        }
        Moments {
            mean,
            variance: m2 / (n - 1.0),
            skewness: (m3 / n) / (m2 / n).powf(1.5),
        }
    }
}

/// Aggregate of one size or power experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub test: String,
    pub spec: GeneratorSpec,
    pub alpha: f64,
    pub reps: usize,
    pub completed: usize,
    pub excluded: usize,
    /// Exclusion counts by reason code, sorted by code.
    pub exclusion_reasons: Vec<(String, usize)>,
    pub rejections: usize,
    pub rejection_rate: f64,
    /// Binomial standard error √(p(1 − p)/completed).
    pub rejection_se: f64,
    pub moments: Moments,
    /// Kolmogorov distance between the statistic sample and the null law.
    pub ks_distance_to_null: f64,
    /// Share of exact zeros, for mixture-valued statistics.
    pub mass_at_zero: Option<f64>,
    pub fraction_nonpositive: f64,
    pub empirical_quantile_95: f64,
    pub null_quantile_95: f64,
    pub null_distribution: String,
    /// Heterogeneity draws rejected by the generator, over all replications.
    pub resampled_draws: usize,
    pub master_seed: u64,
    pub per_rep_seed_rule: String,
    /// Statistic values of completed replications, in replication order.
    pub statistics: Vec<f64>,
}

enum RepOutcome {
    Done {
        statistic: f64,
        reject: bool,
        resampled: usize,
    },
    Excluded {
        reason: &'static str,
        resampled: usize,
    },
}

fn reason_code(e: &Error) -> &'static str {
    match e {
        Error::Core(c) => match c {
            calpha_core::Error::NotConverged { .. } => "not_converged",
            calpha_core::Error::Singular(_) => "singular",
            calpha_core::Error::InvalidData(_) => "invalid_data",
            calpha_core::Error::NotAtMle { .. } => "not_at_mle",
            calpha_core::Error::Domain { .. } => "domain",
            calpha_core::Error::Dimension(_) => "dimension",
            calpha_core::Error::Unsupported(_) => "unsupported",
        },
        Error::ResampleExhausted(_) => "resample_exhausted",
        _ => "other",
    }
}

fn run_rep(spec: &GeneratorSpec, test: TestChoice, alpha: f64, seed: u64, rep: u64) -> RepOutcome {
    let generated = match generate_replication(spec, seed, rep) {
        Ok(g) => g,
        Err(e) => {
            return RepOutcome::Excluded {
                reason: reason_code(&e),
                resampled: 0,
            }
        }
    };
    match test.run(&generated.data, alpha) {
        Ok(r) if r.statistic.is_finite() => RepOutcome::Done {
            statistic: r.statistic,
            reject: r.reject,
            resampled: generated.resampled,
        },
        Ok(_) => RepOutcome::Excluded {
            reason: "nonfinite_statistic",
            resampled: generated.resampled,
        },
        Err(e) => RepOutcome::Excluded {
            reason: reason_code(&e),
            resampled: generated.resampled,
        },
    }
}

fn null_cdf(null: &NullDistribution, x: f64) -> f64 {
    match null {
        NullDistribution::StandardNormal => normal_cdf(x),
        NullDistribution::ChiBar(m) => m.cdf(x).unwrap_or(f64::NAN),
        NullDistribution::ChiSquare(df) => calpha_core::numerics::chisq_cdf(x, *df).unwrap_or(f64::NAN),
    }
}

fn null_cdf_left(null: &NullDistribution, x: f64) -> f64 {
    match null {
        NullDistribution::StandardNormal => normal_cdf(x),
        _ if x <= 0.0 => 0.0,
        _ => null_cdf(null, x),
    }
}

/// sup |F_n − F|, exact at the sample points, allowing an atom of F at 0.
pub(crate) fn ks_distance(sorted: &[f64], null: &NullDistribution) -> f64 {
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let upper = (i + 1) as f64 / n - null_cdf(null, x);
        let lower = null_cdf_left(null, x) - i as f64 / n;
        d.max(upper).max(lower)
    })
}

/// Linear-interpolation sample quantile of sorted data.
pub(crate) fn sample_quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn null_quantile(null: &NullDistribution, p: f64) -> Result<f64> {
    Ok(match null {
        NullDistribution::StandardNormal => normal_quantile(p)?,
        NullDistribution::ChiBar(m) => m.quantile(p)?,
        NullDistribution::ChiSquare(df) => calpha_core::numerics::chisq_quantile(p, *df)?,
    })
}

/// Runs `reps` replications of generate → fit → test and aggregates them.
/// Replications that fail to fit are excluded and counted by reason.
pub fn size_power_experiment(
    spec: &GeneratorSpec,
    test: TestChoice,
    alpha: f64,
    reps: usize,
    master_seed: u64,
) -> Result<SimulationReport> {
    spec.validate()?;
    if test.model() != spec.model {
        return Err(Error::Mismatch {
            test: test.name(),
            model: spec.model.name(),
        });
    }
    if reps < MIN_REPS {
        return Err(Error::InvalidSpec(format!(
            "need at least {MIN_REPS} replications, got {reps}"
        )));
    }
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::InvalidSpec(format!("alpha must lie in (0, 0.5), got {alpha}")));
    }

    let outcomes: Vec<RepOutcome> = (0..reps as u64)
        .into_par_iter()
        .map(|rep| run_rep(spec, test, alpha, master_seed, rep))
        .collect();

    let mut statistics = Vec::with_capacity(reps);
    let mut rejections = 0;
    let mut resampled_draws = 0;
    let mut reasons: BTreeMap<&'static str, usize> = BTreeMap::new();
    for o in &outcomes {
        match *o {
            RepOutcome::Done {
                statistic,
                reject,
                resampled,
            } => {
                statistics.push(statistic);
                rejections += usize::from(reject);
                resampled_draws += resampled;
            }
            RepOutcome::Excluded { reason, resampled } => {
                *reasons.entry(reason).or_default() += 1;
                resampled_draws += resampled;
            }
        }
    }
    let completed = statistics.len();
    let excluded = reps - completed;
    if completed < 2 {
        return Err(Error::TooFewCompleted {
            completed,
            reps,
            reasons: reasons.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        });
    }

    let null = test.null_distribution();
    let mut sorted = statistics.clone();
    sorted.sort_by(f64::total_cmp);
    let c = completed as f64;
    let rate = rejections as f64 / c;
    let mass_at_zero = match null {
        NullDistribution::ChiBar(_) => Some(statistics.iter().filter(|&&t| t == 0.0).count() as f64 / c),
        _ => None,
    };
    Ok(SimulationReport {
        test: test.name().to_string(),
        spec: spec.clone(),
        alpha,
        reps,
        completed,
        excluded,
        exclusion_reasons: reasons.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        rejections,
        rejection_rate: rate,
        rejection_se: (rate * (1.0 - rate) / c).sqrt(),
        moments: Moments::of(&statistics),
        ks_distance_to_null: ks_distance(&sorted, &null),
        mass_at_zero,
        fraction_nonpositive: statistics.iter().filter(|&&t| t <= 0.0).count() as f64 / c,
        empirical_quantile_95: sample_quantile(&sorted, 0.95),
        null_quantile_95: null_quantile(&null, 0.95)?,
        null_distribution: null.label(),
        resampled_draws,
        master_seed,
        per_rep_seed_rule: SEED_RULE.to_string(),
        statistics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_against_exact_quantiles_is_small() {
        let n = 1000;
        let sample: Vec<f64> = (0..n)
            .map(|i| normal_quantile((i as f64 + 0.5) / n as f64).unwrap())
            .collect();
        let d = ks_distance(&sample, &NullDistribution::StandardNormal);
        assert!((d - 0.5 / n as f64).abs() < 1e-9);
    }

    #[test]
    fn ks_handles_the_atom() {
        let null = TestChoice::GaussianPanel.null_distribution();
        // a quarter zeros, the rest far in the tail: distance ≈ 0.75
        let mut s = vec![0.0; 25];
        s.extend(std::iter::repeat(100.0).take(75));
        let d = ks_distance(&s, &null);
        assert!((d - 0.75).abs() < 1e-6, "{d}");
        // exactly a quarter zeros and nothing else wrong near zero
        let zeros_only = vec![0.0; 4];
        assert!((ks_distance(&zeros_only, &null) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn quantile_interpolates() {
        let s: Vec<f64> = (0..=100).map(f64::from).collect();
        assert_eq!(sample_quantile(&s, 0.95), 95.0);
        assert_eq!(sample_quantile(&[1.0, 2.0], 0.5), 1.5);
    }

    #[test]
    fn mismatched_test_rejected() {
        let spec = GeneratorSpec::poisson(2.0, 50);
        assert!(matches!(
            size_power_experiment(&spec, TestChoice::CoxExp, 0.05, 100, 1),
            Err(Error::Mismatch { .. })
        ));
        assert!(size_power_experiment(&spec, TestChoice::PoissonSecondMoment, 0.05, 10, 1).is_err());
    }

    #[test]
    fn names_parse() {
        for t in TestChoice::ALL {
            assert_eq!(t.name().parse::<TestChoice>().unwrap(), t);
        }
    }
}
