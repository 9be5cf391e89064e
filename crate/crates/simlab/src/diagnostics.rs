use calpha_core::calpha::z_statistic;
use calpha_core::data::ObservationSet;
use calpha_core::mle::{fit_exponential_ph, fit_poisson, fit_weibull_ph};
use calpha_core::models::{
    exp_frailty_decomposition, poisson_second_factorial_decomposition, poisson_second_moment_decomposition,
    weibull_frailty_decomposition,
};
use calpha_core::numerics::{normal_quantile, normal_sf};
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::experiment::TestChoice;
use crate::generate::generate_replication;
use crate::rng::{replication_rng, Stream};
use crate::spec::{GeneratorSpec, ModelKind};

/// Power of the one-sided test against ξ_n = δ₁n^{-1/4}:
/// 1 − Φ(Φ⁻¹(1 − α) − δ₁²√J_resid).
pub fn power_prediction(delta1: f64, j_resid: f64, alpha: f64) -> Result<f64> {
    if !(j_resid > 0.0) || !j_resid.is_finite() {
        return Err(Error::InvalidSpec(format!(
            "residual information must be positive, got {j_resid}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) || !delta1.is_finite() {
        return Err(Error::InvalidSpec(format!(
            "need alpha in (0, 1) and finite delta, got {alpha}, {delta1}"
        )));
    }
    let crit = normal_quantile(1.0 - alpha)?;
    Ok(normal_sf(crit - delta1 * delta1 * j_resid.sqrt()))
}

/// The heterogeneity magnitude δ·n^{-1/4} of the local alternative.
pub fn local_xi(delta: f64, n: usize) -> f64 {
    delta * (n as f64).powf(-0.25)
}

/// LAN remainder at one sample size.
#[derive(Debug, Clone, PartialEq)]
pub struct LanSummary {
    pub n: usize,
    pub xi_n: f64,
    /// Median over replications of |Λ_n − (tS_n − ½t²J)|.
    pub median_abs_residual: f64,
    /// Sample variance of S_n over replications.
    pub s_variance: f64,
    /// Monte Carlo standard error of `s_variance`.
    pub s_variance_se: f64,
    /// J_ξξ = (λ₀ + 2λ₀²)/4.
    pub j_xx: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Exact log-likelihood ratio of the two-point mixture
/// ½Poisson(λ₀e^{ξ}) + ½Poisson(λ₀e^{−ξ}) against Poisson(λ₀).
pub(crate) fn rademacher_llr(x: &[u64], lambda0: f64, xi: f64) -> f64 {
    let cu = lambda0 * xi.exp_m1();
    let cd = lambda0 * (-xi).exp_m1();
    x.iter()
        .map(|&k| {
            let k = k as f64;
            let a = k * xi - cu;
            let b = -k * xi - cd;
            let m = a.max(b);
            m + (0.5 * ((a - m).exp() + (b - m).exp())).ln()
        })
        .sum()
}

/// Checks the quadratic expansion of the log-likelihood ratio for the
/// intercept-only Poisson model with Rademacher heterogeneity, under the null,
/// at ξ_n = δ₁n^{-1/4} and t = δ₁².
pub fn lan_diagnostic(
    lambda0: f64,
    delta1: f64,
    ns: &[usize],
    reps: usize,
    master_seed: u64,
) -> Result<Vec<LanSummary>> {
    if !(lambda0 > 0.0) || reps < 2 {
        return Err(Error::InvalidSpec(format!(
            "need lambda0 > 0 and reps >= 2, got {lambda0}, {reps}"
        )));
    }
    let j = (lambda0 + 2.0 * lambda0 * lambda0) / 4.0;
    let t = delta1 * delta1;
    let pois = Poisson::new(lambda0).map_err(|e| Error::InvalidSpec(e.to_string()))?;
    ns.iter()
        .enumerate()
        .map(|(k, &n)| {
            let xi = local_xi(delta1, n);
            let rows: Vec<(f64, f64)> = (0..reps as u64)
                .into_par_iter()
                .map(|rep| {
                    let mut rng = replication_rng(master_seed, ((k as u64) << 40) | rep, Stream::Outcomes);
                    let x: Vec<u64> = (0..n).map(|_| pois.sample(&mut rng) as u64).collect();
                    let s = x
                        .iter()
                        .map(|&v| {
                            let r = v as f64 - lambda0;
                            0.5 * (r * r - lambda0)
                        })
                        .sum::<f64>()
                        / (n as f64).sqrt();
                    let lambda = rademacher_llr(&x, lambda0, xi);
                    ((lambda - (t * s - 0.5 * t * t * j)).abs(), s)
                })
                .collect();
            let s: Vec<f64> = rows.iter().map(|r| r.1).collect();
            let r = reps as f64;
            let mean = s.iter().sum::<f64>() / r;
            let m2 = s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / r;
            let m4 = s.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / r;
            Ok(LanSummary {
                n,
                xi_n: xi,
                median_abs_residual: median(rows.iter().map(|r| r.0).collect()),
                s_variance: m2 * r / (r - 1.0),
                s_variance_se: ((m4 - m2 * m2) / r).sqrt(),
                j_xx: j,
            })
        })
        .collect()
}

/// |Z_n(θ̂) − Z_n(θ₀)| for one dataset, both evaluated through the residual
/// score at the given nuisance value. For Weibull the last entry of each
/// parameter vector is the shape.
pub fn plugin_discrepancy(data: &ObservationSet, test: TestChoice, theta_hat: &[f64], theta0: &[f64]) -> Result<f64> {
    let z = |theta: &[f64]| -> Result<f64> {
        let sd = match (test, data) {
            (TestChoice::PoissonSecondMoment, ObservationSet::Counts(d)) => {
                poisson_second_moment_decomposition(d, theta)?
            }
            (TestChoice::PoissonSecondFactorial, ObservationSet::Counts(d)) => {
                poisson_second_factorial_decomposition(d, theta)?
            }
            (TestChoice::CoxExp, ObservationSet::Durations(d)) => exp_frailty_decomposition(d, theta)?,
            (TestChoice::CoxWeibull(_), ObservationSet::Durations(d)) => {
                let (beta, shape) = theta.split_at(theta.len() - 1);
                weibull_frailty_decomposition(d, beta, shape[0])?
            }
            _ => {
                return Err(Error::Mismatch {
                    test: test.name(),
                    model: data.kind(),
                })
            }
        };
        Ok(z_statistic(&sd)?)
    };
    Ok((z(theta_hat)? - z(theta0)?).abs())
}

/// Plug-in discrepancy at one sample size.
#[derive(Debug, Clone, PartialEq)]
pub struct PluginSummary {
    pub n: usize,
    pub median_abs_discrepancy: f64,
    pub max_abs_discrepancy: f64,
    pub completed: usize,
    pub excluded: usize,
}

/// Median |Z_n(θ̂) − Z_n(θ₀)| per sample size for null data from `spec`.
pub fn plugin_diagnostic(
    spec: &GeneratorSpec,
    test: TestChoice,
    ns: &[usize],
    reps: usize,
    master_seed: u64,
) -> Result<Vec<PluginSummary>> {
    if test.model() != spec.model || spec.model == ModelKind::GaussianPanel {
        return Err(Error::Mismatch {
            test: test.name(),
            model: spec.model.name(),
        });
    }
    let mut theta0 = spec.beta()?;
    if spec.model == ModelKind::WeibullPh {
        theta0.push(spec.require("alpha")?);
    }
    ns.iter()
        .enumerate()
        .map(|(k, &n)| {
            let spec_n = GeneratorSpec { n, ..spec.clone() };
            spec_n.validate()?;
            let out: Vec<Option<f64>> = (0..reps as u64)
                .into_par_iter()
                .map(|rep| {
                    let g = generate_replication(&spec_n, master_seed, ((k as u64) << 40) | rep).ok()?;
                    let theta_hat = match &g.data {
                        ObservationSet::Counts(d) => fit_poisson(d).ok()?.estimates,
                        ObservationSet::Durations(d) if spec.model == ModelKind::WeibullPh => {
                            fit_weibull_ph(d).ok()?.estimates
                        }
                        ObservationSet::Durations(d) => fit_exponential_ph(d).ok()?.estimates,
                        ObservationSet::Panel(_) => return None,
                    };
                    plugin_discrepancy(&g.data, test, &theta_hat, &theta0).ok()
                })
                .collect();
            let vals: Vec<f64> = out.iter().flatten().copied().collect();
            if vals.is_empty() {
                return Err(Error::InvalidSpec(format!("no replication completed at n = {n}")));
            }
            Ok(PluginSummary {
                n,
                median_abs_discrepancy: median(vals.clone()),
                max_abs_discrepancy: vals.iter().copied().fold(0.0, f64::max),
                completed: vals.len(),
                excluded: reps - vals.len(),
            })
        })
        .collect()
}
