use calpha_core::data::{CountData, DurationData, ObservationSet, PanelData};
use calpha_core::numerics::Matrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::{replication_rng, Stream};
use crate::spec::{CovariateScheme, GeneratorSpec, HeterogeneityForm, ModelKind, UDist};

const MAX_RESAMPLES: usize = 1000;

/// One simulated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub data: ObservationSet,
    /// Individual parameters actually used: λ_i for counts, hazard
    /// multipliers for durations, μ_i for panels.
    pub individual: Vec<f64>,
    /// Heterogeneity draws rejected because they made λ_i ≤ 0.
    pub resampled: usize,
}

fn draw_u(dist: UDist, rng: &mut ChaCha8Rng) -> f64 {
    match dist {
        UDist::Gaussian => StandardNormal.sample(rng),
        UDist::Rademacher => {
            if rng.random_bool(0.5) {
                1.0
            } else {
                -1.0
            }
        }
        UDist::CenteredExponential => {
            let e: f64 = Exp1.sample(rng);
            e - 1.0
        }
    }
}

fn perturb(form: HeterogeneityForm, base: f64, xi: f64, u: f64) -> f64 {
    match form {
        HeterogeneityForm::MultiplicativeExp => base * (xi * u).exp(),
        HeterogeneityForm::Additive => base + xi * u,
        HeterogeneityForm::SqrtScaled => base * (1.0 + xi * u / base.sqrt()),
    }
}

/// λ_i for every base value, resampling U while λ_i ≤ 0.
fn individual_parameters(spec: &GeneratorSpec, base: &[f64], rng: &mut ChaCha8Rng) -> Result<(Vec<f64>, usize)> {
    let mut resampled = 0;
    let mut out = Vec::with_capacity(base.len());
    for &b in base {
        let mut attempts = 0;
        loop {
            let v = perturb(spec.form, b, spec.xi, draw_u(spec.u_dist, rng));
            if v > 0.0 && v.is_finite() {
                out.push(v);
                break;
            }
            attempts += 1;
            resampled += 1;
            if attempts >= MAX_RESAMPLES {
                return Err(Error::ResampleExhausted(MAX_RESAMPLES));
            }
        }
    }
    Ok((out, resampled))
}

fn covariate_rows(scheme: CovariateScheme, n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    match scheme {
        CovariateScheme::None => Vec::new(),
        CovariateScheme::Bernoulli => (0..n)
            .map(|_| vec![if rng.random_bool(0.5) { 1.0 } else { 0.0 }])
            .collect(),
        CovariateScheme::Uniform => (0..n).map(|_| vec![rng.random::<f64>()]).collect(),
    }
}

/// Draws replication `replication` of `spec` under `master_seed`.
pub fn generate_replication(spec: &GeneratorSpec, master_seed: u64, replication: u64) -> Result<Generated> {
    spec.validate()?;
    let mut cov_rng = replication_rng(master_seed, replication, Stream::Covariates);
    let mut het_rng = replication_rng(master_seed, replication, Stream::Heterogeneity);
    let mut out_rng = replication_rng(master_seed, replication, Stream::Outcomes);
    let n = spec.n;

    if spec.model == ModelKind::GaussianPanel {
        let mu = spec.require("mu")?;
        let sigma2 = spec.require("sigma2")?;
        let mut het2_rng = replication_rng(master_seed, replication, Stream::Heterogeneity2);
        let t = spec.periods;
        let mut y = Matrix::zeros(n, t);
        let mut means = Vec::with_capacity(n);
        for i in 0..n {
            let mu_i = mu + spec.xi * draw_u(spec.u_dist, &mut het_rng);
            let sd_i = (sigma2 * (spec.xi2 * draw_u(spec.u_dist, &mut het2_rng)).exp()).sqrt();
            for j in 0..t {
                let e: f64 = StandardNormal.sample(&mut out_rng);
                y[(i, j)] = mu_i + sd_i * e;
            }
            means.push(mu_i);
        }
        return Ok(Generated {
            data: ObservationSet::Panel(PanelData::new(y)?),
            individual: means,
            resampled: 0,
        });
    }

    let beta = spec.beta()?;
    let cov = covariate_rows(spec.covariates, n, &mut cov_rng);
    let base: Vec<f64> = (0..n)
        .map(|i| {
            let mut eta = beta[0];
            if let Some(row) = cov.get(i) {
                eta += beta[1] * row[0];
            }
            eta.exp()
        })
        .collect();
    let (lambda, resampled) = individual_parameters(spec, &base, &mut het_rng)?;

    let data = match spec.model {
        ModelKind::Poisson => {
            let y = lambda
                .iter()
                .map(|&l| {
                    let d = Poisson::new(l).map_err(|e| Error::InvalidSpec(format!("Poisson mean {l}: {e}")))?;
                    let v: f64 = d.sample(&mut out_rng);
                    Ok(v as u64)
                })
                .collect::<Result<Vec<u64>>>()?;
            ObservationSet::Counts(CountData::from_covariates(y, &cov)?)
        }
        ModelKind::ExponentialPh | ModelKind::WeibullPh => {
            let shape = if spec.model == ModelKind::WeibullPh {
                spec.require("alpha")?
            } else {
                1.0
            };
            let t = lambda
                .iter()
                .map(|&h| {
                    let e: f64 = Exp1.sample(&mut out_rng);
                    // integrated hazard h t^α is Exp(1); guard the (measure
                    // zero) e = 0 draw so durations stay positive
                    (e.max(f64::MIN_POSITIVE) / h).powf(shape.recip())
                })
                .collect();
            ObservationSet::Durations(DurationData::from_covariates(t, &cov)?)
        }
        ModelKind::GaussianPanel => unreachable!(),
    };
    Ok(Generated {
        data,
        individual: lambda,
        resampled,
    })
}

/// Draws a single dataset from `seed` (replication 0).
pub fn generate(spec: &GeneratorSpec, seed: u64) -> Result<Generated> {
    generate_replication(spec, seed, 0)
}
