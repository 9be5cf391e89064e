//! Restricted (null-model) maximum likelihood.
//!
//! Poisson, exponential and Weibull proportional-hazards fits use Newton's
//! method with analytic Hessians and step-halving; all three log-likelihoods
//! are concave, so ascent steps always exist. Gaussian fits are closed form.

use crate::data::{CountData, DurationData, PanelData, RegressionData};
use crate::error::{Error, Result};
use crate::numerics::{dot, ln_gamma, Matrix, SymMatrix};
use crate::real::{compensated_sum, Real};

pub const MAX_ITERATIONS: usize = 100;
pub const MAX_HALVINGS: usize = 30;

/// Result of a converged fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<T: Real = f64> {
    pub names: Vec<String>,
    pub estimates: Vec<T>,
    pub iterations: usize,
    pub gradient_norm: T,
    pub tolerance: T,
    pub converged: bool,
    pub loglik: T,
    /// Log-likelihood after every accepted step, starting from the initial
    /// value. Nondecreasing.
    pub loglik_trace: Vec<T>,
}

impl<T: Real> FitResult<T> {
    pub fn get(&self, name: &str) -> Option<T> {
        self.names.iter().position(|n| n == name).map(|i| self.estimates[i])
    }

    pub fn named(&self) -> Vec<(String, T)> {
        self.names.iter().cloned().zip(self.estimates.iter().copied()).collect()
    }

    /// Regression coefficients, i.e. every estimate named `beta*`.
    pub fn beta(&self) -> Vec<T> {
        self.names
            .iter()
            .zip(&self.estimates)
            .filter(|(n, _)| n.starts_with("beta"))
            .map(|(_, &v)| v)
            .collect()
    }
}

pub(crate) fn beta_names(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("beta{j}")).collect()
}

fn norm<T: Real>(v: &[T]) -> T {
    dot(v, v).sqrt()
}

fn base_tol<T: Real>() -> T {
    T::solver_tol() * T::lit(100.0)
}

/// Gradient tolerance for Poisson fits, 1e-10·(1 + ‖y‖₁).
pub fn poisson_tolerance<T: Real>(d: &CountData<T>) -> T {
    let y1: f64 = d.y().iter().map(|&v| v as f64).sum();
    base_tol::<T>() * (T::one() + T::lit(y1))
}

/// Gradient tolerance for duration fits, 1e-10·(1 + n/1000). The factor
/// keeps the tolerance above the rounding floor of an n-term sum.
pub fn duration_tolerance<T: Real>(d: &DurationData<T>) -> T {
    base_tol::<T>() * (T::one() + T::from_count(d.n()) / T::lit(1000.0))
}

fn column_sums<T: Real>(x: &Matrix<T>, w: &[T]) -> Vec<T> {
    (0..x.ncols())
        .map(|j| compensated_sum((0..x.nrows()).map(|i| w[i] * x[(i, j)])))
        .collect()
}

/// Σ_i w_i x_i x_iᵀ.
fn weighted_cross<T: Real>(x: &Matrix<T>, w: &[T]) -> Matrix<T> {
    let p = x.ncols();
    let mut out = Matrix::zeros(p, p);
    for a in 0..p {
        for b in 0..=a {
            let v = compensated_sum((0..x.nrows()).map(|i| w[i] * x[(i, a)] * x[(i, b)]));
            out[(a, b)] = v;
            out[(b, a)] = v;
        }
    }
    out
}

fn linear_predictor<T: Real>(x: &Matrix<T>, beta: &[T]) -> Vec<T> {
    x.rows_iter().map(|r| dot(r, beta)).collect()
}

/// Newton ascent with step-halving. `loglik` may return −∞ (or NaN) for
/// infeasible points; such candidates are halved away.
fn newton<T, L, D>(
    solver: &'static str,
    names: Vec<String>,
    init: Vec<T>,
    tol: T,
    loglik: L,
    derivs: D,
) -> Result<FitResult<T>>
where
    T: Real,
    L: Fn(&[T]) -> T,
    D: Fn(&[T]) -> Result<(Vec<T>, Matrix<T>)>,
{
    let mut theta = init;
    let mut ll = loglik(&theta);
    if !ll.is_finite() {
        return Err(Error::InvalidData(format!(
            "{solver}: log-likelihood not finite at the start"
        )));
    }
    let mut trace = vec![ll];
    let mut gnorm = T::infinity();
    for iter in 0..=MAX_ITERATIONS {
        let (grad, neg_hess) = derivs(&theta)?;
        gnorm = norm(&grad);
        if gnorm < tol {
            // One extra full step takes the gradient to the rounding floor;
            // kept only if it actually shrinks the gradient.
            if let Ok(direction) = SymMatrix::new(neg_hess).and_then(|h| h.solve(&grad)) {
                let cand: Vec<T> = theta.iter().zip(&direction).map(|(&a, &d)| a + d).collect();
                let cand_ll = loglik(&cand);
                if cand_ll.is_finite() {
                    if let Ok((g2, _)) = derivs(&cand) {
                        let n2 = norm(&g2);
                        if n2 < gnorm {
                            theta = cand;
                            gnorm = n2;
                            ll = ll.max(cand_ll);
                        }
                    }
                }
            }
            return Ok(FitResult {
                names,
                estimates: theta,
                iterations: iter,
                gradient_norm: gnorm,
                tolerance: tol,
                converged: true,
                loglik: ll,
                loglik_trace: trace,
            });
        }
        if iter == MAX_ITERATIONS {
            break;
        }
        let direction = SymMatrix::new(neg_hess)?.solve(&grad)?;
        // Near the optimum the gain of a Newton step falls below one ulp of
        // the log-likelihood, so equality up to rounding counts as ascent.
        let slack = T::epsilon() * T::lit(64.0) * (T::one() + ll.abs());
        let mut step = T::one();
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let cand: Vec<T> = theta.iter().zip(&direction).map(|(&a, &d)| a + step * d).collect();
            let cand_ll = loglik(&cand);
            if cand_ll.is_finite() && cand_ll >= ll - slack {
                theta = cand;
                ll = ll.max(cand_ll);
                accepted = true;
                break;
            }
            step *= T::lit(0.5);
        }
        if !accepted {
            return Err(Error::NotConverged {
                solver,
                iterations: iter,
                gradient_norm: gnorm.as_f64(),
            });
        }
        trace.push(ll);
    }
    Err(Error::NotConverged {
        solver,
        iterations: MAX_ITERATIONS,
        gradient_norm: gnorm.as_f64(),
    })
}

// ---------------------------------------------------------------- Poisson

/// Σ_i (y_i − e^{x_i′β}) x_i.
pub fn poisson_score<T: Real>(d: &CountData<T>, beta: &[T]) -> Result<Vec<T>> {
    check_len(beta, d.x().ncols())?;
    let resid: Vec<T> = linear_predictor(d.x(), beta)
        .into_iter()
        .enumerate()
        .map(|(i, eta)| d.y_real(i) - eta.exp())
        .collect();
    Ok(column_sums(d.x(), &resid))
}

pub fn poisson_loglik<T: Real>(d: &CountData<T>, beta: &[T]) -> T {
    let eta = linear_predictor(d.x(), beta);
    compensated_sum(eta.iter().enumerate().map(|(i, &e)| {
        let y = d.y_real(i);
        y * e - e.exp() - ln_gamma(y + T::one()).unwrap_or(T::zero())
    }))
}

fn check_len<T>(beta: &[T], p: usize) -> Result<()> {
    if beta.len() != p {
        return Err(Error::Dimension(format!(
            "{} coefficients for a design with {p} columns",
            beta.len()
        )));
    }
    Ok(())
}

/// Poisson regression MLE.
pub fn fit_poisson<T: Real>(d: &CountData<T>) -> Result<FitResult<T>> {
    let n = d.n();
    let total: f64 = d.y().iter().map(|&v| v as f64).sum();
    if total == 0.0 {
        return Err(Error::InvalidData(
            "all counts are zero; the Poisson MLE does not exist".into(),
        ));
    }
    let p = d.x().ncols();
    let mut init = vec![T::zero(); p];
    init[0] = T::lit(total / n as f64).ln();
    let fit = newton(
        "poisson newton",
        beta_names(p),
        init,
        poisson_tolerance(d),
        |b| poisson_loglik(d, b),
        |b| {
            let lambda: Vec<T> = linear_predictor(d.x(), b).into_iter().map(T::exp).collect();
            let resid: Vec<T> = lambda.iter().enumerate().map(|(i, &l)| d.y_real(i) - l).collect();
            Ok((column_sums(d.x(), &resid), weighted_cross(d.x(), &lambda)))
        },
    )?;
    // A coefficient running off to infinity shows up as fitted means
    // collapsing to zero while the gradient shrinks geometrically.
    let min_mean = linear_predictor(d.x(), &fit.estimates)
        .into_iter()
        .map(T::exp)
        .fold(T::infinity(), T::min);
    if min_mean < T::lit(1e-9) {
        return Err(Error::NotConverged {
            solver: "poisson newton (diverging coefficients)",
            iterations: fit.iterations,
            gradient_norm: fit.gradient_norm.as_f64(),
        });
    }
    Ok(fit)
}

// ------------------------------------------------------------ exponential

/// Σ_i (1 − t_i e^{x_i′β}) x_i.
pub fn exponential_score<T: Real>(d: &DurationData<T>, beta: &[T]) -> Result<Vec<T>> {
    check_len(beta, d.x().ncols())?;
    let resid: Vec<T> = linear_predictor(d.x(), beta)
        .into_iter()
        .zip(d.t())
        .map(|(eta, &t)| T::one() - t * eta.exp())
        .collect();
    Ok(column_sums(d.x(), &resid))
}

pub fn exponential_loglik<T: Real>(d: &DurationData<T>, beta: &[T]) -> T {
    let eta = linear_predictor(d.x(), beta);
    compensated_sum(eta.iter().zip(d.t()).map(|(&e, &t)| e - t * e.exp()))
}

fn exponential_on<T: Real>(d: &DurationData<T>, durations: &[T], init: Vec<T>, tol: T) -> Result<FitResult<T>> {
    let x = d.x();
    newton(
        "exponential newton",
        beta_names(x.ncols()),
        init,
        tol,
        |b| {
            let eta = linear_predictor(x, b);
            compensated_sum(eta.iter().zip(durations).map(|(&e, &t)| e - t * e.exp()))
        },
        |b| {
            let q: Vec<T> = linear_predictor(x, b)
                .into_iter()
                .zip(durations)
                .map(|(e, &t)| t * e.exp())
                .collect();
            let resid: Vec<T> = q.iter().map(|&qi| T::one() - qi).collect();
            Ok((column_sums(x, &resid), weighted_cross(x, &q)))
        },
    )
}

fn exponential_init<T: Real>(n: usize, p: usize, durations: &[T]) -> Vec<T> {
    let mut init = vec![T::zero(); p];
    let total = compensated_sum(durations.iter().copied());
    init[0] = (T::from_count(n) / total).ln();
    init
}

/// Exponential proportional-hazards MLE (hazard e^{x′β}).
pub fn fit_exponential_ph<T: Real>(d: &DurationData<T>) -> Result<FitResult<T>> {
    let init = exponential_init(d.n(), d.x().ncols(), d.t());
    exponential_on(d, d.t(), init, duration_tolerance(d))
}

// ---------------------------------------------------------------- Weibull

/// Joint score (∂β, ∂α) of the Weibull PH log-likelihood with hazard
/// α t^{α−1} e^{x′β}.
pub fn weibull_score<T: Real>(d: &DurationData<T>, beta: &[T], alpha: T) -> Result<Vec<T>> {
    check_len(beta, d.x().ncols())?;
    if !(alpha > T::zero()) {
        return Err(Error::domain("weibull_score", alpha.as_f64(), "alpha > 0"));
    }
    let (g, _) = weibull_derivs(d, beta, alpha);
    Ok(g)
}

pub fn weibull_loglik<T: Real>(d: &DurationData<T>, beta: &[T], alpha: T) -> T {
    if !(alpha > T::zero()) {
        return T::neg_infinity();
    }
    let la = alpha.ln();
    let eta = linear_predictor(d.x(), beta);
    compensated_sum(eta.iter().zip(d.t()).map(|(&e, &t)| {
        let lt = t.ln();
        la + (alpha - T::one()) * lt + e - (alpha * lt + e).exp()
    }))
}

fn weibull_derivs<T: Real>(d: &DurationData<T>, beta: &[T], alpha: T) -> (Vec<T>, Matrix<T>) {
    let x = d.x();
    let p = x.ncols();
    let n = d.n();
    let lt: Vec<T> = d.t().iter().map(|t| t.ln()).collect();
    let q: Vec<T> = linear_predictor(x, beta)
        .into_iter()
        .zip(&lt)
        .map(|(e, &l)| (alpha * l + e).exp())
        .collect();
    let resid: Vec<T> = q.iter().map(|&qi| T::one() - qi).collect();
    let mut grad = column_sums(x, &resid);
    let inv_a = alpha.recip();
    grad.push(compensated_sum((0..n).map(|i| inv_a + lt[i] * resid[i])));

    let mut h = Matrix::zeros(p + 1, p + 1);
    let xqx = weighted_cross(x, &q);
    for a in 0..p {
        for b in 0..p {
            h[(a, b)] = xqx[(a, b)];
        }
    }
    let qlt: Vec<T> = (0..n).map(|i| q[i] * lt[i]).collect();
    let cross = column_sums(x, &qlt);
    for a in 0..p {
        h[(a, p)] = cross[a];
        h[(p, a)] = cross[a];
    }
    h[(p, p)] = compensated_sum((0..n).map(|i| inv_a * inv_a + q[i] * lt[i] * lt[i]));
    (grad, h)
}

/// Weibull proportional-hazards MLE, returning `beta0..`, `alpha`.
pub fn fit_weibull_ph<T: Real>(d: &DurationData<T>) -> Result<FitResult<T>> {
    let t0 = d.t()[0];
    if d.t().iter().all(|&t| t == t0) {
        return Err(Error::NotConverged {
            solver: "weibull (all durations equal, shape diverges)",
            iterations: 0,
            gradient_norm: f64::INFINITY,
        });
    }
    let p = d.x().ncols();
    let tol = duration_tolerance(d);
    let mut names = beta_names(p);
    names.push("alpha".into());

    // exponential start, α = 1
    let start = fit_exponential_ph(d)
        .map(|f| f.estimates)
        .unwrap_or_else(|_| exponential_init(d.n(), p, d.t()));
    let mut init = start;
    init.push(T::one());

    let run = |init: Vec<T>| {
        newton(
            "weibull newton",
            names.clone(),
            init,
            tol,
            |th| weibull_loglik(d, &th[..p], th[p]),
            |th| Ok(weibull_derivs(d, &th[..p], th[p])),
        )
    };
    let fit = match run(init) {
        Ok(f) => f,
        Err(e) if e.is_convergence_failure() || matches!(e, Error::Singular(_)) => {
            let (beta, alpha) = weibull_profile_search(d, tol)?;
            let mut th = beta;
            th.push(alpha);
            run(th)?
        }
        Err(e) => return Err(e),
    };
    if fit.estimates[p] > T::lit(1e6) {
        return Err(Error::NotConverged {
            solver: "weibull (shape diverges)",
            iterations: fit.iterations,
            gradient_norm: fit.gradient_norm.as_f64(),
        });
    }
    Ok(fit)
}

/// Golden-section search on the concave profile log-likelihood in ln α,
/// with the exact exponential-PH solve for β̂(α) on durations t^α.
fn weibull_profile_search<T: Real>(d: &DurationData<T>, tol: T) -> Result<(Vec<T>, T)> {
    let p = d.x().ncols();
    let lt: Vec<T> = d.t().iter().map(|t| t.ln()).collect();
    let sum_lt = compensated_sum(lt.iter().copied());
    let n = T::from_count(d.n());
    let profile = |log_alpha: T| -> Result<(T, Vec<T>)> {
        let alpha = log_alpha.exp();
        let ta: Vec<T> = lt.iter().map(|&l| (alpha * l).exp()).collect();
        // extreme shapes overflow t^α; treat those as infeasible
        match exponential_on(d, &ta, exponential_init(d.n(), p, &ta), tol) {
            Ok(fit) => Ok((n * log_alpha + (alpha - T::one()) * sum_lt + fit.loglik, fit.estimates)),
            Err(e) if e.is_convergence_failure() || matches!(e, Error::Singular(_) | Error::InvalidData(_)) => {
                Ok((T::neg_infinity(), Vec::new()))
            }
            Err(e) => Err(e),
        }
    };
    let gr = T::lit(0.618_033_988_749_894_9);
    let (mut a, mut b) = (T::lit(1e-3).ln(), T::lit(1e4).ln());
    let mut c = b - gr * (b - a);
    let mut e = a + gr * (b - a);
    let mut fc = profile(c)?.0;
    let mut fe = profile(e)?.0;
    for _ in 0..200 {
        if (b - a).abs() < T::lit(1e-10) {
            break;
        }
        if fc > fe {
            b = e;
            e = c;
            fe = fc;
            c = b - gr * (b - a);
            fc = profile(c)?.0;
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + gr * (b - a);
            fe = profile(e)?.0;
        }
    }
    let log_alpha = (a + b) / T::lit(2.0);
    if log_alpha > T::lit(1e4).ln() - T::lit(0.01) {
        return Err(Error::NotConverged {
            solver: "weibull profile (shape diverges)",
            iterations: 200,
            gradient_norm: f64::INFINITY,
        });
    }
    let (ll, beta) = profile(log_alpha)?;
    if !ll.is_finite() {
        return Err(Error::NotConverged {
            solver: "weibull profile",
            iterations: 200,
            gradient_norm: f64::INFINITY,
        });
    }
    Ok((beta, log_alpha.exp()))
}

// --------------------------------------------------------------- Gaussian

/// Score of the i.i.d. N(μ, σ²) panel log-likelihood.
pub fn gaussian_panel_score<T: Real>(d: &PanelData<T>, mu: T, sigma2: T) -> Vec<T> {
    let y = d.y().as_slice();
    let nt = T::from_count(y.len());
    let s1 = compensated_sum(y.iter().map(|&v| v - mu));
    let s2 = compensated_sum(y.iter().map(|&v| (v - mu) * (v - mu)));
    let two = T::lit(2.0);
    vec![s1 / sigma2, -nt / (two * sigma2) + s2 / (two * sigma2 * sigma2)]
}

/// Grand mean and the ML variance (divisor NT).
pub fn fit_gaussian_panel<T: Real>(d: &PanelData<T>) -> Result<FitResult<T>> {
    let y = d.y().as_slice();
    let nt = T::from_count(y.len());
    let mu = compensated_sum(y.iter().copied()) / nt;
    let sigma2 = compensated_sum(y.iter().map(|&v| (v - mu) * (v - mu))) / nt;
    let scale = y.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let floor = T::epsilon() * T::lit(16.0) * scale;
    if !(sigma2 > floor * floor) {
        return Err(Error::InvalidData("panel has zero variance".into()));
    }
    let grad = gaussian_panel_score(d, mu, sigma2);
    let loglik = -nt / T::lit(2.0) * (T::TAU() * sigma2).ln() - nt / T::lit(2.0);
    Ok(FitResult {
        names: vec!["mu".into(), "sigma2".into()],
        estimates: vec![mu, sigma2],
        iterations: 0,
        gradient_norm: norm(&grad),
        tolerance: base_tol::<T>() * (T::one() + nt),
        converged: true,
        loglik,
        loglik_trace: vec![loglik],
    })
}

/// Least squares, the MLE of y = Xβ + ε with ε ~ N(0, 1).
pub fn fit_gaussian_regression<T: Real>(d: &RegressionData<T>) -> Result<FitResult<T>> {
    let x = d.x();
    let ones = vec![T::one(); d.n()];
    let xtx = SymMatrix::new(weighted_cross(x, &ones))?;
    let xty = column_sums(x, d.y());
    let beta = xtx.solve(&xty)?;
    let resid: Vec<T> = linear_predictor(x, &beta)
        .into_iter()
        .zip(d.y())
        .map(|(f, &y)| y - f)
        .collect();
    let grad = column_sums(x, &resid);
    let n = T::from_count(d.n());
    let loglik = -n / T::lit(2.0) * T::TAU().ln() - compensated_sum(resid.iter().map(|&r| r * r)) / T::lit(2.0);
    let y1 = compensated_sum(d.y().iter().map(|v| v.abs()));
    Ok(FitResult {
        names: beta_names(x.ncols()),
        estimates: beta,
        iterations: 0,
        gradient_norm: norm(&grad),
        tolerance: base_tol::<T>() * (T::one() + y1),
        converged: true,
        loglik,
        loglik_trace: vec![loglik],
    })
}
