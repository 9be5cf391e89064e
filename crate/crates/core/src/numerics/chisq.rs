//! Central χ² distributions and chi-bar-squared mixtures.

use crate::error::{Error, Result};
use crate::numerics::special::{reg_lower_gamma, reg_upper_gamma};
use crate::real::Real;

/// CDF of the central χ² with `df` degrees of freedom. `df = 0` is the
/// point mass at zero, so its CDF is 1 on `[0, ∞)`.
pub fn chisq_cdf<T: Real>(x: T, df: u32) -> Result<T> {
    if !(x >= T::zero()) {
        return Err(Error::domain("chisq_cdf", x.as_f64(), "x >= 0"));
    }
    if df == 0 {
        return Ok(T::one());
    }
    if x.is_infinite() {
        return Ok(T::one());
    }
    let half = T::lit(0.5);
    reg_lower_gamma(half * T::from_count(df as usize), half * x)
}

/// Upper tail P(X > x).
pub fn chisq_sf<T: Real>(x: T, df: u32) -> Result<T> {
    if !(x >= T::zero()) {
        return Err(Error::domain("chisq_sf", x.as_f64(), "x >= 0"));
    }
    if df == 0 || x.is_infinite() {
        return Ok(T::zero());
    }
    let half = T::lit(0.5);
    reg_upper_gamma(half * T::from_count(df as usize), half * x)
}

/// Quantile of the central χ², by bracketed bisection on [`chisq_cdf`].
pub fn chisq_quantile<T: Real>(p: T, df: u32) -> Result<T> {
    if !(p > T::zero() && p < T::one()) {
        return Err(Error::domain("chisq_quantile", p.as_f64(), "0 < p < 1"));
    }
    if df == 0 {
        return Ok(T::zero());
    }
    bisect_cdf(|x| chisq_cdf(x, df), p, T::from_count(df as usize))
}

/// Smallest x (to working precision) with `cdf(x) >= p`, for a continuous,
/// nondecreasing `cdf` on `[0, ∞)`.
fn bisect_cdf<T: Real, F>(cdf: F, p: T, start: T) -> Result<T>
where
    F: Fn(T) -> Result<T>,
{
    let two = T::lit(2.0);
    let mut lo = T::zero();
    let mut hi = start.max(T::one());
    let mut guard = 0;
    while cdf(hi)? < p {
        lo = hi;
        hi *= two;
        guard += 1;
        if guard > 2000 || !hi.is_finite() {
            return Err(Error::NotConverged {
                solver: "quantile bracket",
                iterations: guard,
                gradient_norm: f64::NAN,
            });
        }
    }
    let width_tol = T::epsilon() * T::lit(4.0);
    for _ in 0..4000 {
        let mid = lo + (hi - lo) / two;
        if mid <= lo || mid >= hi || hi - lo <= width_tol * hi {
            break;
        }
        if cdf(mid)? >= p {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Weighted mixture of central χ² laws, Σ w_k χ²(df_k), where χ²(0) is the
/// point mass at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiBarMixture<T: Real = f64> {
    weights: Vec<T>,
    dfs: Vec<u32>,
}

impl<T: Real> ChiBarMixture<T> {
    /// Builds a mixture from `(weight, df)` pairs.
    ///
    /// Weights must lie in [0, 1] and sum to one within 1e-12; degrees of
    /// freedom must be strictly increasing.
    pub fn new(components: Vec<(T, u32)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidData("mixture needs at least one component".into()));
        }
        let mut weights = Vec::with_capacity(components.len());
        let mut dfs = Vec::with_capacity(components.len());
        for (k, (w, df)) in components.into_iter().enumerate() {
            if !(w >= T::zero() && w <= T::one()) {
                return Err(Error::InvalidData(format!(
                    "mixture weight {k} = {w} is not a probability"
                )));
            }
            if let Some(&prev) = dfs.last() {
                if df <= prev {
                    return Err(Error::InvalidData(format!(
                        "mixture degrees of freedom must be strictly increasing ({prev} then {df})"
                    )));
                }
            }
            weights.push(w);
            dfs.push(df);
        }
        let total: T = weights.iter().copied().sum();
        let tol = T::lit(1e-12).max(T::epsilon() * T::lit(16.0));
        if (total - T::one()).abs() > tol {
            return Err(Error::InvalidData(format!("mixture weights sum to {total}, not 1")));
        }
        Ok(ChiBarMixture { weights, dfs })
    }

    /// ½χ²₀ + ½χ²₁, the null law of (0 ∨ Z)² for a standard normal Z.
    pub fn half_half() -> Self {
        let half = T::lit(0.5);
        ChiBarMixture {
            weights: vec![half, half],
            dfs: vec![0, 1],
        }
    }

    /// Σ_{i=0}^{q} C(q,i) 2^{-q} χ²_i, the null law of Σ (0 ∨ Z_k)² for q
    /// independent standard normals.
    pub fn binomial(q: u32) -> Result<Self> {
        if q == 0 || q > 60 {
            return Err(Error::InvalidData(format!(
                "binomial mixture needs 1 <= q <= 60, got {q}"
            )));
        }
        let denom = T::lit(2f64.powi(q as i32));
        let mut coef = 1u64;
        let mut comps = Vec::with_capacity(q as usize + 1);
        for i in 0..=q {
            comps.push((T::lit(coef as f64) / denom, i));
            coef = coef * u64::from(q - i) / u64::from(i + 1);
        }
        Self::new(comps)
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn dfs(&self) -> &[u32] {
        &self.dfs
    }

    pub fn components(&self) -> impl Iterator<Item = (T, u32)> + '_ {
        self.weights.iter().copied().zip(self.dfs.iter().copied())
    }

    /// Probability of the atom at zero.
    pub fn mass_at_zero(&self) -> T {
        if self.dfs[0] == 0 {
            self.weights[0]
        } else {
            T::zero()
        }
    }

    /// P(X ≤ x).
    pub fn cdf(&self, x: T) -> Result<T> {
        if !(x >= T::zero()) {
            return Err(Error::domain("mixture_cdf", x.as_f64(), "x >= 0"));
        }
        let mut acc = T::zero();
        for (w, df) in self.components() {
            acc += w * chisq_cdf(x, df)?;
        }
        Ok(acc.min(T::one()))
    }

    /// P(X > x).
    pub fn sf(&self, x: T) -> Result<T> {
        if !(x >= T::zero()) {
            return Err(Error::domain("mixture_sf", x.as_f64(), "x >= 0"));
        }
        let mut acc = T::zero();
        for (w, df) in self.components() {
            acc += w * chisq_sf(x, df)?;
        }
        Ok(acc.min(T::one()))
    }

    /// P(X ≥ t) for an observed statistic t. Equal to 1 at t = 0 because of
    /// the atom, and to [`Self::sf`] for t > 0.
    pub fn p_value(&self, t: T) -> Result<T> {
        if t <= T::zero() {
            if t < T::zero() || t.is_nan() {
                return Err(Error::domain("mixture p-value", t.as_f64(), "statistic >= 0"));
            }
            return Ok(T::one());
        }
        self.sf(t)
    }

    /// Smallest x with `cdf(x) >= p`; zero whenever p does not exceed the
    /// mass at zero.
    pub fn quantile(&self, p: T) -> Result<T> {
        if !(p > T::zero() && p < T::one()) {
            return Err(Error::domain("mixture_quantile", p.as_f64(), "0 < p < 1"));
        }
        if p <= self.mass_at_zero() {
            return Ok(T::zero());
        }
        let max_df = *self.dfs.last().expect("nonempty");
        bisect_cdf(|x| self.cdf(x), p, T::from_count(max_df as usize))
    }
}

/// Free-function form of [`ChiBarMixture::cdf`].
pub fn mixture_cdf<T: Real>(m: &ChiBarMixture<T>, x: T) -> Result<T> {
    m.cdf(x)
}

/// Free-function form of [`ChiBarMixture::quantile`].
pub fn mixture_quantile<T: Real>(m: &ChiBarMixture<T>, p: T) -> Result<T> {
    m.quantile(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn quarter_half_quarter() -> ChiBarMixture {
        ChiBarMixture::new(vec![(0.25, 0), (0.5, 1), (0.25, 2)]).unwrap()
    }

    #[test]
    fn chisq_quantile_reference_values() {
        assert_relative_eq!(
            chisq_quantile(0.90f64, 1).unwrap(),
            2.705_543_454_095_404,
            max_relative = 1e-11
        );
        assert_relative_eq!(
            chisq_quantile(0.50f64, 1).unwrap(),
            0.454_936_423_119_573_05,
            max_relative = 1e-11
        );
        assert_relative_eq!(
            chisq_quantile(0.95f64, 2).unwrap(),
            -2.0 * 0.05_f64.ln(),
            max_relative = 1e-11
        );
        assert_relative_eq!(
            chisq_quantile(0.95f64, 2).unwrap(),
            5.991_464_547_107_979,
            max_relative = 1e-11
        );
    }

    #[test]
    fn chisq_quantile_roundtrip() {
        for df in 1..12 {
            for &p in &[1e-6f64, 0.01, 0.25, 0.5, 0.9, 0.999, 1.0 - 1e-9] {
                let x = chisq_quantile(p, df).unwrap();
                let back = chisq_cdf(x, df).unwrap();
                assert!((back - p).abs() < 1e-10, "df={df} p={p} back={back}");
            }
        }
        assert!(chisq_quantile(0.0f64, 1).is_err());
        assert!(chisq_quantile(1.0f64, 1).is_err());
    }

    #[test]
    fn chisq_zero_df_is_point_mass() {
        assert_eq!(chisq_cdf(0.0, 0).unwrap(), 1.0);
        assert_eq!(chisq_cdf(3.0, 0).unwrap(), 1.0);
        assert_eq!(chisq_quantile(0.7f64, 0).unwrap(), 0.0);
        assert_eq!(chisq_sf(0.0, 0).unwrap(), 0.0);
    }

    #[test]
    fn mixture_cdf_examples() {
        let hh = ChiBarMixture::<f64>::half_half();
        assert_eq!(hh.cdf(0.0).unwrap(), 0.5);
        assert_eq!(quarter_half_quarter().cdf(0.0).unwrap(), 0.25);
        assert_relative_eq!(hh.cdf(2.705_543_454).unwrap(), 0.95, max_relative = 1e-9);
        assert!(hh.cdf(-1.0).is_err());
    }

    #[test]
    fn mixture_quantile_examples() {
        let hh = ChiBarMixture::<f64>::half_half();
        assert_relative_eq!(hh.quantile(0.95).unwrap(), 2.705_543_454_095_404, max_relative = 1e-11);
        assert_eq!(hh.quantile(0.40).unwrap(), 0.0);
        assert_relative_eq!(
            quarter_half_quarter().quantile(0.95).unwrap(),
            4.230_599_177_831_493,
            max_relative = 1e-11
        );
        assert!(hh.quantile(1.0).is_err());
    }

    #[test]
    fn mixture_validation() {
        assert!(ChiBarMixture::new(vec![(0.5, 1), (0.5, 1)]).is_err());
        assert!(ChiBarMixture::new(vec![(0.6, 0), (0.6, 1)]).is_err());
        assert!(ChiBarMixture::new(vec![(-0.1, 0), (1.1, 1)]).is_err());
        assert!(ChiBarMixture::<f64>::new(vec![]).is_err());
    }

    #[test]
    fn binomial_mixture_weights() {
        let m = ChiBarMixture::<f64>::binomial(2).unwrap();
        assert_eq!(m.weights(), &[0.25, 0.5, 0.25]);
        assert_eq!(m, quarter_half_quarter());
        let m3 = ChiBarMixture::<f64>::binomial(3).unwrap();
        assert_eq!(m3.weights(), &[0.125, 0.375, 0.375, 0.125]);
    }

    #[test]
    fn p_value_has_atom() {
        let m = quarter_half_quarter();
        assert_eq!(m.p_value(0.0).unwrap(), 1.0);
        let c = m.quantile(0.95).unwrap();
        assert_relative_eq!(m.p_value(c).unwrap(), 0.05, max_relative = 1e-9);
    }

    proptest! {
        #[test]
        fn cdf_nondecreasing_and_quantile_inverts(
            w0 in 0.05f64..0.6, w1 in 0.05f64..0.4, p in 0.01f64..0.999,
            x in 0.0f64..30.0, dx in 0.0f64..5.0,
        ) {
            let w2 = 1.0 - w0 - w1;
            prop_assume!(w2 >= 0.0);
            let m = ChiBarMixture::new(vec![(w0, 0), (w1, 1), (w2, 3)]).unwrap();
            prop_assert!(m.cdf(x + dx).unwrap() >= m.cdf(x).unwrap());
            let q = m.quantile(p).unwrap();
            let f = m.cdf(q).unwrap();
            prop_assert!(f >= p - 1e-12);
            if p > m.mass_at_zero() {
                prop_assert!((f - p).abs() < 1e-9);
            } else {
                prop_assert_eq!(q, 0.0);
            }
        }
    }
}
