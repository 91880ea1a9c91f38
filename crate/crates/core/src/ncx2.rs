//! Moments of the non-central chi-square distribution.
//!
//! With `U = ||X||^2`, `X ~ N_p(theta, I_p)` and `lambda = ||theta||^2`, the
//! law of `U` is a Poisson(`lambda / 2`) mixture of central chi-squares with
//! `p + 2K` degrees of freedom. Every expectation here is evaluated as the
//! corresponding mixture sum
//!
//! ```text
//!     E[U^v] = 2^v * sum_k Pois(k; lambda/2) * Gamma(p/2 + k + v) / Gamma(p/2 + k)
//! ```
//!
//! truncated according to a [`SeriesControl`].

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Truncation policy for the Poisson mixture sums.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    rel_tol: f64,
    max_terms: usize,
}

impl SeriesControl {
    pub const DEFAULT_REL_TOL: f64 = 1e-12;
    pub const DEFAULT_MAX_TERMS: usize = 10_000;

    pub fn new(rel_tol: f64, max_terms: usize) -> Result<Self> {
        if !(rel_tol > 0.0 && rel_tol < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "rel_tol must lie in (0, 1), got {rel_tol}"
            )));
        }
        if max_terms == 0 {
            return Err(Error::InvalidParameter("max_terms must be >= 1".into()));
        }
        Ok(Self { rel_tol, max_terms })
    }

    pub fn rel_tol(&self) -> f64 {
        self.rel_tol
    }

    pub fn max_terms(&self) -> usize {
        self.max_terms
    }
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self {
            rel_tol: Self::DEFAULT_REL_TOL,
            max_terms: Self::DEFAULT_MAX_TERMS,
        }
    }
}

/// Law of `||X||^2` for `X ~ N_p(theta, I_p)`, parameterised by `p` and
/// `lambda = ||theta||^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoncentralChiSquare {
    dof: usize,
    noncentrality: f64,
}

impl NoncentralChiSquare {
    pub fn new(dof: usize, noncentrality: f64) -> Result<Self> {
        if dof == 0 {
            return Err(Error::InvalidParameter(
                "degrees of freedom must be >= 1".into(),
            ));
        }
        if !(noncentrality.is_finite() && noncentrality >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noncentrality must be finite and >= 0, got {noncentrality}"
            )));
        }
        Ok(Self { dof, noncentrality })
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    pub fn noncentrality(&self) -> f64 {
        self.noncentrality
    }

    /// Mean of the Poisson mixing index, `lambda / 2`.
    pub fn mixing_mean(&self) -> f64 {
        self.noncentrality / 2.0
    }

    pub fn mean(&self) -> f64 {
        self.dof as f64 + self.noncentrality
    }

    fn half_dof(&self) -> f64 {
        self.dof as f64 / 2.0
    }

    /// `E[U^v]` for real `v` with `p/2 + v > 0`.
    pub fn moment(&self, v: f64, ctrl: &SeriesControl) -> Result<f64> {
        let a = self.half_dof();
        if !v.is_finite() || a + v <= 0.0 {
            return Err(Error::NonIntegrable {
                dof: self.dof,
                order: v,
            });
        }
        let series = gamma_ratio_series(self.mixing_mean(), a, v, ctrl)?;
        Ok(2f64.powf(v) * series)
    }

    /// `E[U^-m] = E_K[ prod_{j=1..m} 1 / (p + 2K - 2j) ]`, requires `p > 2m`.
    pub fn inverse_moment(&self, m: u32, ctrl: &SeriesControl) -> Result<f64> {
        if m == 0 {
            return Ok(1.0);
        }
        if self.dof <= 2 * m as usize {
            return Err(Error::NonIntegrable {
                dof: self.dof,
                order: -(m as f64),
            });
        }
        let p = self.dof as f64;
        let log_factor = |k: usize| {
            let base = p + 2.0 * k as f64;
            let prod: f64 = (1..=m).map(|j| base - 2.0 * j as f64).product();
            -prod.ln()
        };
        // the product shrinks as k grows
        poisson_mixture(self.mixing_mean(), ctrl, log_factor, |_| 1.0)
    }

    /// `d/dlambda E[U^v] = v 2^(v-1) sum_k Pois(k; lambda/2) Gamma(p/2+v+k) / Gamma(p/2+1+k)`.
    pub fn moment_derivative(&self, v: f64, ctrl: &SeriesControl) -> Result<f64> {
        let a = self.half_dof();
        if !v.is_finite() || a + v <= 0.0 {
            return Err(Error::NonIntegrable {
                dof: self.dof,
                order: v,
            });
        }
        if v == 0.0 {
            return Ok(0.0);
        }
        let series = gamma_ratio_series(self.mixing_mean(), a + 1.0, v - 1.0, ctrl)?;
        Ok(v * 2f64.powf(v - 1.0) * series)
    }
}

/// `H(lambda) = E[U^r] / E[U^s]`, defined for `-p/2 < s <= r < 0`.
pub fn moment_ratio(p: usize, r: f64, s: f64, lambda: f64, ctrl: &SeriesControl) -> Result<f64> {
    let half = p as f64 / 2.0;
    if !(-half < s && s <= r && r < 0.0) {
        return Err(Error::DomainViolation(format!(
            "moment ratio needs -p/2 < s <= r < 0, got p = {p}, r = {r}, s = {s}"
        )));
    }
    let dist = NoncentralChiSquare::new(p, lambda)?;
    Ok(dist.moment(r, ctrl)? / dist.moment(s, ctrl)?)
}

fn check_inverse_ratio_window(p: usize, r: f64) -> Result<()> {
    let pf = p as f64;
    if !r.is_finite() || r < 2.0 {
        return Err(Error::DomainViolation(format!(
            "inverse ratio needs r >= 2 so that it is nonincreasing in lambda, got r = {r}"
        )));
    }
    if !(pf > 2.0 * r - 2.0 && pf > r) {
        return Err(Error::DomainViolation(format!(
            "E||X||^({}) / E||X||^({}) is not integrable for p = {p}",
            2.0 - 2.0 * r,
            -r
        )));
    }
    Ok(())
}

/// `E||X||^(2-2r) / E||X||^(-r)` at noncentrality `lambda`, by series.
pub fn inverse_norm_ratio(p: usize, r: f64, lambda: f64, ctrl: &SeriesControl) -> Result<f64> {
    check_inverse_ratio_window(p, r)?;
    let dist = NoncentralChiSquare::new(p, lambda)?;
    Ok(dist.moment(1.0 - r, ctrl)? / dist.moment(-r / 2.0, ctrl)?)
}

/// Supremum over `theta` of [`inverse_norm_ratio`], attained at `theta = 0`:
/// `2^((2-r)/2) Gamma(p/2 - r + 1) / Gamma((p - r)/2)`.
pub fn sup_inverse_ratio(p: usize, r: f64) -> Result<f64> {
    check_inverse_ratio_window(p, r)?;
    let pf = p as f64;
    let log_value = (1.0 - r / 2.0) * std::f64::consts::LN_2 + ln_gamma(pf / 2.0 - r + 1.0)
        - ln_gamma((pf - r) / 2.0);
    Ok(log_value.exp())
}

/// `sum_k Pois(k; mu) Gamma(base + k + shift) / Gamma(base + k)` with
/// `base + shift > 0`.
fn gamma_ratio_series(mu: f64, base: f64, shift: f64, ctrl: &SeriesControl) -> Result<f64> {
    // the step ratio (base + shift + k) / (base + k) is monotone in k
    let growth = move |k: usize| {
        if shift > 0.0 {
            (base + shift + k as f64) / (base + k as f64)
        } else {
            1.0
        }
    };
    if shift.fract() == 0.0 && shift.abs() < i32::MAX as f64 {
        let n = shift as i64;
        let log_factor = move |k: usize| {
            let x = base + k as f64;
            if n >= 0 {
                (0..n).map(|j| x + j as f64).product::<f64>().ln()
            } else {
                -(1..=-n).map(|j| x - j as f64).product::<f64>().ln()
            }
        };
        poisson_mixture(mu, ctrl, log_factor, growth)
    } else {
        let mut current = ln_gamma(base + shift) - ln_gamma(base);
        let mut next_k = 0usize;
        let log_factor = move |k: usize| {
            while next_k < k {
                current += (shift / (base + next_k as f64)).ln_1p();
                next_k += 1;
            }
            current
        };
        poisson_mixture(mu, ctrl, log_factor, growth)
    }
}

/// Sums `sum_k Pois(k; mu) g(k)` for positive `g`, given `ln g(k)` in
/// increasing `k` and a bound `growth(k) >= sup_{j >= k} g(j+1) / g(j)`.
///
/// Terms are added from `k = 0`. Summation stops once `k` has passed the
/// window `max(lambda, 20) + 40 sqrt(max(lambda, 1))` and the geometric tail
/// bound falls below `rel_tol` times the partial sum.
fn poisson_mixture<F, B>(mu: f64, ctrl: &SeriesControl, mut log_factor: F, growth: B) -> Result<f64>
where
    F: FnMut(usize) -> f64,
    B: Fn(usize) -> f64,
{
    if mu == 0.0 {
        return Ok(log_factor(0).exp());
    }
    let lambda = 2.0 * mu;
    let window = (lambda.max(20.0) + 40.0 * lambda.max(1.0).sqrt()).ceil() as usize;
    let ln_mu = mu.ln();
    let mut sum = 0.0;
    for k in 0..ctrl.max_terms {
        let kf = k as f64;
        let ln_weight = kf * ln_mu - mu - ln_gamma(kf + 1.0);
        let term = (ln_weight + log_factor(k)).exp();
        sum += term;

        if k + 1 >= window {
            let rho = mu / (kf + 1.0) * growth(k);
            if rho < 1.0 && term * rho / (1.0 - rho) <= ctrl.rel_tol * sum {
                return Ok(sum);
            }
        }
    }
    Err(Error::TruncationFailure {
        max_terms: ctrl.max_terms,
        partial_sum: sum,
    })
}
