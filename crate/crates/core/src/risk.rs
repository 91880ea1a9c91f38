//! Balanced-loss risk of shrinkage estimators.
//!
//! Two exact routes are provided. [`exact_risk_general`] handles arbitrary
//! coefficients through the Stein-identity expansion
//!
//! ```text
//!     R = (1-w) p + sum_{j,k} g_j g_k E[U^(1-j-k)] + 2 (1-w) sum_m g_m (p - 2m) E[U^-m]
//! ```
//!
//! with `U = ||X||^2`. [`exact_risk_js`] and [`exact_risk_chained`] follow the
//! per-degree recursions (risk of degree `M` = risk of degree `M-1` plus new
//! terms), which hold only for the THEOREM coefficients at degrees 3 and 4.

use crate::error::{Error, Result};
use crate::estimators::{self, CoefficientConvention, Family, ShrinkagePolynomial};
use crate::ncx2::{NoncentralChiSquare, SeriesControl};

/// `L_w(delta, theta) = w ||delta - x||^2 + (1 - w) ||delta - theta||^2`,
/// with the MLE `x` as target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalancedLoss {
    omega: f64,
}

impl BalancedLoss {
    pub fn new(omega: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&omega) {
            return Err(Error::InvalidParameter(format!(
                "omega must lie in [0, 1), got {omega}"
            )));
        }
        Ok(Self { omega })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn evaluate(&self, delta: &[f64], x: &[f64], theta: &[f64]) -> Result<f64> {
        for len in [x.len(), theta.len()] {
            if len != delta.len() {
                return Err(Error::LengthMismatch {
                    expected: delta.len(),
                    actual: len,
                });
            }
        }
        let (mut to_target, mut to_theta) = (0.0, 0.0);
        for ((&d, &xi), &t) in delta.iter().zip(x).zip(theta) {
            to_target += (d - xi) * (d - xi);
            to_theta += (d - t) * (d - t);
        }
        Ok(self.omega * to_target + (1.0 - self.omega) * to_theta)
    }
}

/// Risk of the MLE, `(1 - w) p`.
pub fn mle_risk(p: usize, omega: f64) -> f64 {
    (1.0 - omega) * p as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RiskMethod {
    ExactGeneral,
    ExactChained,
    MonteCarlo,
}

impl RiskMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            RiskMethod::ExactGeneral => "EXACT_GENERAL",
            RiskMethod::ExactChained => "EXACT_CHAINED",
            RiskMethod::MonteCarlo => "MONTE_CARLO",
        }
    }
}

/// A risk value together with the inputs that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskReport {
    pub risk: f64,
    pub ratio_to_mle: f64,
    pub method: RiskMethod,
    pub p: usize,
    pub lambda: f64,
    pub omega: f64,
    pub coeffs: Vec<f64>,
    pub family: Family,
    /// Standard error, Monte Carlo only.
    pub stderr: Option<f64>,
}

impl RiskReport {
    pub fn new(
        risk: f64,
        method: RiskMethod,
        p: usize,
        lambda: f64,
        est: &ShrinkagePolynomial,
        stderr: Option<f64>,
    ) -> Self {
        let omega = est.omega();
        Self {
            risk,
            ratio_to_mle: risk / mle_risk(p, omega),
            method,
            p,
            lambda,
            omega,
            coeffs: est.coeffs().to_vec(),
            family: est.family(),
            stderr,
        }
    }

    pub fn convention(&self) -> Option<CoefficientConvention> {
        self.family.convention()
    }
}

pub fn risk_ratio(report: &RiskReport) -> f64 {
    report.risk / mle_risk(report.p, report.omega)
}

/// `E[U^-m]` for `m = 1..=max_order`, index 0 unused.
fn inverse_moments(dist: &NoncentralChiSquare, max_order: u32, ctrl: &SeriesControl) -> Result<Vec<f64>> {
    let mut out = vec![1.0];
    for m in 1..=max_order {
        out.push(dist.inverse_moment(m, ctrl)?);
    }
    Ok(out)
}

/// Exact risk of any polynomial estimator at dimension `p` and
/// noncentrality `lambda`; requires `p > 4M - 2`.
pub fn exact_risk_general(
    est: &ShrinkagePolynomial,
    p: usize,
    lambda: f64,
    ctrl: &SeriesControl,
) -> Result<RiskReport> {
    let dist = NoncentralChiSquare::new(p, lambda)?;
    let omega = est.omega();
    let gamma = est.coeffs();
    let degree = gamma.len();
    if degree == 0 {
        return Ok(RiskReport::new(
            mle_risk(p, omega),
            RiskMethod::ExactGeneral,
            p,
            lambda,
            est,
            None,
        ));
    }
    let top = 2 * degree - 1;
    if p <= 2 * top {
        return Err(Error::NonIntegrable {
            dof: p,
            order: -(top as f64),
        });
    }
    let inv = inverse_moments(&dist, top as u32, ctrl)?;
    let pf = p as f64;

    let mut quadratic = 0.0;
    for (j, gj) in gamma.iter().enumerate() {
        for (k, gk) in gamma.iter().enumerate() {
            // (j+1) + (k+1) - 1
            quadratic += gj * gk * inv[j + k + 1];
        }
    }
    let linear: f64 = gamma
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let m = i + 1;
            g * (pf - 2.0 * m as f64) * inv[m]
        })
        .sum();
    let risk = mle_risk(p, omega) + quadratic + 2.0 * (1.0 - omega) * linear;
    Ok(RiskReport::new(risk, RiskMethod::ExactGeneral, p, lambda, est, None))
}

fn js_risk_value(p: usize, omega: f64, inv1: f64) -> f64 {
    let pf = p as f64;
    mle_risk(p, omega) - (pf - 2.0).powi(2) * (1.0 - omega).powi(2) * inv1
}

/// `R(delta_JS) = (1-w) p - (p-2)^2 (1-w)^2 E[1/(p - 2 + 2K)]`, `K ~ Poisson(lambda/2)`.
pub fn exact_risk_js(p: usize, omega: f64, lambda: f64, ctrl: &SeriesControl) -> Result<RiskReport> {
    let est = estimators::james_stein(p, omega)?;
    let dist = NoncentralChiSquare::new(p, lambda)?;
    let risk = js_risk_value(p, omega, dist.inverse_moment(1, ctrl)?);
    Ok(RiskReport::new(risk, RiskMethod::ExactChained, p, lambda, &est, None))
}

/// Risk of the degree 2, 3 or 4 chain member by the per-degree recursion.
///
/// Degree 2 accepts either convention. Degrees 3 and 4 build on the
/// THEOREM lower-order coefficients and return
/// [`Error::ConventionUnsupported`] under SIMULATION.
pub fn exact_risk_chained(
    degree: usize,
    p: usize,
    omega: f64,
    lambda: f64,
    conv: CoefficientConvention,
    ctrl: &SeriesControl,
) -> Result<RiskReport> {
    if !(2..=4).contains(&degree) {
        return Err(Error::InvalidParameter(format!(
            "chained risk is defined for degrees 2, 3, 4, got {degree}"
        )));
    }
    let est = estimators::poly(degree, p, omega, conv)?;
    if degree >= 3 && conv == CoefficientConvention::Simulation {
        return Err(Error::ConventionUnsupported { degree });
    }
    let dist = NoncentralChiSquare::new(p, lambda)?;
    let inv = inverse_moments(&dist, (2 * degree - 1) as u32, ctrl)?;
    let pf = p as f64;
    let s = 1.0 - omega;
    let g = est.coeffs();

    let mut risk = js_risk_value(p, omega, inv[1]);
    let b = g[1];
    risk += -4.0 * b * s * inv[2] + b * b * inv[3];
    if degree >= 3 {
        let c = g[2];
        risk += c * c * inv[5] + 4.0 * c * s * (pf - 6.0) * inv[4] - 8.0 * c * s * inv[3];
    }
    if degree >= 4 {
        let d = g[3];
        risk += d * d * inv[7]
            + 4.0 * d * s * (pf - 10.0).powi(2) * inv[6]
            + 4.0 * d * s * (pf - 6.0) * inv[5]
            - 12.0 * d * s * inv[4];
    }
    Ok(RiskReport::new(risk, RiskMethod::ExactChained, p, lambda, &est, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{james_stein, mle, poly};
    use approx::assert_relative_eq;
    use CoefficientConvention::*;

    fn ctrl() -> SeriesControl {
        SeriesControl::default()
    }

    #[test]
    fn balanced_loss_examples() {
        let l = BalancedLoss::new(0.3).unwrap();
        let v = [1.0, -2.0, 0.5];
        assert_eq!(l.evaluate(&v, &v, &v).unwrap(), 0.0);

        let q = BalancedLoss::new(0.0).unwrap();
        assert_eq!(q.evaluate(&[1.0, 1.0], &[5.0, 5.0], &[0.0, 3.0]).unwrap(), 5.0);

        let h = BalancedLoss::new(0.5).unwrap();
        assert_eq!(h.evaluate(&[0.0, 0.0], &[2.0, 0.0], &[0.0, 2.0]).unwrap(), 4.0);

        assert!(matches!(
            h.evaluate(&[0.0], &[1.0, 2.0], &[0.0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(BalancedLoss::new(1.0).is_err());
    }

    #[test]
    fn mle_risk_examples() {
        assert_relative_eq!(mle_risk(14, 0.1), 12.6, max_relative = 1e-15);
        assert_eq!(mle_risk(3, 0.0), 3.0);
        assert_relative_eq!(mle_risk(20, 0.9), 2.0, max_relative = 1e-14);
    }

    #[test]
    fn mle_has_unit_ratio() {
        let r = exact_risk_general(&mle(0.0).unwrap(), 14, 7.0, &ctrl()).unwrap();
        assert_eq!(r.risk, 14.0);
        assert_eq!(r.ratio_to_mle, 1.0);
        let r = exact_risk_general(&mle(0.4).unwrap(), 9, 2.0, &ctrl()).unwrap();
        assert_relative_eq!(risk_ratio(&r), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn js_central_closed_form() {
        // (1-w)p - (p-2)(1-w)^2 at lambda = 0
        let g = exact_risk_general(&james_stein(14, 0.0).unwrap(), 14, 0.0, &ctrl()).unwrap();
        assert_relative_eq!(g.risk, 2.0, max_relative = 1e-13);
        assert_relative_eq!(g.ratio_to_mle, 1.0 / 7.0, max_relative = 1e-13);
        let c = exact_risk_js(14, 0.0, 0.0, &ctrl()).unwrap();
        assert_relative_eq!(c.risk, 2.0, max_relative = 1e-13);
        assert_eq!(c.method, RiskMethod::ExactChained);
    }

    #[test]
    fn js_matches_printed_ratios() {
        let cases = [
            (14, 0.1, 1.2418, 0.2920),
            (14, 0.9, 1.2418, 0.9213),
            (18, 0.0, 20.0, 0.5923),
            (14, 0.5, 10.4311, 0.7609),
        ];
        for (p, w, lam, printed) in cases {
            let r = exact_risk_js(p, w, lam, &ctrl()).unwrap();
            assert!((r.ratio_to_mle - printed).abs() < 1e-4, "{p} {w} {lam}: {}", r.ratio_to_mle);
        }
    }

    #[test]
    fn degree_two_central_chained() {
        // 2 - 4*16/(12*10) + 16^2/(12*10*8)
        let expected = 2.0 - 64.0 / 120.0 + 256.0 / 960.0;
        let c = exact_risk_chained(2, 14, 0.0, 0.0, Theorem, &ctrl()).unwrap();
        assert_relative_eq!(c.risk, expected, max_relative = 1e-13);
        assert_relative_eq!(c.ratio_to_mle, expected / 14.0, max_relative = 1e-13);
        let g = exact_risk_general(&poly(2, 14, 0.0, Theorem).unwrap(), 14, 0.0, &ctrl()).unwrap();
        assert_relative_eq!(g.risk, expected, max_relative = 1e-13);
    }

    #[test]
    fn degree_two_chained_accepts_simulation_coefficients() {
        let c = exact_risk_chained(2, 14, 0.1, 1.2418, Simulation, &ctrl()).unwrap();
        let g =
            exact_risk_general(&poly(2, 14, 0.1, Simulation).unwrap(), 14, 1.2418, &ctrl()).unwrap();
        assert_relative_eq!(c.risk, g.risk, max_relative = 1e-12);
        assert!((g.ratio_to_mle - 0.2809).abs() < 1e-4);
    }

    #[test]
    fn chained_higher_degrees_need_theorem_coefficients() {
        for degree in [3, 4] {
            assert_eq!(
                exact_risk_chained(degree, 20, 0.0, 1.0, Simulation, &ctrl()),
                Err(Error::ConventionUnsupported { degree })
            );
        }
        assert!(matches!(
            exact_risk_chained(3, 10, 0.0, 1.0, Theorem, &ctrl()),
            Err(Error::DimensionTooSmall { threshold: 10, .. })
        ));
        assert!(exact_risk_chained(5, 30, 0.0, 1.0, Theorem, &ctrl()).is_err());
    }

    #[test]
    fn general_formula_checks_integrability() {
        // degree 2 needs E[U^-3], finite only for p > 6
        let est = ShrinkagePolynomial::custom(0.0, vec![-1.0, 1.0], None).unwrap();
        assert!(matches!(
            exact_risk_general(&est, 6, 1.0, &ctrl()),
            Err(Error::NonIntegrable { dof: 6, .. })
        ));
        assert!(exact_risk_general(&est, 7, 1.0, &ctrl()).is_ok());
    }

    #[test]
    fn report_echoes_inputs() {
        let est = poly(3, 18, 0.4, Simulation).unwrap();
        let r = exact_risk_general(&est, 18, 5.0019, &ctrl()).unwrap();
        assert_eq!(r.p, 18);
        assert_eq!(r.lambda, 5.0019);
        assert_eq!(r.omega, 0.4);
        assert_eq!(r.coeffs, est.coeffs());
        assert_eq!(r.convention(), Some(Simulation));
        assert_eq!(r.stderr, None);
        assert_relative_eq!(r.ratio_to_mle, r.risk / (0.6 * 18.0), max_relative = 1e-15);
    }
}
