//! The MLE, James-Stein, and polynomial shrinkage estimators.
//!
//! Every estimator is a [`ShrinkagePolynomial`]: coefficients
//! `gamma_1..gamma_M` acting as `delta(x) = (1 + sum_m gamma_m ||x||^(-2m)) x`.
//! The paper families fix `gamma_1 = -(1 - w)(p - 2)` and add higher-order
//! terms whose coefficients depend on a [`CoefficientConvention`].

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Which of the two published coefficient sets to use for `gamma_2`, `gamma_3`.
///
/// `Theorem` carries the factor 2 from the domination theorems
/// (`b = 2(1-w)(p-6)`, `c = 2(1-w)(p-10)^2`); `Simulation` drops it
/// (`b = (1-w)(p-6)`, `c = (1-w)(p-10)^2`). `gamma_4` is the same in both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoefficientConvention {
    Theorem,
    Simulation,
}

impl CoefficientConvention {
    pub const ALL: [CoefficientConvention; 2] = [Self::Theorem, Self::Simulation];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Theorem => "THEOREM",
            Self::Simulation => "SIMULATION",
        }
    }

    fn factor(&self) -> f64 {
        match self {
            Self::Theorem => 2.0,
            Self::Simulation => 1.0,
        }
    }
}

impl fmt::Display for CoefficientConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CoefficientConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "THEOREM" => Ok(Self::Theorem),
            "SIMULATION" => Ok(Self::Simulation),
            _ => Err(Error::InvalidParameter(format!(
                "unknown coefficient convention {s:?} (expected THEOREM or SIMULATION)"
            ))),
        }
    }
}

/// Provenance of a [`ShrinkagePolynomial`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Mle,
    JamesStein,
    /// Degree 2, 3 or 4 member of the polynomial chain.
    Poly {
        degree: usize,
        convention: CoefficientConvention,
    },
    Custom,
}

impl Family {
    /// Short label used in CSV headers: `MLE`, `JS`, `deg2`, ...
    pub fn label(&self) -> String {
        match self {
            Family::Mle => "MLE".into(),
            Family::JamesStein => "JS".into(),
            Family::Poly { degree, .. } => format!("deg{degree}"),
            Family::Custom => "custom".into(),
        }
    }

    pub fn convention(&self) -> Option<CoefficientConvention> {
        match self {
            Family::Poly { convention, .. } => Some(*convention),
            _ => None,
        }
    }
}

/// `delta(x) = x + sum_{m=1..M} gamma_m (||x||^2)^(-m) x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkagePolynomial {
    omega: f64,
    coeffs: Vec<f64>,
    dimension: Option<usize>,
    family: Family,
}

fn check_omega(omega: f64) -> Result<()> {
    if (0.0..1.0).contains(&omega) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "omega must lie in [0, 1), got {omega}"
        )))
    }
}

/// Smallest admissible dimension minus one for each family member.
fn dimension_threshold(degree: usize) -> Option<usize> {
    match degree {
        0 => Some(0),
        1 => Some(2),
        2 => Some(6),
        3 => Some(10),
        4 => Some(14),
        _ => None,
    }
}

fn family_name(degree: usize) -> &'static str {
    match degree {
        0 => "MLE",
        1 => "James-Stein",
        2 => "degree 2",
        3 => "degree 3",
        _ => "degree 4",
    }
}

/// The MLE `delta_0(x) = x`. `omega` is the loss weight used when its risk
/// is evaluated.
pub fn mle(omega: f64) -> Result<ShrinkagePolynomial> {
    check_omega(omega)?;
    Ok(ShrinkagePolynomial {
        omega,
        coeffs: Vec::new(),
        dimension: None,
        family: Family::Mle,
    })
}

/// `delta_JS = (1 - (1-w)(p-2) / ||x||^2) x`, the risk-optimal member of
/// the `(1 - a/||x||^2) x` class.
pub fn james_stein(p: usize, omega: f64) -> Result<ShrinkagePolynomial> {
    check_omega(omega)?;
    if p < 3 {
        return Err(Error::DimensionTooSmall {
            family: family_name(1),
            threshold: 2,
            p,
        });
    }
    Ok(ShrinkagePolynomial {
        omega,
        coeffs: vec![-optimal_a(p, omega)],
        dimension: Some(p),
        family: Family::JamesStein,
    })
}

/// `a_hat = (1 - w)(p - 2)`.
pub fn optimal_a(p: usize, omega: f64) -> f64 {
    (1.0 - omega) * (p as f64 - 2.0)
}

/// The `(gamma_1, ..., gamma_degree)` of the polynomial chain, without
/// dimension checks.
pub fn chain_coefficients(
    degree: usize,
    p: usize,
    omega: f64,
    conv: CoefficientConvention,
) -> Vec<f64> {
    let pf = p as f64;
    let scale = 1.0 - omega;
    let all = [
        -scale * (pf - 2.0),
        conv.factor() * scale * (pf - 6.0),
        conv.factor() * scale * (pf - 10.0).powi(2),
        2.0 * scale * (pf * pf - 28.0 * pf + 188.0) * (pf - 14.0),
    ];
    all[..degree.min(4)].to_vec()
}

/// Degree `1..=4` member of the polynomial chain at dimension `p`.
///
/// Degree 1 is the James-Stein estimator. Degrees 2, 3, 4 require
/// `p > 6`, `p > 10`, `p > 14` respectively.
pub fn poly(
    degree: usize,
    p: usize,
    omega: f64,
    conv: CoefficientConvention,
) -> Result<ShrinkagePolynomial> {
    check_omega(omega)?;
    let threshold = match degree {
        1..=4 => dimension_threshold(degree).unwrap_or(0),
        _ => {
            return Err(Error::InvalidParameter(format!(
                "polynomial degree must be 1..=4, got {degree}"
            )))
        }
    };
    if p <= threshold {
        return Err(Error::DimensionTooSmall {
            family: family_name(degree),
            threshold,
            p,
        });
    }
    if degree == 1 {
        return james_stein(p, omega);
    }
    Ok(ShrinkagePolynomial {
        omega,
        coeffs: chain_coefficients(degree, p, omega, conv),
        dimension: Some(p),
        family: Family::Poly {
            degree,
            convention: conv,
        },
    })
}

/// Chain member by degree: 0 is the MLE, 1 James-Stein, 2..=4 [`poly`].
pub fn by_degree(
    degree: usize,
    p: usize,
    omega: f64,
    conv: CoefficientConvention,
) -> Result<ShrinkagePolynomial> {
    if degree == 0 {
        mle(omega)
    } else {
        poly(degree, p, omega, conv)
    }
}

impl ShrinkagePolynomial {
    /// Arbitrary coefficients, e.g. `vec![-a]` for `(1 - a/||x||^2) x`.
    pub fn custom(omega: f64, coeffs: Vec<f64>, dimension: Option<usize>) -> Result<Self> {
        check_omega(omega)?;
        if let Some(bad) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "coefficients must be finite, got {bad}"
            )));
        }
        Ok(Self {
            omega,
            coeffs,
            dimension,
            family: Family::Custom,
        })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    /// Dimension the coefficients were tuned for, if any.
    pub fn dimension(&self) -> Option<usize> {
        self.dimension
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn label(&self) -> String {
        self.family.label()
    }

    /// The same estimator keeping only its first `degree` coefficients.
    pub fn truncated(&self, degree: usize) -> ShrinkagePolynomial {
        let coeffs: Vec<f64> = self.coeffs.iter().copied().take(degree).collect();
        let family = match (self.family, coeffs.len()) {
            (Family::Mle, _) | (_, 0) => Family::Mle,
            (Family::JamesStein, _) | (Family::Poly { .. }, 1) => Family::JamesStein,
            (Family::Poly { convention, .. }, d) => Family::Poly {
                degree: d,
                convention,
            },
            (Family::Custom, _) => Family::Custom,
        };
        ShrinkagePolynomial {
            omega: self.omega,
            coeffs,
            dimension: self.dimension,
            family,
        }
    }

    /// `1 + sum_m gamma_m / norm_sq^m`.
    pub fn shrinkage_factor(&self, norm_sq: f64) -> Result<f64> {
        if self.coeffs.is_empty() {
            return Ok(1.0);
        }
        if norm_sq == 0.0 {
            return Err(Error::SingularObservation);
        }
        let inv = 1.0 / norm_sq;
        // Horner in 1/||x||^2
        let tail = self
            .coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, &g| (acc + g) * inv);
        Ok(1.0 + tail)
    }

    fn check_len(&self, len: usize) -> Result<()> {
        match self.dimension {
            Some(p) if p != len => Err(Error::LengthMismatch {
                expected: p,
                actual: len,
            }),
            _ => Ok(()),
        }
    }

    pub fn estimate(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; x.len()];
        self.estimate_into(x, &mut out)?;
        Ok(out)
    }

    /// Writes `delta(x)` into `out`; `out.len()` must equal `x.len()`.
    pub fn estimate_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_len(x.len())?;
        if out.len() != x.len() {
            return Err(Error::LengthMismatch {
                expected: x.len(),
                actual: out.len(),
            });
        }
        let norm_sq: f64 = x.iter().map(|v| v * v).sum();
        let factor = self.shrinkage_factor(norm_sq)?;
        for (o, &xi) in out.iter_mut().zip(x) {
            *o = factor * xi;
        }
        Ok(())
    }
}
