//! Polynomial shrinkage estimators of a multivariate normal mean.
//!
//! For `X ~ N_p(theta, I_p)` the estimators here have the form
//!
//! ```text
//!     delta(x) = (1 + sum_{m=1..M} gamma_m / ||x||^(2m)) x
//! ```
//!
//! and are compared under the balanced loss
//! `L(delta, theta) = w ||delta - x||^2 + (1 - w) ||delta - theta||^2`.
//! Their risks reduce to inverse moments of `||X||^2`, a non-central
//! chi-square variable, which [`ncx2`] evaluates through its Poisson mixture
//! representation. [`risk`] turns those moments into exact risks and
//! [`montecarlo`] provides a seeded simulation oracle for them.
//!
//! Noncentrality convention: `lambda = ||theta||^2`, mixing index
//! `K ~ Poisson(lambda / 2)`, so `E||X||^2 = p + lambda`.

pub mod cli;
pub mod error;
pub mod estimators;
pub mod montecarlo;
pub mod ncx2;
pub mod reference;
pub mod risk;
pub mod verify;

pub use error::{Error, Result};
pub use estimators::{CoefficientConvention, Family, ShrinkagePolynomial};
pub use montecarlo::{McEstimate, SimulationPlan};
pub use ncx2::{NoncentralChiSquare, SeriesControl};
pub use risk::{BalancedLoss, RiskMethod, RiskReport};

/// Library version, echoed into run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
