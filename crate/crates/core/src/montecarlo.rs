//! Seeded Monte Carlo estimation of balanced-loss risk.
//!
//! Replications are split into fixed-size chunks. Chunk `i` draws from its
//! own ChaCha8 stream seeded with `seed ^ i`, chunks run on the rayon pool,
//! and the per-chunk moments are merged in chunk order. The output therefore
//! depends only on the plan, never on the number of worker threads. All
//! estimators in a plan see the same draws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::ShrinkagePolynomial;
use crate::risk::{BalancedLoss, RiskMethod, RiskReport};

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationPlan {
    pub p: usize,
    /// `||theta||^2`; `theta` is realised as `(sqrt(lambda), 0, ..., 0)`.
    pub lambda: f64,
    pub omega: f64,
    pub estimators: Vec<ShrinkagePolynomial>,
    pub replications: u64,
    pub seed: u64,
    pub chunk_size: usize,
}

impl SimulationPlan {
    pub const DEFAULT_CHUNK_SIZE: usize = 4096;

    pub fn new(
        p: usize,
        lambda: f64,
        omega: f64,
        estimators: Vec<ShrinkagePolynomial>,
        replications: u64,
        seed: u64,
    ) -> Self {
        Self {
            p,
            lambda,
            omega,
            estimators,
            replications,
            seed,
            chunk_size: Self::DEFAULT_CHUNK_SIZE,
        }
    }

    pub fn with_chunk_size(mut self, chunk_size: usize) -> Self {
        self.chunk_size = chunk_size;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidParameter(msg));
        if self.p == 0 {
            return invalid("dimension p must be >= 1".into());
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return invalid(format!("lambda must be finite and >= 0, got {}", self.lambda));
        }
        BalancedLoss::new(self.omega)?;
        if self.replications == 0 {
            return invalid("replications must be >= 1".into());
        }
        if self.chunk_size == 0 {
            return invalid("chunk_size must be >= 1".into());
        }
        if self.estimators.is_empty() {
            return invalid("plan has no estimators".into());
        }
        for est in &self.estimators {
            if let Some(d) = est.dimension() {
                if d != self.p {
                    return Err(Error::LengthMismatch {
                        expected: self.p,
                        actual: d,
                    });
                }
            }
        }
        Ok(())
    }

    /// The canonical mean vector `(sqrt(lambda), 0, ..., 0)`.
    pub fn theta(&self) -> Vec<f64> {
        let mut theta = vec![0.0; self.p];
        theta[0] = self.lambda.sqrt();
        theta
    }
}

/// Sample mean of the loss with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(replications)`; 0 for a single draw.
    pub stderr: f64,
    pub replications: u64,
}

impl McEstimate {
    pub fn to_report(&self, plan: &SimulationPlan, est: &ShrinkagePolynomial) -> RiskReport {
        let mut report = RiskReport::new(
            self.mean,
            RiskMethod::MonteCarlo,
            plan.p,
            plan.lambda,
            est,
            Some(self.stderr),
        );
        // the loss weight is the plan's, not necessarily the one the
        // coefficients were tuned for
        report.omega = plan.omega;
        report.ratio_to_mle = self.mean / crate::risk::mle_risk(plan.p, plan.omega);
        report
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let (na, nb) = (self.n as f64, other.n as f64);
        self.mean += delta * nb / n as f64;
        self.m2 += other.m2 + delta * delta * na * nb / n as f64;
        self.n = n;
    }

    fn estimate(&self) -> McEstimate {
        let stderr = if self.n > 1 {
            (self.m2 / (self.n - 1) as f64).sqrt() / (self.n as f64).sqrt()
        } else {
            0.0
        };
        McEstimate {
            mean: self.mean,
            stderr,
            replications: self.n,
        }
    }
}

fn run_chunk(
    plan: &SimulationPlan,
    theta: &[f64],
    loss: &BalancedLoss,
    index: u64,
    count: u64,
) -> Result<Vec<Moments>> {
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed ^ index);
    let mut acc = vec![Moments::default(); plan.estimators.len()];
    let mut x = vec![0.0; plan.p];
    let mut delta = vec![0.0; plan.p];
    for _ in 0..count {
        for (xi, &t) in x.iter_mut().zip(theta) {
            let z: f64 = rng.sample(StandardNormal);
            *xi = t + z;
        }
        for (est, m) in plan.estimators.iter().zip(acc.iter_mut()) {
            est.estimate_into(&x, &mut delta)?;
            m.push(loss.evaluate(&delta, &x, theta)?);
        }
    }
    Ok(acc)
}

/// Risk estimates at an explicit mean vector `theta` (length `plan.p`).
pub fn simulate_risk_at(plan: &SimulationPlan, theta: &[f64]) -> Result<Vec<McEstimate>> {
    plan.validate()?;
    if theta.len() != plan.p {
        return Err(Error::LengthMismatch {
            expected: plan.p,
            actual: theta.len(),
        });
    }
    let loss = BalancedLoss::new(plan.omega)?;
    let chunk = plan.chunk_size as u64;
    let n_chunks = plan.replications.div_ceil(chunk);
    let partials: Vec<Vec<Moments>> = (0..n_chunks)
        .into_par_iter()
        .map(|i| {
            let count = chunk.min(plan.replications - i * chunk);
            run_chunk(plan, theta, &loss, i, count)
        })
        .collect::<Result<_>>()?;

    let mut total = vec![Moments::default(); plan.estimators.len()];
    for part in &partials {
        for (t, m) in total.iter_mut().zip(part) {
            t.merge(m);
        }
    }
    Ok(total.iter().map(Moments::estimate).collect())
}

/// One estimate per estimator in `plan`, with `theta = (sqrt(lambda), 0, ..., 0)`.
pub fn simulate_risk(plan: &SimulationPlan) -> Result<Vec<McEstimate>> {
    plan.validate()?;
    simulate_risk_at(plan, &plan.theta())
}

/// Realises `theta` once along `e_1` and once along a seeded random unit
/// vector, and reports whether the two risk estimates agree within five
/// combined standard errors.
pub fn rotation_invariance_check(
    p: usize,
    lambda: f64,
    omega: f64,
    est: &ShrinkagePolynomial,
    seed: u64,
    reps: u64,
) -> Result<bool> {
    let aligned = SimulationPlan::new(p, lambda, omega, vec![est.clone()], reps, seed);
    aligned.validate()?;
    let first = simulate_risk(&aligned)?[0];

    let mut dir_rng = ChaCha8Rng::seed_from_u64(seed.rotate_left(32) ^ 0x9e37_79b9_7f4a_7c15);
    let mut u: Vec<f64> = (0..p).map(|_| dir_rng.sample(StandardNormal)).collect();
    let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    let scale = lambda.sqrt() / norm;
    u.iter_mut().for_each(|v| *v *= scale);

    // high bits keep the two chunk stream families disjoint
    let rotated = SimulationPlan {
        seed: seed ^ 0xa5a5_a5a5_0000_0000,
        ..aligned
    };
    let second = simulate_risk_at(&rotated, &u)?[0];
    let combined = (first.stderr.powi(2) + second.stderr.powi(2)).sqrt();
    Ok((first.mean - second.mean).abs() <= 5.0 * combined)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{james_stein, mle};

    #[test]
    fn welford_merge_matches_single_pass() {
        let data: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        let mut whole = Moments::default();
        data.iter().for_each(|&x| whole.push(x));
        let mut merged = Moments::default();
        for part in data.chunks(77) {
            let mut m = Moments::default();
            part.iter().for_each(|&x| m.push(x));
            merged.merge(&m);
        }
        assert_eq!(whole.n, merged.n);
        assert!((whole.mean - merged.mean).abs() < 1e-12);
        assert!((whole.m2 - merged.m2).abs() < 1e-8 * whole.m2);
    }

    #[test]
    fn mle_risk_within_four_stderr() {
        let plan = SimulationPlan::new(6, 3.0, 0.2, vec![mle(0.2).unwrap()], 50_000, 11);
        let est = simulate_risk(&plan).unwrap()[0];
        assert_eq!(est.replications, 50_000);
        assert!((est.mean - 0.8 * 6.0).abs() <= 4.0 * est.stderr);
    }

    #[test]
    fn invalid_plans_are_rejected() {
        let js = james_stein(5, 0.0).unwrap();
        let base = SimulationPlan::new(5, 1.0, 0.0, vec![js.clone()], 10, 0);
        assert!(base.validate().is_ok());
        assert!(SimulationPlan { replications: 0, ..base.clone() }.validate().is_err());
        assert!(SimulationPlan { chunk_size: 0, ..base.clone() }.validate().is_err());
        assert!(SimulationPlan { lambda: -1.0, ..base.clone() }.validate().is_err());
        assert!(SimulationPlan { omega: 1.0, ..base.clone() }.validate().is_err());
        assert!(SimulationPlan { estimators: vec![], ..base.clone() }.validate().is_err());
        assert!(matches!(
            SimulationPlan { p: 6, ..base.clone() }.validate(),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(simulate_risk_at(&base, &[0.0; 4]).is_err());
    }

    #[test]
    fn single_replication_has_zero_stderr() {
        let plan = SimulationPlan::new(3, 0.0, 0.0, vec![mle(0.0).unwrap()], 1, 5);
        let est = simulate_risk(&plan).unwrap()[0];
        assert_eq!(est.stderr, 0.0);
        assert!(est.mean > 0.0);
    }
}
