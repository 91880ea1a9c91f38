use polyshrink::estimators::{by_degree, poly, CoefficientConvention, ShrinkagePolynomial};
use polyshrink::ncx2::{self, NoncentralChiSquare, SeriesControl};
use polyshrink::risk::{exact_risk_general, BalancedLoss};
use proptest::prelude::*;

fn ctrl() -> SeriesControl {
    SeriesControl::default()
}

fn convention() -> impl Strategy<Value = CoefficientConvention> {
    prop_oneof![
        Just(CoefficientConvention::Theorem),
        Just(CoefficientConvention::Simulation)
    ]
}

/// `H = I - 2 v v^T / |v|^2` applied to `x`.
fn householder(v: &[f64], x: &[f64]) -> Vec<f64> {
    let vv: f64 = v.iter().map(|a| a * a).sum();
    let vx: f64 = v.iter().zip(x).map(|(a, b)| a * b).sum();
    x.iter().zip(v).map(|(xi, vi)| xi - 2.0 * vx / vv * vi).collect()
}

fn vector(p: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, p)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn estimators_commute_with_rotations(
        (x, v) in (3usize..24).prop_flat_map(|p| (vector(p), vector(p))),
        degree in 0usize..=4,
        omega in 0.0..0.99f64,
        conv in convention(),
    ) {
        let p = x.len();
        prop_assume!(v.iter().map(|a| a * a).sum::<f64>() > 1e-6);
        prop_assume!(x.iter().map(|a| a * a).sum::<f64>() > 1e-3);
        let Ok(est) = by_degree(degree, p, omega, conv) else { return Ok(()) };
        let rotated_after = householder(&v, &est.estimate(&x).unwrap());
        let rotated_before = est.estimate(&householder(&v, &x)).unwrap();
        for (a, b) in rotated_after.iter().zip(&rotated_before) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn loss_is_rotation_invariant(
        (x, t, v) in (2usize..12).prop_flat_map(|p| (vector(p), vector(p), vector(p))),
        omega in 0.0..0.99f64,
    ) {
        prop_assume!(v.iter().map(|a| a * a).sum::<f64>() > 1e-6);
        prop_assume!(x.iter().map(|a| a * a).sum::<f64>() > 1e-3);
        let p = x.len();
        let loss = BalancedLoss::new(omega).unwrap();
        let est = by_degree(1, p.max(3), omega, CoefficientConvention::Theorem).unwrap();
        let est = ShrinkagePolynomial::custom(omega, est.coeffs().to_vec(), None).unwrap();
        let d = est.estimate(&x).unwrap();
        let base = loss.evaluate(&d, &x, &t).unwrap();
        let (hx, ht) = (householder(&v, &x), householder(&v, &t));
        let hd = est.estimate(&hx).unwrap();
        let rotated = loss.evaluate(&hd, &hx, &ht).unwrap();
        prop_assert!((base - rotated).abs() <= 1e-9 * (1.0 + base));
    }

    #[test]
    fn product_identity(p in 3usize..40, lambda in 0.0..80.0f64, m in 1u32..8) {
        prop_assume!(p > 2 * m as usize);
        let d = NoncentralChiSquare::new(p, lambda).unwrap();
        let a = d.inverse_moment(m, &ctrl()).unwrap();
        let b = d.moment(-(m as f64), &ctrl()).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * b);
    }

    #[test]
    fn mean_identity(p in 1usize..60, lambda in 0.0..500.0f64) {
        let d = NoncentralChiSquare::new(p, lambda).unwrap();
        let target = p as f64 + lambda;
        prop_assert!((d.moment(1.0, &ctrl()).unwrap() - target).abs() <= 1e-10 * target);
    }

    #[test]
    fn moment_ratio_nondecreasing(
        p in 8usize..30,
        (r, s) in (-3.5..-0.5f64).prop_flat_map(|r| (Just(r), -3.9..r)),
        lambda in 0.0..40.0f64,
        step in 0.01..5.0f64,
    ) {
        let lo = ncx2::moment_ratio(p, r, s, lambda, &ctrl()).unwrap();
        let hi = ncx2::moment_ratio(p, r, s, lambda + step, &ctrl()).unwrap();
        prop_assert!(hi >= lo - 1e-12 * lo.abs());
    }

    #[test]
    fn moments_are_log_convex_in_order(p in 9usize..30, lambda in 0.0..30.0f64, v in -3.5..3.0f64) {
        // Lyapunov: E[U^v]^2 <= E[U^(v-h)] E[U^(v+h)]
        let d = NoncentralChiSquare::new(p, lambda).unwrap();
        let h = 0.5;
        let mid = d.moment(v, &ctrl()).unwrap();
        let lo = d.moment(v - h, &ctrl()).unwrap();
        let hi = d.moment(v + h, &ctrl()).unwrap();
        prop_assert!(mid * mid <= lo * hi * (1.0 + 1e-12));
    }

    #[test]
    fn degree_nesting(p in 15usize..40, omega in 0.0..0.99f64, conv in convention()) {
        let top = poly(4, p, omega, conv).unwrap();
        for d in 1..4 {
            let lower = by_degree(d, p, omega, conv).unwrap();
            let truncated = top.truncated(d);
            prop_assert_eq!(truncated.coeffs(), lower.coeffs());
        }
        prop_assert_eq!(top.truncated(0).coeffs().len(), 0);
    }

    #[test]
    fn ratio_scales_with_one_minus_omega(
        p in 15usize..30,
        degree in 1usize..=4,
        omega in 0.0..0.99f64,
        lambda in 0.0..30.0f64,
        conv in convention(),
    ) {
        // every coefficient carries a factor (1 - w)
        let at = |w: f64| {
            let est = by_degree(degree, p, w, conv).unwrap();
            exact_risk_general(&est, p, lambda, &ctrl()).unwrap().ratio_to_mle
        };
        let expected = 1.0 - (1.0 - omega) * (1.0 - at(0.0));
        prop_assert!((at(omega) - expected).abs() <= 1e-12);
    }

    #[test]
    fn shrinkage_factor_matches_direct_sum(
        coeffs in prop::collection::vec(-50.0..50.0f64, 0..6),
        norm_sq in 0.1..100.0f64,
    ) {
        let est = ShrinkagePolynomial::custom(0.0, coeffs.clone(), None).unwrap();
        let direct = 1.0 + coeffs.iter().enumerate().map(|(i, g)| g / norm_sq.powi(i as i32 + 1)).sum::<f64>();
        let f = est.shrinkage_factor(norm_sq).unwrap();
        prop_assert!((f - direct).abs() <= 1e-10 * (1.0 + direct.abs()));
    }

    #[test]
    fn chain_dominates_under_theorem(p in 15usize..40, omega in 0.0..0.95f64, lambda in 0.0..60.0f64) {
        let ratios: Vec<f64> = (1..=4)
            .map(|d| {
                let est = by_degree(d, p, omega, CoefficientConvention::Theorem).unwrap();
                exact_risk_general(&est, p, lambda, &ctrl()).unwrap().ratio_to_mle
            })
            .collect();
        prop_assert!(ratios[0] < 1.0);
        prop_assert!(ratios[1] <= ratios[0] + 1e-12);
        prop_assert!(ratios[2] <= ratios[1] + 1e-12);
        if p >= 17 {
            prop_assert!(ratios[3] <= ratios[2] + 1e-12);
        }
    }
}

#[test]
fn degree_four_loses_to_degree_three_at_fifteen_and_sixteen() {
    // p^2 - 28p + 188 < 0 here, so the quartic coefficient has the wrong sign
    for (p, lambda) in [(15usize, 4.41), (16, 4.05)] {
        let ratio = |d| {
            let est = by_degree(d, p, 0.0, CoefficientConvention::Theorem).unwrap();
            exact_risk_general(&est, p, lambda, &ctrl()).unwrap().ratio_to_mle
        };
        let excess = ratio(4) - ratio(3);
        assert!(excess > 5e-5, "p {p}: excess {excess}");
        assert!(by_degree(4, p, 0.0, CoefficientConvention::Theorem).unwrap().coeffs()[3] < 0.0);
    }
}
