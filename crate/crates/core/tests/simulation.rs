use polyshrink::estimators::{by_degree, james_stein, CoefficientConvention};
use polyshrink::montecarlo::{rotation_invariance_check, simulate_risk, SimulationPlan};
use polyshrink::ncx2::SeriesControl;
use polyshrink::risk::exact_risk_general;

fn plan(reps: u64, seed: u64) -> SimulationPlan {
    let ests = (1..=3)
        .map(|d| by_degree(d, 14, 0.2, CoefficientConvention::Simulation).unwrap())
        .collect();
    SimulationPlan::new(14, 5.0019, 0.2, ests, reps, seed)
}

#[test]
fn independent_of_thread_count() {
    let p = plan(30_000, 17);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate_risk(&p).unwrap())
    };
    let one = run(1);
    for threads in [2, 5] {
        let many = run(threads);
        for (a, b) in one.iter().zip(&many) {
            assert_eq!(a.mean.to_bits(), b.mean.to_bits());
            assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
        }
    }
}

#[test]
fn chunk_size_changes_streams_but_not_the_estimate() {
    let ctrl = SeriesControl::default();
    let base = plan(200_000, 3);
    for chunk in [1000, 4096, 65_536] {
        let p = base.clone().with_chunk_size(chunk);
        for (est, mc) in p.estimators.iter().zip(simulate_risk(&p).unwrap()) {
            let exact = exact_risk_general(est, 14, 5.0019, &ctrl).unwrap().risk;
            assert!((mc.mean - exact).abs() <= 4.0 * mc.stderr, "chunk {chunk}");
        }
    }
    // a partial trailing chunk is counted exactly
    let odd = plan(10_001, 3).with_chunk_size(4096);
    assert!(simulate_risk(&odd).unwrap().iter().all(|m| m.replications == 10_001));
}

#[test]
fn stderr_scales_as_inverse_root_n() {
    let small = simulate_risk(&plan(40_000, 8)).unwrap();
    let large = simulate_risk(&plan(640_000, 8)).unwrap();
    for (s, l) in small.iter().zip(&large) {
        let ratio = s.stderr / l.stderr;
        assert!((ratio - 4.0).abs() < 0.4, "stderr ratio {ratio}");
    }
}

#[test]
fn common_random_numbers_order_the_chain() {
    // with shared draws the per-run estimates inherit the exact ordering
    let results = simulate_risk(&plan(100_000, 21)).unwrap();
    assert!(results[1].mean < results[0].mean);
    assert!(results[2].mean < results[1].mean);
}

#[test]
fn seeds_change_the_stream() {
    let a = simulate_risk(&plan(5000, 1)).unwrap();
    let b = simulate_risk(&plan(5000, 2)).unwrap();
    assert_ne!(a[0].mean.to_bits(), b[0].mean.to_bits());
}

#[test]
fn risk_does_not_depend_on_direction() {
    let js = james_stein(9, 0.3).unwrap();
    for seed in [5, 6] {
        assert!(rotation_invariance_check(9, 7.0, 0.3, &js, seed, 40_000).unwrap());
    }
}
