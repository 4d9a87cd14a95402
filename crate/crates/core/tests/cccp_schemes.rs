use approx::assert_abs_diff_eq;

use cran_async::cccp::initialize;
use cran_async::model::{check_feasibility, sample_channels};
use cran_async::{run_cccp, run_scheme_suite, CccpOptions, ChannelSet, Scheme, SystemConfig};

#[test]
fn every_starting_point_is_feasible() {
    for (users, delay) in [(1, 0), (2, 1), (3, 2)] {
        let cfg = SystemConfig::symmetric(users, 2, 2, delay, 4.0);
        for scheme in Scheme::all() {
            let sol = initialize(&cfg, &scheme);
            let report = check_feasibility(&sol, &cfg, 1e-9);
            assert!(report.feasible, "{scheme} start infeasible: {report:?}");
        }
    }
}

#[test]
fn single_user_robust_design_reaches_coherent_combining() {
    // One UE, scalar links, no delay: the optimum fully correlates both RRHs
    // and the rate is log2(1 + (√P1 |h1| + √P2 |h2|)²).
    for (g1, g2, p) in [(1.0, 1.0, 1.0), (0.7, 1.3, 4.0), (0.2, 0.9, 10.0)] {
        let cfg = SystemConfig::scalar(1, 0, p);
        let ch = ChannelSet::from_scalars(&[(g1, g2)]);
        let trace = run_cccp(&cfg, &ch, &Scheme::Robust, &CccpOptions::default()).unwrap();
        let expected = (1.0 + (p.sqrt() * (g1 + g2)).powi(2)).log2();
        assert_abs_diff_eq!(trace.final_report.min_rate, expected, epsilon = 1e-4);
    }
}

#[test]
fn without_delay_robust_and_non_robust_agree() {
    for seed in 0..4 {
        let cfg = SystemConfig::symmetric(2, 2, 1, 0, 10.0);
        let ch = sample_channels(&cfg, 40 + seed);
        let suite = run_scheme_suite(&cfg, &ch, &CccpOptions::default(), None);
        let robust = suite.min_rate(&Scheme::Robust).unwrap();
        let naive = suite.min_rate(&Scheme::NonRobustCoop).unwrap();
        assert!(
            (robust - naive).abs() < 1e-3 * robust.max(1.0),
            "seed {seed}: {robust} vs {naive}"
        );
    }
}

#[test]
fn genie_at_the_limiting_delay_beats_the_robust_design() {
    for seed in 0..3 {
        let cfg = SystemConfig::symmetric(2, 1, 1, 1, 10.0);
        let ch = sample_channels(&cfg, 70 + seed);
        let suite = run_scheme_suite(&cfg, &ch, &CccpOptions::default(), None);
        let robust = suite.get(&Scheme::Robust).unwrap();
        let genie = suite.get(&Scheme::SyncGenie { known_delay: 0 }).unwrap();
        let Scheme::SyncGenie { known_delay } = genie.scheme else {
            unreachable!()
        };
        assert_eq!(known_delay, robust.report().argmin_delay());
        assert!(
            genie.report().min_rate >= robust.report().min_rate - 1e-6,
            "seed {seed}"
        );
    }
}

#[test]
fn runs_are_deterministic() {
    let cfg = SystemConfig::symmetric(2, 1, 2, 2, 3.0);
    let ch = sample_channels(&cfg, 123);
    let a = run_cccp(&cfg, &ch, &Scheme::Robust, &CccpOptions::default()).unwrap();
    let b = run_cccp(&cfg, &ch, &Scheme::Robust, &CccpOptions::default()).unwrap();
    assert_eq!(a.objective, b.objective);
    assert_eq!(a.final_solution, b.final_solution);
}

#[test]
fn zero_power_gives_zero_rate() {
    let cfg = SystemConfig::symmetric(2, 1, 1, 1, 0.0);
    let ch = sample_channels(&cfg, 3);
    for scheme in [Scheme::Robust, Scheme::NonCooperative, Scheme::TxSelection] {
        match run_cccp(&cfg, &ch, &scheme, &CccpOptions::default()) {
            Ok(trace) => assert_abs_diff_eq!(trace.final_report.min_rate, 0.0, epsilon = 1e-9),
            Err(e) => panic!("{scheme}: {e}"),
        }
    }
}

#[test]
fn out_of_range_genie_delay_is_rejected() {
    let cfg = SystemConfig::scalar(1, 1, 1.0);
    let ch = ChannelSet::from_scalars(&[(1.0, 1.0)]);
    let err = run_cccp(
        &cfg,
        &ch,
        &Scheme::SyncGenie { known_delay: 2 },
        &CccpOptions::default(),
    );
    assert!(err.is_err());
}
