//! Harness-level checks: each lemma verification passes on representative
//! runs, reports merge deterministically, and serialize losslessly.

mod common;

use hypertorus_core::{
    check_alpha_linear_bound, check_arclength_bound, check_limit_approach, check_monotonicity,
    check_no_stall, check_symmetry_solutions, integrate, radius_bound, run_suite,
    IntegrationControls, LemmaReport, Params, State, SuiteConfig,
};

const P2: Params = Params { n: 2, h: -0.2 };

fn run(r0: f64, params: Params) -> hypertorus_core::Trajectory {
    integrate(State::initial(r0), params, &IntegrationControls::default()).unwrap()
}

#[test]
fn monotonicity_passes_on_reference_runs() {
    for (p, r0) in [
        (P2, 1.3),
        (Params { n: 3, h: -0.1 }, 1.0),
        (Params { n: 2, h: -0.05 }, 0.7),
    ] {
        let report = check_monotonicity(&run(r0, p));
        assert!(report.passed(), "n={} H={} r0={r0}: {report:?}", p.n, p.h);
        assert!(report.worst_margin.unwrap() > 0.0);
    }
}

#[test]
fn monotonicity_margin_at_the_start_matches_the_closed_form() {
    // alpha'(0) = (2n-1) cot(r0) + H; near the radius bound it is the
    // smallest of the three signed rates over the whole run.
    let r0 = radius_bound(&P2) - 1e-3;
    let traj = run(r0, P2);
    let expected = 3.0 * (r0.cos() / r0.sin()) + P2.h;
    let margin = check_monotonicity(&traj).worst_margin.unwrap();
    assert!(
        margin <= expected + 1e-12,
        "margin {margin} above the initial alpha' {expected}"
    );
    assert!(margin > 0.0);
}

#[test]
fn arclength_bound_margin_positive_across_a_sweep() {
    let a = radius_bound(&P2);
    let mut merged = LemmaReport::new("arclength");
    for i in 0..100 {
        let r0 = 0.05 + (a - 1e-4 - 0.05) * (i as f64) / 99.0;
        merged.merge(check_arclength_bound(&run(r0, P2)));
    }
    assert_eq!(merged.cases_run, 100);
    assert!(merged.passed());
    assert!(merged.worst_margin.unwrap() > 0.0);
}

#[test]
fn linear_bound_holds_on_the_negative_margin_segment() {
    let report = check_alpha_linear_bound(&run(1.3, P2));
    assert_eq!(report.cases_run, 1);
    assert!(report.passed(), "{report:?}");
    // at H = 0 the stall margin starts at zero and the check is vacuous
    let p0 = Params { n: 2, h: 0.0 };
    let report = check_alpha_linear_bound(&run(1.2, p0));
    assert_eq!(report.cases_run, 0);
    assert_eq!(report.vacuous_cases, 1);
}

#[test]
fn no_stall_sweep_is_clean() {
    let c = IntegrationControls::default();
    let a = radius_bound(&P2);
    let report = check_no_stall(&P2, 0.9, a - 1e-4, 100, &c).unwrap();
    assert!(report.passed(), "{report:?}");
    assert!(report.cases_run > 0, "hypothesis set must not be empty");
    assert!(report.worst_margin.unwrap() > 0.0);
}

#[test]
fn limit_approach_deviations_shrink() {
    let c = IntegrationControls::default();
    let report = check_limit_approach(&P2, &c).unwrap();
    assert_eq!(report.cases_run, 4);
    assert!(report.passed(), "{report:?}");
}

#[test]
fn symmetry_residuals_small_on_reference_runs() {
    for (p, r0) in [(P2, 1.3), (Params { n: 3, h: -0.1 }, 1.2)] {
        let report = check_symmetry_solutions(&run(r0, p), 256);
        assert_eq!(report.cases_run, 4); // two reflections, two alpha shifts
        assert!(report.passed(), "n={} H={} r0={r0}: {report:?}", p.n, p.h);
    }
}

#[test]
fn suite_reports_serialize_and_round_trip() {
    // A small sweep keeps this quick; the full default grid runs in the
    // acceptance suite and the CLI.
    let config = SuiteConfig {
        n_values: vec![2],
        h_values: vec![-0.2],
        r0_count: 8,
        symmetry_points: 32,
    };
    let reports = run_suite(&config, &IntegrationControls::default()).unwrap();
    assert_eq!(reports.len(), 7);
    for r in &reports {
        assert!(r.cases_passed <= r.cases_run);
        assert!(
            r.passed(),
            "{}: {} of {} cases passed",
            r.lemma_id,
            r.cases_passed,
            r.cases_run
        );
    }
    let json = serde_json::to_string(&reports).unwrap();
    let back: Vec<LemmaReport> = serde_json::from_str(&json).unwrap();
    assert_eq!(reports, back);

    // reproducibility of the worst margins across runs
    let again = run_suite(&config, &IntegrationControls::default()).unwrap();
    for (a, b) in reports.iter().zip(&again) {
        assert_eq!(a.lemma_id, b.lemma_id);
        match (a.worst_margin, b.worst_margin) {
            (Some(x), Some(y)) => assert!((x - y).abs() < 1e-9),
            (x, y) => assert_eq!(x, y),
        }
    }
}
