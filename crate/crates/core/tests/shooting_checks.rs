//! Shooting checks: basin classification, bracket scans, branch bisection,
//! and the limiting behavior toward a(H). Reference radii were frozen from
//! an independent high-order integration with bisection to 1e-12.

mod common;

use common::assert_close;
use hypertorus_core::{
    classify, estimate_delta, find_branches, radius_bound, scan, IntegrationControls, OutcomeKind,
    Params, ShootError, ARCLENGTH_BOUND,
};
use std::f64::consts::FRAC_PI_2;

const P2: Params = Params { n: 2, h: -0.2 };
const RHO_1: f64 = 1.297305301436;
const RHO_2: f64 = 1.440885353796;

fn controls() -> IntegrationControls {
    IntegrationControls::default()
}

#[test]
fn classification_between_and_beyond_the_branches() {
    let c = controls();
    // between the branches: HitR with alpha still negative
    let (kind, term) = classify(1.35, &P2, &c).unwrap();
    assert_eq!(kind, OutcomeKind::HitR);
    assert!(term.alpha < 0.0);
    assert_close(term.alpha, -0.127563, 1e-5, "alpha at r0=1.35");
    // between the upper branch and a(H): HitA with r short of pi/2
    let (kind, term) = classify(1.48, &P2, &c).unwrap();
    assert_eq!(kind, OutcomeKind::HitA);
    assert!(term.r < FRAC_PI_2);
    assert_close(term.r, 1.543549, 1e-5, "r at r0=1.48");
    // near the branch radius both residuals are small at the quoted scale
    let (_, term) = classify(RHO_1, &P2, &c).unwrap();
    assert!((term.r - FRAC_PI_2).abs() < 1e-8);
    assert!(term.alpha.abs() < 1e-8);
}

#[test]
fn scan_finds_two_brackets_for_the_reference_parameters() {
    let res = scan(&P2, 0.9, 1.50, 200, &controls()).unwrap();
    assert_eq!(res.grid.len(), 200);
    assert_eq!(res.brackets.len(), 2);
    for (lo, hi) in &res.brackets {
        let klo = res.grid.iter().find(|p| p.r0 == *lo).unwrap().kind;
        let khi = res.grid.iter().find(|p| p.r0 == *hi).unwrap().kind;
        assert_ne!(klo, khi);
    }
    assert!(res.brackets[0].0 < RHO_1 && RHO_1 < res.brackets[0].1);
    assert!(res.brackets[1].0 < RHO_2 && RHO_2 < res.brackets[1].1);
    // grid is sorted
    assert!(res.grid.windows(2).all(|w| w[0].r0 < w[1].r0));
}

#[test]
fn scan_at_zero_mean_curvature_finds_the_minimal_bracket() {
    let p = Params { n: 2, h: 0.0 };
    let res = scan(&p, 0.9, 1.50, 200, &controls()).unwrap();
    assert!(!res.brackets.is_empty());
}

#[test]
fn near_bound_outcomes_are_hit_alpha() {
    let c = controls();
    let a = radius_bound(&P2);
    let (kind, _) = classify(a - 1e-3, &P2, &c).unwrap();
    assert_eq!(kind, OutcomeKind::HitA);
}

#[test]
fn branches_match_the_reference_radii() {
    let res = find_branches(&P2, &controls(), 1e-8).unwrap();
    assert_eq!(res.len(), 2);
    assert_close(res[0].rho, RHO_1, 2e-6, "rho_1");
    assert_close(res[1].rho, RHO_2, 2e-6, "rho_2");
    for b in &res {
        assert!(b.residual_r < 1e-6, "residual_r {}", b.residual_r);
        assert!(b.residual_alpha < 1e-6, "residual_alpha {}", b.residual_alpha);
        assert!(b.s_star < ARCLENGTH_BOUND);
    }
    assert_close(res[0].s_star, 0.757517200547, 1e-6, "s* of branch 1");
    assert_close(res[1].s_star, 0.780100794589, 1e-6, "s* of branch 2");
}

#[test]
fn two_branch_ordering_against_the_scan_grid() {
    // For each H the nearest grid representatives below/above the branches
    // respect r0' < rho_1 < r0'' < rho_2 < a(H).
    let c = controls();
    for &h in &[-0.05, -0.1, -0.2] {
        let p = Params { n: 2, h };
        let a = radius_bound(&p);
        let res = find_branches(&p, &c, 1e-8).unwrap();
        assert_eq!(res.len(), 2, "H={h}: expected two branches");
        let (rho1, rho2) = (res[0].rho, res[1].rho);
        let grid = scan(&p, 0.05, a - 1e-4, 256, &c).unwrap().grid;
        let r0_prime = grid
            .iter()
            .filter(|g| g.kind == OutcomeKind::HitA && g.r0 < rho1)
            .map(|g| g.r0)
            .fold(f64::NEG_INFINITY, f64::max);
        let r0_double_prime = grid
            .iter()
            .filter(|g| g.kind == OutcomeKind::HitR)
            .map(|g| g.r0)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(
            r0_prime < rho1 && rho1 < r0_double_prime && r0_double_prime < rho2 && rho2 < a,
            "H={h}: ordering violated: {r0_prime} {rho1} {r0_double_prime} {rho2} {a}"
        );
    }
}

#[test]
fn small_h_and_higher_dimensions_have_two_branches() {
    let c = controls();
    let res = find_branches(&Params { n: 2, h: -0.01 }, &c, 1e-8).unwrap();
    assert_eq!(res.len(), 2);
    assert!(res.iter().all(|b| b.s_star < ARCLENGTH_BOUND));
    assert_close(res[0].rho, 1.2338364620, 1e-5, "n=2 H=-0.01 rho_1");
    assert_close(res[1].rho, 1.5665224450, 1e-5, "n=2 H=-0.01 rho_2");

    let res = find_branches(&Params { n: 3, h: -0.05 }, &c, 1e-8).unwrap();
    assert_eq!(res.len(), 2);
    assert_close(res[0].rho, 1.2817985920, 1e-5, "n=3 H=-0.05 rho_1");
    assert_close(res[1].rho, 1.5606260478, 1e-5, "n=3 H=-0.05 rho_2");
}

#[test]
fn limit_approach_toward_the_radius_bound() {
    // Deviations |r(s*) - a(H)| for r0 = a(H) - 10^-k shrink strictly in k.
    let c = controls();
    let a = radius_bound(&P2);
    let mut prev = f64::INFINITY;
    for k in 1..=5 {
        let r0 = a - 10f64.powi(-k);
        let (_, term) = classify(r0, &P2, &c).unwrap();
        let dev = (term.r - a).abs();
        assert!(dev < prev, "k={k}: deviation {dev} did not shrink from {prev}");
        prev = dev;
    }
    assert_close(prev, 6.224341e-5, 1e-8, "k=5 deviation");
}

#[test]
fn no_bracket_reported_when_the_window_misses_the_basin_boundary() {
    // Everything below the lower branch classifies HitA; a scan confined
    // there has no brackets, and find_branches reports NoBracket only when
    // the full default window has none (not reproducible for admissible
    // parameters, so check the scan-level behavior instead).
    let res = scan(&P2, 0.1, 0.8, 64, &controls()).unwrap();
    assert!(res.brackets.is_empty());
}

#[test]
fn delta_witness_procedure() {
    // Boundary representatives from an H=0 scan at n=2.
    let c = controls();
    let p0 = Params { n: 2, h: 0.0 };
    let res = scan(&p0, 0.9, 1.5, 128, &c).unwrap();
    let (lo, hi) = res.brackets[0];
    let delta = estimate_delta(2, lo, hi, &c, 20).unwrap();
    assert!(delta > 0.0 && delta <= 0.5);
    // Regression constant from the first run of this procedure: the H=0
    // bracket representatives keep their classifications down to H = -2^-6.
    assert_close(delta, 0.015625, 1e-12, "delta witness");
}

#[test]
fn scan_errors_surface_the_offending_radius() {
    // Probing right at the admissibility edge collapses theta before any
    // terminal condition; the scan reports it rather than classifying.
    let c = controls();
    let a = radius_bound(&P2);
    let err = scan(&P2, a - 2e-6, a - 1e-7, 4, &c).unwrap_err();
    match err {
        ShootError::AnomalousOutcome { kind, .. } => {
            assert_eq!(kind, OutcomeKind::ThetaCollapse)
        }
        other => panic!("expected AnomalousOutcome, got {other}"),
    }
}
