//! Finite-difference oracle for the second-derivative formula of alpha.
//!
//! The formula is valid exactly on the locus alpha' = 0. The quarter-arc
//! flow never stalls for the parameters of interest, but the continued flow
//! past the terminal events does cross alpha' = 0; the crossing is located
//! with the independent fixed-step RK4 integrator and the formula is
//! compared against a Richardson-extrapolated finite difference of alpha'
//! along that trajectory.

mod common;

use common::{field, rk4_integrate};
use hypertorus_core::{alpha_second_derivative, radius_bound, Params, State};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

#[test]
fn alpha_second_derivative_matches_finite_differences_at_a_stall_point() {
    let params = Params { n: 2, h: -1.0 };
    let r0 = radius_bound(&params) - 1e-2;
    let y0 = [r0, FRAC_PI_4, -FRAC_PI_2];
    let h = 1e-5;

    let alpha_dot_at = |s: f64| field(&params, rk4_integrate(&params, y0, s, h))[2];

    // Locate the sign change of alpha' on the continued trajectory.
    let mut lo = 0.5;
    let mut hi = lo;
    let mut prev = alpha_dot_at(lo);
    assert!(prev > 0.0);
    loop {
        hi += 0.01;
        assert!(hi < 1.5, "no alpha' crossing found");
        let cur = alpha_dot_at(hi);
        if cur <= 0.0 {
            break;
        }
        lo = hi;
        prev = cur;
    }
    assert!(prev > 0.0);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if alpha_dot_at(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s0 = 0.5 * (lo + hi);
    let y = rk4_integrate(&params, y0, s0, h);
    let state = State::new(y[0], y[1], y[2], s0);
    assert!(
        field(&params, y)[2].abs() < 1e-10,
        "crossing not resolved: alpha' = {}",
        field(&params, y)[2]
    );
    // Independently located crossing (frozen from a separate integrator).
    assert!(
        (s0 - 0.8231568648678704).abs() < 1e-6,
        "crossing moved: s0 = {s0}"
    );

    let formula = alpha_second_derivative(&state, &params).unwrap();

    // Fourth-order centered differences of alpha' at two step sizes,
    // Richardson-extrapolated to cancel the d^4 term.
    let fd4 = |d: f64| -> f64 {
        let v = |k: f64| alpha_dot_at(s0 + k * d);
        (v(-2.0) - 8.0 * v(-1.0) + 8.0 * v(1.0) - v(2.0)) / (12.0 * d)
    };
    let coarse = fd4(5e-3);
    let fine = fd4(2.5e-3);
    let extrapolated = (16.0 * fine - coarse) / 15.0;

    let rel = ((extrapolated - formula) / formula).abs();
    assert!(
        rel < 1e-6,
        "formula {formula} vs FD {extrapolated}: relative deviation {rel}"
    );
}
