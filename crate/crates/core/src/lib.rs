//! Numerical construction of constant-mean-curvature hypertori in round spheres.
//!
//! A doubly rotationally symmetric hypersurface of S^{2n} of product type
//! S^{n-1} x S^{n-1} x S^1 is generated by a closed profile curve
//! (r(s), theta(s)) on a quadrant of S^2. The curve has constant mean
//! curvature H exactly when (r, theta, alpha) solves a first-order
//! autonomous system in the tangent angle alpha. This crate integrates that
//! system with dense output and event detection, locates the initial radii
//! whose quarter-arcs hit r = pi/2 and alpha = 0 simultaneously, assembles
//! the closed curves by reflection, and verifies the quantitative properties
//! of the flow (monotonicity, arclength bounds, no-stall criteria, limit
//! behavior) over parameter sweeps.

pub mod integrator;
pub mod lemmas;
pub mod ode;
pub mod profile;
pub mod shooting;

pub use integrator::{
    integrate, integrate_fixed, refine_event, EventSpec, IntegrateError, IntegrationControls,
    Outcome, OutcomeKind, Trajectory,
};
pub use ode::{
    alpha_second_derivative, apply_symmetry, in_box, radius_bound, stall_margin, vector_field,
    ChartExit, Derivative, Params, State, SymmetryKind,
};
pub use lemmas::{
    check_alpha_linear_bound, check_alpha_quarter_bound, check_arclength_bound,
    check_limit_approach, check_monotonicity, check_no_stall, check_symmetry_solutions, run_suite,
    LemmaReport, SuiteConfig, Witness,
};
pub use profile::{
    build_closed_profile, cmc_residual, embed, is_simple, polyline_hausdorff, CurveError,
    CurvePoint, ProfileCurve, DEFAULT_CURVE_POINTS,
};
pub use shooting::{
    classify, epsilon_bound, estimate_delta, find_branches, scan, BranchResult, GridPoint,
    ScanResult, ShootError,
};

/// Upper bound on the quarter-arc length of any admissible trajectory,
/// 3*sqrt(2)*pi/4 ~ 3.3321622.
pub const ARCLENGTH_BOUND: f64 = 3.0 * std::f64::consts::SQRT_2 * std::f64::consts::PI / 4.0;
