//! The profile-curve vector field and its pointwise structure.
//!
//! On the chart (r, theta) in (0, pi) x (0, pi/2) of S^2, an arclength
//! profile curve with tangent angle alpha (measured against d/dr) generates
//! a CMC-H hypersurface of S^{2n} exactly when
//!
//! ```text
//! r'     = cos(alpha)
//! theta' = sin(alpha) / sin(r)
//! alpha' = (2n-2) cot(2 theta) cos(alpha) / sin(r)
//!          - (2n-1) cot(r) sin(alpha) + H
//! ```
//!
//! This module evaluates that field, the second derivative of alpha on the
//! stall locus (alpha' = 0), the stall margin of the no-stall criterion, the
//! admissible radius bound a(H), and the pointwise solution symmetries.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use thiserror::Error;

/// Below this, the cotangent terms lose all precision; the caller has left
/// the admissible chart.
pub const CHART_EPS: f64 = 1e-14;

/// Ambient data: the hypersurface is S^{n-1} x S^{n-1} x S^1 in S^{2n}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Dimension parameter, n >= 2.
    pub n: u32,
    /// Mean curvature (trace convention), negative for the two-branch regime.
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("dimension parameter must satisfy n >= 2, got {n}")]
pub struct InvalidDimension {
    pub n: u32,
}

impl Params {
    pub fn new(n: u32, h: f64) -> Result<Self, InvalidDimension> {
        if n < 2 {
            return Err(InvalidDimension { n });
        }
        Ok(Params { n, h })
    }
}

/// A point of the phase space, tagged with the arclength at which it was
/// reached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    /// Polar radius on S^2, in (0, pi).
    pub r: f64,
    /// Angular coordinate, in (0, pi/2).
    pub theta: f64,
    /// Angle between the curve tangent and d/dr. Stored unreduced: the
    /// shooting logic depends on alpha being monotone, which wrapping
    /// would destroy.
    pub alpha: f64,
    /// Arclength.
    pub s: f64,
}

impl State {
    pub fn new(r: f64, theta: f64, alpha: f64, s: f64) -> Self {
        State { r, theta, alpha, s }
    }

    /// Canonical initial point (r0, pi/4, -pi/2) at s = 0.
    pub fn initial(r0: f64) -> Self {
        State::new(r0, FRAC_PI_4, -FRAC_PI_2, 0.0)
    }
}

/// Field value per unit arclength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Derivative {
    pub dr: f64,
    pub dtheta: f64,
    pub dalpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("left the admissible chart (|sin r| or |sin 2theta| < 1e-14) at r={r}, theta={theta}")]
pub struct ChartExit {
    pub r: f64,
    pub theta: f64,
}

/// Evaluate the autonomous system at a chart point.
pub fn vector_field(state: &State, params: &Params) -> Result<Derivative, ChartExit> {
    let sin_r = state.r.sin();
    let sin_2t = (2.0 * state.theta).sin();
    if sin_r.abs() < CHART_EPS || sin_2t.abs() < CHART_EPS {
        return Err(ChartExit {
            r: state.r,
            theta: state.theta,
        });
    }
    let cot_2t = (2.0 * state.theta).cos() / sin_2t;
    let cot_r = state.r.cos() / sin_r;
    let (sin_a, cos_a) = state.alpha.sin_cos();
    let n = f64::from(params.n);
    let dalpha =
        (2.0 * n - 2.0) * cot_2t * cos_a / sin_r - (2.0 * n - 1.0) * cot_r * sin_a + params.h;
    Ok(Derivative {
        dr: cos_a,
        dtheta: sin_a / sin_r,
        dalpha,
    })
}

/// Second derivative of alpha along a solution, valid exactly on the stall
/// locus alpha' = 0:
///
/// ```text
/// -(4n-4) sin a cos a / (sin^2 r sin^2 2t)
/// - (2n-2) cos r cos^2 a cot(2t) / sin^2 r
/// + (2n-1) cos a sin a / sin^2 r
/// ```
pub fn alpha_second_derivative(state: &State, params: &Params) -> Result<f64, ChartExit> {
    let sin_r = state.r.sin();
    let sin_2t = (2.0 * state.theta).sin();
    if sin_r.abs() < CHART_EPS || sin_2t.abs() < CHART_EPS {
        return Err(ChartExit {
            r: state.r,
            theta: state.theta,
        });
    }
    let sin2_r = sin_r * sin_r;
    let cot_2t = (2.0 * state.theta).cos() / sin_2t;
    let (sin_a, cos_a) = state.alpha.sin_cos();
    let n = f64::from(params.n);
    Ok(
        -(4.0 * n - 4.0) * sin_a * cos_a / (sin2_r * sin_2t * sin_2t)
            - (2.0 * n - 2.0) * state.r.cos() * cos_a * cos_a * cot_2t / sin2_r
            + (2.0 * n - 1.0) * cos_a * sin_a / sin2_r,
    )
}

/// The stall margin (2n-2) cot(2 theta) cos(alpha) + H. A nonnegative value
/// at any trajectory point certifies that the trajectory cannot terminate
/// by stall.
pub fn stall_margin(state: &State, params: &Params) -> Result<f64, ChartExit> {
    let sin_2t = (2.0 * state.theta).sin();
    if sin_2t.abs() < CHART_EPS {
        return Err(ChartExit {
            r: state.r,
            theta: state.theta,
        });
    }
    let cot_2t = (2.0 * state.theta).cos() / sin_2t;
    let n = f64::from(params.n);
    Ok((2.0 * n - 2.0) * cot_2t * state.alpha.cos() + params.h)
}

/// a(H) = arccot(-H / (2n-1)), the supremum of admissible initial radii and
/// the equilibrium radius of the theta-frozen flow. Lies in (0, pi/2] for
/// H <= 0.
pub fn radius_bound(params: &Params) -> f64 {
    FRAC_PI_2 - (-params.h / (2.0 * f64::from(params.n) - 1.0)).atan()
}

/// The pointwise solution symmetries. The two reflections come with an
/// s -> -s time reversal at the trajectory level; here only the phase-space
/// image is produced (the arclength tag is preserved).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymmetryKind {
    /// (r, theta, alpha) -> (pi - r, theta, -alpha)
    PolarReflection,
    /// (r, theta, alpha) -> (r, pi/2 - theta, pi - alpha)
    AngularReflection,
    /// alpha -> alpha + 2k pi
    AlphaShift(i32),
}

pub fn apply_symmetry(state: &State, kind: SymmetryKind) -> State {
    match kind {
        SymmetryKind::PolarReflection => {
            State::new(PI - state.r, state.theta, -state.alpha, state.s)
        }
        SymmetryKind::AngularReflection => {
            State::new(state.r, FRAC_PI_2 - state.theta, PI - state.alpha, state.s)
        }
        SymmetryKind::AlphaShift(k) => State::new(
            state.r,
            state.theta,
            state.alpha + 2.0 * f64::from(k) * PI,
            state.s,
        ),
    }
}

/// True iff (r, theta, alpha) lies in the open box
/// B = (0, pi/2) x (0, pi/4) x (-pi/2, 0).
pub fn in_box(state: &State) -> bool {
    state.r > 0.0
        && state.r < FRAC_PI_2
        && state.theta > 0.0
        && state.theta < FRAC_PI_4
        && state.alpha > -FRAC_PI_2
        && state.alpha < 0.0
}
