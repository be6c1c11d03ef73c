//! Assembly of the full closed profile curve from one quarter-arc.
//!
//! A branch trajectory runs from (rho, pi/4, -pi/2) to (pi/2, theta*, 0).
//! Reflecting it across the equator r = pi/2 (with time reversal) extends it
//! to a half-loop ending at (pi - rho, pi/4, pi/2); reflecting that half
//! across theta = pi/4 closes the loop. Both glue points are tangent-
//! continuous exactly because the arc starts perpendicular to theta = pi/4
//! and ends on r = pi/2 with alpha = 0.

use crate::ode::Params;
use crate::shooting::BranchResult;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

/// Default resampling resolution of a closed curve.
pub const DEFAULT_CURVE_POINTS: usize = 2048;

/// Tangent directions at the glue points must agree to this angle, and the
/// glued endpoints must coincide to this distance.
const GLUE_TOL: f64 = 1e-5;

/// Singular-band cutoff for the CMC residual check.
const RESIDUAL_BAND: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Arclength along the closed loop, in [0, total_length].
    pub s: f64,
    pub r: f64,
    pub theta: f64,
    /// Tangent angle, unreduced: increases continuously from -pi/2 at the
    /// start to 3pi/2 after the full loop.
    pub alpha: f64,
    /// d(alpha)/ds from the dense output of the generating arc.
    pub dalpha: f64,
}

/// The closed planar profile curve assembled from four symmetric arcs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileCurve {
    pub points: Vec<CurvePoint>,
    /// Arclength s* of the generating quarter-arc.
    pub quarter_length: f64,
    /// 4 s*.
    pub total_length: f64,
    /// Distance between the first and last emitted points in (r, theta).
    pub closure_gap: f64,
    /// Minimum distance between non-adjacent polyline segments.
    pub min_self_distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum CurveError {
    #[error("curve failed to close: gap {gap} between first and last point")]
    ClosureFailure { gap: f64 },
    #[error("arcs disagree at the glue point s={s}: tangent gap {tangent_gap}, position gap {position_gap}")]
    OrientationFailure {
        s: f64,
        tangent_gap: f64,
        position_gap: f64,
    },
    #[error("a closed curve needs at least 16 resampled points, got {count}")]
    TooFewPoints { count: usize },
}

/// (r, theta, alpha, dalpha) of the loop at arclength s, produced by folding
/// s onto the generating arc through the two reflections.
fn loop_state(branch: &BranchResult, s: f64) -> (f64, f64, f64, f64) {
    let l = branch.s_star;
    if s <= 2.0 * l {
        half_state(branch, s)
    } else {
        let (r, t, a, da) = half_state(branch, 4.0 * l - s);
        (r, FRAC_PI_2 - t, PI - a, da)
    }
}

fn half_state(branch: &BranchResult, u: f64) -> (f64, f64, f64, f64) {
    let l = branch.s_star;
    let (t, polar) = if u <= l { (u, false) } else { (2.0 * l - u, true) };
    let t = t.clamp(0.0, l);
    let st = branch.trajectory.sample(t).expect("fold stays in range");
    let da = branch
        .trajectory
        .derivative_at(t)
        .expect("fold stays in range")
        .dalpha;
    if polar {
        (PI - st.r, st.theta, -st.alpha, da)
    } else {
        (st.r, st.theta, st.alpha, da)
    }
}

/// Concatenate the quarter-arc with its reflected images into a closed,
/// uniformly resampled curve of `count` points (first and last coincide).
pub fn build_closed_profile(
    branch: &BranchResult,
    count: usize,
) -> Result<ProfileCurve, CurveError> {
    if count < 16 {
        return Err(CurveError::TooFewPoints { count });
    }
    let l = branch.s_star;
    let total = 4.0 * l;

    // Side limits at the two images of the arc's terminal point. The gaps
    // are twice the branch residuals; a non-branch trajectory fails here.
    let term = branch.trajectory.outcome.terminal_state;
    for glue_s in [l, 3.0 * l] {
        let position_gap = (PI - 2.0 * term.r).abs();
        let tangent_gap = 2.0 * term.alpha.abs();
        if tangent_gap > GLUE_TOL || position_gap > GLUE_TOL {
            return Err(CurveError::OrientationFailure {
                s: glue_s,
                tangent_gap,
                position_gap,
            });
        }
    }

    let points: Vec<CurvePoint> = (0..count)
        .map(|i| {
            let s = total * (i as f64) / ((count - 1) as f64);
            let (r, theta, alpha, dalpha) = loop_state(branch, s);
            CurvePoint {
                s,
                r,
                theta,
                alpha,
                dalpha,
            }
        })
        .collect();

    let first = &points[0];
    let last = &points[points.len() - 1];
    let closure_gap = ((first.r - last.r).powi(2) + (first.theta - last.theta).powi(2)).sqrt();
    if closure_gap >= 1e-6 {
        return Err(CurveError::ClosureFailure { gap: closure_gap });
    }

    let ring: Vec<(f64, f64)> = points[..points.len() - 1]
        .iter()
        .map(|p| (p.r, p.theta))
        .collect();
    let (_, min_self_distance) = ring_simplicity(&ring);

    Ok(ProfileCurve {
        points,
        quarter_length: l,
        total_length: total,
        closure_gap,
        min_self_distance,
    })
}

/// Exact-predicate self-intersection test on the (r, theta) polyline, with
/// adjacency exclusion of one segment; returns the minimum distance between
/// non-adjacent segments alongside the verdict.
pub fn is_simple(curve: &ProfileCurve) -> (bool, f64) {
    let ring: Vec<(f64, f64)> = curve.points[..curve.points.len().saturating_sub(1)]
        .iter()
        .map(|p| (p.r, p.theta))
        .collect();
    ring_simplicity(&ring)
}

fn ring_simplicity(ring: &[(f64, f64)]) -> (bool, f64) {
    let m = ring.len();
    if m < 3 {
        return (true, f64::INFINITY);
    }
    let seg = |i: usize| (ring[i], ring[(i + 1) % m]);
    let mut min_dist = f64::INFINITY;
    let mut simple = true;
    for i in 0..m {
        for j in (i + 1)..m {
            let adjacent = j == i + 1 || (i == 0 && j == m - 1);
            if adjacent {
                continue;
            }
            let (p1, q1) = seg(i);
            let (p2, q2) = seg(j);
            if segments_intersect(p1, q1, p2, q2) {
                simple = false;
                min_dist = 0.0;
            } else {
                min_dist = min_dist.min(segment_distance(p1, q1, p2, q2));
            }
        }
    }
    (simple, min_dist)
}

type P2 = (f64, f64);

fn orient(a: P2, b: P2, c: P2) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

fn on_segment(a: P2, b: P2, p: P2) -> bool {
    p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

fn segments_intersect(p1: P2, q1: P2, p2: P2, q2: P2) -> bool {
    let o1 = orient(p1, q1, p2);
    let o2 = orient(p1, q1, q2);
    let o3 = orient(p2, q2, p1);
    let o4 = orient(p2, q2, q1);
    if o1 != 0.0 && o2 != 0.0 && o3 != 0.0 && o4 != 0.0 {
        return (o1 > 0.0) != (o2 > 0.0) && (o3 > 0.0) != (o4 > 0.0);
    }
    (o1 == 0.0 && on_segment(p1, q1, p2))
        || (o2 == 0.0 && on_segment(p1, q1, q2))
        || (o3 == 0.0 && on_segment(p2, q2, p1))
        || (o4 == 0.0 && on_segment(p2, q2, q1))
}

fn point_segment_distance(p: P2, a: P2, b: P2) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()
}

fn segment_distance(p1: P2, q1: P2, p2: P2, q2: P2) -> f64 {
    point_segment_distance(p1, p2, q2)
        .min(point_segment_distance(q1, p2, q2))
        .min(point_segment_distance(p2, p1, q1))
        .min(point_segment_distance(q2, p1, q1))
}

/// Coordinates on S^2: (sin r cos theta, sin r sin theta, cos r).
pub fn embed(r: f64, theta: f64) -> [f64; 3] {
    let (sin_r, cos_r) = r.sin_cos();
    let (sin_t, cos_t) = theta.sin_cos();
    [sin_r * cos_t, sin_r * sin_t, cos_r]
}

impl ProfileCurve {
    /// A point of the generated hypersurface in R^{2n+1}:
    /// (x(s) p1, y(s) p2, z(s)) for unit vectors p1, p2. The curve is
    /// sampled at arclength s (clamped to the loop).
    pub fn immersion_sample(&self, p1: &[f64], p2: &[f64], s: f64) -> Vec<f64> {
        let s = s.clamp(0.0, self.total_length);
        let idx = self
            .points
            .partition_point(|p| p.s <= s)
            .clamp(1, self.points.len() - 1);
        let (a, b) = (&self.points[idx - 1], &self.points[idx]);
        let w = if b.s > a.s { (s - a.s) / (b.s - a.s) } else { 0.0 };
        let r = a.r + w * (b.r - a.r);
        let theta = a.theta + w * (b.theta - a.theta);
        let [x, y, z] = embed(r, theta);
        let mut out = Vec::with_capacity(p1.len() + p2.len() + 1);
        out.extend(p1.iter().map(|v| x * v));
        out.extend(p2.iter().map(|v| y * v));
        out.push(z);
        out
    }
}

/// Maximum deviation of the mean curvature implied by the stored curve data
/// from the nominal H, skipping points inside the coordinate-singular bands:
/// H_implied = alpha' - (2n-2) cot(2 theta) cos(alpha) / sin(r)
///             + (2n-1) cot(r) sin(alpha).
pub fn cmc_residual(curve: &ProfileCurve, params: &Params) -> f64 {
    let n = f64::from(params.n);
    let mut worst = 0.0f64;
    for p in &curve.points {
        let sin_r = p.r.sin();
        let sin_2t = (2.0 * p.theta).sin();
        if sin_r.abs() < RESIDUAL_BAND || sin_2t.abs() < RESIDUAL_BAND {
            continue;
        }
        let cot_2t = (2.0 * p.theta).cos() / sin_2t;
        let cot_r = p.r.cos() / sin_r;
        let (sin_a, cos_a) = p.alpha.sin_cos();
        let h_implied =
            p.dalpha - (2.0 * n - 2.0) * cot_2t * cos_a / sin_r + (2.0 * n - 1.0) * cot_r * sin_a;
        worst = worst.max((h_implied - params.h).abs());
    }
    worst
}

/// Symmetric Hausdorff distance between two closed polylines (given as
/// vertex rings; the closing segment is implied).
pub fn polyline_hausdorff(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

fn directed_hausdorff(from: &[(f64, f64)], to: &[(f64, f64)]) -> f64 {
    let m = to.len();
    let mut worst = 0.0f64;
    for &p in from {
        let mut best = f64::INFINITY;
        for i in 0..m {
            best = best.min(point_segment_distance(p, to[i], to[(i + 1) % m]));
            if best == 0.0 {
                break;
            }
        }
        worst = worst.max(best);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn fake_curve(pts: &[(f64, f64)]) -> ProfileCurve {
        let points: Vec<CurvePoint> = pts
            .iter()
            .enumerate()
            .map(|(i, &(r, theta))| CurvePoint {
                s: i as f64,
                r,
                theta,
                alpha: 0.0,
                dalpha: 0.0,
            })
            .collect();
        ProfileCurve {
            points,
            quarter_length: 0.0,
            total_length: pts.len() as f64,
            closure_gap: 0.0,
            min_self_distance: 0.0,
        }
    }

    #[test]
    fn figure_eight_is_not_simple() {
        // segments (0,0)-(1,1) and (1,0)-(0,1) cross at (0.5, 0.5)
        let curve = fake_curve(&[(0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (0.0, 1.0), (0.0, 0.0)]);
        let (simple, dist) = is_simple(&curve);
        assert!(!simple);
        assert_eq!(dist, 0.0);
    }

    #[test]
    fn subdivided_triangle_is_simple() {
        let tri = [
            (0.0, 0.0),
            (0.5, 0.0),
            (1.0, 0.0),
            (0.75, 0.5),
            (0.5, 1.0),
            (0.25, 0.5),
            (0.0, 0.0),
        ];
        let curve = fake_curve(&tri);
        let (simple, dist) = is_simple(&curve);
        assert!(simple);
        assert!(dist > 0.0 && dist.is_finite());
    }

    #[test]
    fn embed_identities() {
        let [x, y, z] = embed(FRAC_PI_2, FRAC_PI_4);
        assert!((x - std::f64::consts::SQRT_2 / 2.0).abs() < 1e-15);
        assert!((y - std::f64::consts::SQRT_2 / 2.0).abs() < 1e-15);
        assert!(z.abs() < 1e-15);
        // reference values at the lower branch radius of the H = -0.2 pair
        let [x, y, z] = embed(1.29691, FRAC_PI_4);
        assert!((x - 0.680750800936547).abs() < 1e-13);
        assert!((y - 0.680750800936547).abs() < 1e-13);
        assert!((z - 0.270474941627685).abs() < 1e-13);
    }

    #[test]
    fn hausdorff_of_shifted_square() {
        let a = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
        let b = [(0.1, 0.0), (1.1, 0.0), (1.1, 1.0), (0.1, 1.0)];
        let d = polyline_hausdorff(&a, &b);
        assert!((d - 0.1).abs() < 1e-12, "got {d}");
        assert_eq!(polyline_hausdorff(&a, &a), 0.0);
    }
}
