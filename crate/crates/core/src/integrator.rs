//! Adaptive Dormand-Prince 5(4) integration of the profile-curve system with
//! free 4th-order dense output and first-event detection.
//!
//! Inside the box B the flow is monotone (r up, theta down, alpha up), so a
//! trajectory terminates at the first of: r = pi/2 (HitR), alpha = 0 (HitA),
//! alpha' = 0 (Stall), theta at the floor (ThetaCollapse), or the arclength
//! budget (Timeout). Event times are refined on the dense interpolant by
//! bisection.

use crate::ode::{self, in_box, radius_bound, stall_margin, vector_field, Derivative, Params, State};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use thiserror::Error;

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;

const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// Coefficients of the 4th-order continuous extension.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

// PI step-size controller.
const SAFE: f64 = 0.9;
const FAC_MAX: f64 = 5.0;
const FAC_MIN: f64 = 0.1;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;

const MIN_STEP: f64 = 1e-13;

// The field coefficients scale like cot(2 theta) near the angular edge, so
// dense-output accuracy requires steps that resolve theta itself. Capping
// h at this multiple of theta keeps the interpolant defect around 1e-8
// absolute in the interior and below 1e-7 relative to the field magnitude
// in the steep terminal zone.
const THETA_STEP_FACTOR: f64 = 0.012;

type V3 = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationControls {
    /// Relative tolerance of the embedded error estimate.
    pub rel_tol: f64,
    /// Absolute tolerance of the embedded error estimate.
    pub abs_tol: f64,
    /// Arclength budget; exceeding it signals a numerical pathology, never a
    /// valid solution (the admissible flow ends before 3*sqrt(2)*pi/4).
    pub max_arclength: f64,
    /// Terminate with ThetaCollapse when theta falls to this floor.
    pub theta_floor: f64,
    /// Event times are refined to this width in s.
    pub event_tol: f64,
    /// Bound on attempted steps.
    pub max_steps: usize,
    /// Step-size cap. Keeps the dense-output defect well below the
    /// residual tolerances used by the verification harness.
    pub max_step_size: f64,
    /// Stall touch-down threshold on alpha' at step endpoints.
    pub stall_eps: f64,
}

impl Default for IntegrationControls {
    fn default() -> Self {
        IntegrationControls {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_arclength: crate::ARCLENGTH_BOUND + 0.5,
            theta_floor: 1e-6,
            event_tol: 1e-12,
            max_steps: 1_000_000,
            max_step_size: 0.0075,
            stall_eps: 1e-9,
        }
    }
}

impl IntegrationControls {
    pub fn validate(&self) -> Result<(), IntegrateError> {
        let ok = self.rel_tol > 0.0
            && self.abs_tol > 0.0
            && self.max_arclength > 0.0
            && self.theta_floor > 0.0
            && self.event_tol > 0.0
            && self.max_steps > 0
            && self.max_step_size > 0.0
            && self.stall_eps > 0.0;
        if ok {
            Ok(())
        } else {
            Err(IntegrateError::InvalidControls)
        }
    }
}

/// Terminal classification of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OutcomeKind {
    HitR,
    HitA,
    Stall,
    ThetaCollapse,
    Timeout,
}

impl std::fmt::Display for OutcomeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            OutcomeKind::HitR => "HitR",
            OutcomeKind::HitA => "HitA",
            OutcomeKind::Stall => "Stall",
            OutcomeKind::ThetaCollapse => "ThetaCollapse",
            OutcomeKind::Timeout => "Timeout",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub kind: OutcomeKind,
    pub terminal_state: State,
    /// Stall margin (2n-2) cot(2 theta) cos(alpha) + H at termination.
    pub terminal_margin: f64,
    /// A second event refined to within event_tol of the first, if any.
    /// Coincidence of HitR and HitA is exactly the branch condition.
    pub coincident: Option<OutcomeKind>,
}

/// State and field value at an accepted step boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub state: State,
    pub deriv: Derivative,
}

/// Dense-output polynomial of one accepted step, valid on [s0, s0 + h].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DenseStep {
    pub s0: f64,
    pub h: f64,
    cont: [V3; 5],
}

impl DenseStep {
    fn eval(&self, s: f64) -> V3 {
        let t = (s - self.s0) / self.h;
        let t1 = 1.0 - t;
        let c = &self.cont;
        let mut out = [0.0; 3];
        for i in 0..3 {
            out[i] = c[0][i] + t * (c[1][i] + t1 * (c[2][i] + t * (c[3][i] + t1 * c[4][i])));
        }
        out
    }

    fn eval_derivative(&self, s: f64) -> V3 {
        let t = (s - self.s0) / self.h;
        let c = &self.cont;
        let mut out = [0.0; 3];
        for i in 0..3 {
            let d = c[1][i]
                + c[2][i] * (1.0 - 2.0 * t)
                + c[3][i] * (2.0 * t - 3.0 * t * t)
                + c[4][i] * (2.0 * t - 6.0 * t * t + 4.0 * t * t * t);
            out[i] = d / self.h;
        }
        out
    }
}

/// Dense-output solution with a classified terminal event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub params: Params,
    /// States and field values at accepted steps; the first sample is the
    /// initial condition, the last is the terminal event state.
    pub samples: Vec<Sample>,
    /// One dense polynomial per accepted step.
    pub steps: Vec<DenseStep>,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrateError {
    #[error("error controller could not satisfy tolerances above the minimum step at s={s}")]
    StepFailure { s: f64 },
    #[error("chart exit away from detected events at s={s}: {source}")]
    ChartExit { s: f64, source: ode::ChartExit },
    #[error("exceeded the step budget at s={s}")]
    MaxSteps { s: f64 },
    #[error("initial state must be (r0, pi/4, -pi/2) with 0 < r0 < a(H), or lie strictly inside B")]
    InvalidInitial,
    #[error("integration controls must all be strictly positive")]
    InvalidControls,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("arclength {s} outside [{lo}, {hi}]")]
pub struct OutOfRange {
    pub s: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RefineError {
    #[error("event function does not change sign across [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error(transparent)]
    Range(#[from] OutOfRange),
    #[error("chart exit while evaluating the event function: {0}")]
    Chart(ode::ChartExit),
}

/// Terminal conditions expressible on the dense interpolant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventSpec {
    /// r crosses pi/2 from below.
    RadiusHalfPi,
    /// alpha crosses 0 from below.
    AlphaZero,
    /// theta falls to the given floor.
    ThetaFloor(f64),
    /// alpha' crosses 0 from above.
    AlphaDotZero,
}

impl Trajectory {
    pub fn initial_s(&self) -> f64 {
        self.samples[0].state.s
    }

    pub fn terminal_s(&self) -> f64 {
        self.outcome.terminal_state.s
    }

    pub fn initial_state(&self) -> &State {
        &self.samples[0].state
    }

    /// Continuous interpolated state; matches stored samples exactly at step
    /// endpoints.
    pub fn sample(&self, s: f64) -> Result<State, OutOfRange> {
        let lo = self.initial_s();
        let hi = self.terminal_s();
        if !(s >= lo && s <= hi) {
            return Err(OutOfRange { s, lo, hi });
        }
        if let Ok(i) = self
            .samples
            .binary_search_by(|smp| smp.state.s.partial_cmp(&s).unwrap())
        {
            return Ok(self.samples[i].state);
        }
        let step = self.containing_step(s);
        let y = step.eval(s);
        Ok(State::new(y[0], y[1], y[2], s))
    }

    /// Derivative of the dense interpolant; matches the stored field values
    /// exactly at step endpoints.
    pub fn derivative_at(&self, s: f64) -> Result<Derivative, OutOfRange> {
        let lo = self.initial_s();
        let hi = self.terminal_s();
        if !(s >= lo && s <= hi) {
            return Err(OutOfRange { s, lo, hi });
        }
        if let Ok(i) = self
            .samples
            .binary_search_by(|smp| smp.state.s.partial_cmp(&s).unwrap())
        {
            return Ok(self.samples[i].deriv);
        }
        let step = self.containing_step(s);
        let d = step.eval_derivative(s);
        Ok(Derivative {
            dr: d[0],
            dtheta: d[1],
            dalpha: d[2],
        })
    }

    fn containing_step(&self, s: f64) -> &DenseStep {
        let idx = self.steps.partition_point(|st| st.s0 <= s);
        &self.steps[idx.saturating_sub(1)]
    }
}

/// Integrate from the canonical initial face or from a state strictly inside
/// B, until the first terminal event.
pub fn integrate(
    initial: State,
    params: Params,
    controls: &IntegrationControls,
) -> Result<Trajectory, IntegrateError> {
    let canonical = initial.theta == FRAC_PI_4
        && initial.alpha == -FRAC_PI_2
        && initial.r > 0.0
        && initial.r < radius_bound(&params);
    if !canonical && !in_box(&initial) {
        return Err(IntegrateError::InvalidInitial);
    }
    run(initial, params, controls, true)
}

/// Integrate for a fixed arclength with the terminal conditions disabled
/// (chart guards only). Used to follow solutions outside B, e.g. reflected
/// arcs; the run ends with a Timeout outcome at the requested length.
pub fn integrate_fixed(
    initial: State,
    params: Params,
    controls: &IntegrationControls,
    length: f64,
) -> Result<Trajectory, IntegrateError> {
    let mut c = *controls;
    c.max_arclength = length;
    run(initial, params, &c, false)
}

fn eval_field(params: &Params, y: V3, s: f64) -> Result<V3, ode::ChartExit> {
    let d = vector_field(&State::new(y[0], y[1], y[2], s), params)?;
    Ok([d.dr, d.dtheta, d.dalpha])
}

fn lincomb(y: &V3, h: f64, terms: &[(f64, &V3)]) -> V3 {
    let mut out = *y;
    for &(c, k) in terms {
        for i in 0..3 {
            out[i] += h * c * k[i];
        }
    }
    out
}

fn hinit(params: &Params, y: V3, f0: V3, s: f64, controls: &IntegrationControls) -> f64 {
    let sc = |i: usize| controls.abs_tol + controls.rel_tol * y[i].abs();
    let rms = |v: V3| ((0..3).map(|i| (v[i] / sc(i)).powi(2)).sum::<f64>() / 3.0).sqrt();
    let d0 = rms(y);
    let d1 = rms(f0);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h0 = h0.min(controls.max_step_size);
    let y1 = lincomb(&y, h0, &[(1.0, &f0)]);
    let d2 = match eval_field(params, y1, s + h0) {
        Ok(f1) => rms([f1[0] - f0[0], f1[1] - f0[1], f1[2] - f0[2]]) / h0,
        Err(_) => return (h0 * 1e-2).max(MIN_STEP * 10.0),
    };
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(controls.max_step_size)
}

struct Candidate {
    s_ev: f64,
    kind: OutcomeKind,
}

struct TrialStep {
    y_new: V3,
    k7: V3,
    err: f64,
    cont4: V3,
}

fn try_step(
    params: &Params,
    y: &V3,
    k1: &V3,
    s: f64,
    h: f64,
    controls: &IntegrationControls,
) -> Result<TrialStep, ode::ChartExit> {
    let k2 = eval_field(params, lincomb(y, h, &[(A21, k1)]), s + C2 * h)?;
    let k3 = eval_field(params, lincomb(y, h, &[(A31, k1), (A32, &k2)]), s + C3 * h)?;
    let k4 = eval_field(
        params,
        lincomb(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]),
        s + C4 * h,
    )?;
    let k5 = eval_field(
        params,
        lincomb(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        s + C5 * h,
    )?;
    let k6 = eval_field(
        params,
        lincomb(
            y,
            h,
            &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        ),
        s + h,
    )?;
    let y_new = lincomb(y, h, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = eval_field(params, y_new, s + h)?;

    let mut err_sq = 0.0;
    for i in 0..3 {
        let e = h
            * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sc = controls.abs_tol + controls.rel_tol * y[i].abs().max(y_new[i].abs());
        err_sq += (e / sc) * (e / sc);
    }
    let mut cont4 = [0.0; 3];
    for i in 0..3 {
        cont4[i] = h
            * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
    }
    Ok(TrialStep {
        y_new,
        k7,
        err: (err_sq / 3.0).sqrt(),
        cont4,
    })
}

fn make_dense(s0: f64, h: f64, y: &V3, y_new: &V3, k1: &V3, k7: &V3, cont4: V3) -> DenseStep {
    let mut cont = [[0.0; 3]; 5];
    for i in 0..3 {
        let ydiff = y_new[i] - y[i];
        let bspl = h * k1[i] - ydiff;
        cont[0][i] = y[i];
        cont[1][i] = ydiff;
        cont[2][i] = bspl;
        cont[3][i] = ydiff - h * k7[i] - bspl;
        cont[4][i] = cont4[i];
    }
    DenseStep { s0, h, cont }
}

/// Bisect g on the dense interpolant: returns the first s in [lo, hi] (to
/// within event_tol) at which g leaves the sign it has at lo. When g does
/// not change sign over the bracket the right endpoint is returned.
fn bisect_dense<G>(g: G, mut lo: f64, mut hi: f64, event_tol: f64) -> Result<f64, ode::ChartExit>
where
    G: Fn(f64) -> Result<f64, ode::ChartExit>,
{
    let positive_at_lo = g(lo)? > 0.0;
    if (g(hi)? > 0.0) == positive_at_lo {
        return Ok(hi);
    }
    while hi - lo > event_tol {
        let mid = 0.5 * (lo + hi);
        if (g(mid)? > 0.0) == positive_at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn run(
    initial: State,
    params: Params,
    controls: &IntegrationControls,
    events: bool,
) -> Result<Trajectory, IntegrateError> {
    controls.validate()?;
    let s_start = initial.s;
    let s_end = s_start + controls.max_arclength;
    let mut s = s_start;
    let mut y: V3 = [initial.r, initial.theta, initial.alpha];
    let mut k1 =
        eval_field(&params, y, s).map_err(|e| IntegrateError::ChartExit { s, source: e })?;

    let mut samples = vec![Sample {
        state: initial,
        deriv: Derivative {
            dr: k1[0],
            dtheta: k1[1],
            dalpha: k1[2],
        },
    }];
    let mut steps: Vec<DenseStep> = Vec::new();

    let mut h = hinit(&params, y, k1, s, controls);
    let mut facold: f64 = 1e-4;
    let mut rejected = false;
    let mut attempts: usize = 0;

    loop {
        attempts += 1;
        if attempts > controls.max_steps {
            return Err(IntegrateError::MaxSteps { s });
        }
        let h_geom = THETA_STEP_FACTOR * y[1].abs().max(controls.theta_floor);
        h = h.min(controls.max_step_size).min(h_geom);
        let mut last_step = false;
        if s + h >= s_end {
            h = s_end - s;
            last_step = true;
        }
        if h < MIN_STEP {
            return Err(IntegrateError::StepFailure { s });
        }

        let trial = match try_step(&params, &y, &k1, s, h, controls) {
            Ok(t) => t,
            Err(source) => {
                // A trial stage left the chart: retry with a smaller step.
                if h <= MIN_STEP * 4.0 {
                    return Err(IntegrateError::ChartExit { s, source });
                }
                h *= 0.25;
                rejected = true;
                continue;
            }
        };

        let fac11 = trial.err.powf(EXPO1);
        if trial.err > 1.0 {
            // Rejected by the error controller.
            h /= (fac11 / SAFE).min(1.0 / FAC_MIN);
            rejected = true;
            continue;
        }

        // Accepted.
        let dense = make_dense(s, h, &y, &trial.y_new, &k1, &trial.k7, trial.cont4);
        let s_new = s + h;
        let accepted_index = steps.len() + 1;

        let event = if events {
            detect_event(
                &params,
                controls,
                &dense,
                &y,
                &trial.y_new,
                &k1,
                &trial.k7,
                accepted_index,
            )
            .map_err(|source| IntegrateError::ChartExit { s, source })?
        } else {
            None
        };

        if let Some((winner, coincident)) = event {
            let yv = dense.eval(winner.s_ev);
            let terminal = State::new(yv[0], yv[1], yv[2], winner.s_ev);
            let deriv = match vector_field(&terminal, &params) {
                Ok(d) => d,
                Err(_) => {
                    let d = dense.eval_derivative(winner.s_ev);
                    Derivative {
                        dr: d[0],
                        dtheta: d[1],
                        dalpha: d[2],
                    }
                }
            };
            steps.push(dense);
            samples.push(Sample {
                state: terminal,
                deriv,
            });
            let margin = stall_margin(&terminal, &params).unwrap_or(f64::NAN);
            return Ok(Trajectory {
                params,
                samples,
                steps,
                outcome: Outcome {
                    kind: winner.kind,
                    terminal_state: terminal,
                    terminal_margin: margin,
                    coincident,
                },
            });
        }

        steps.push(dense);
        let state_new = State::new(trial.y_new[0], trial.y_new[1], trial.y_new[2], s_new);
        samples.push(Sample {
            state: state_new,
            deriv: Derivative {
                dr: trial.k7[0],
                dtheta: trial.k7[1],
                dalpha: trial.k7[2],
            },
        });

        if last_step {
            let margin = stall_margin(&state_new, &params).unwrap_or(f64::NAN);
            return Ok(Trajectory {
                params,
                samples,
                steps,
                outcome: Outcome {
                    kind: OutcomeKind::Timeout,
                    terminal_state: state_new,
                    terminal_margin: margin,
                    coincident: None,
                },
            });
        }

        // PI controller (Hairer's DOPRI5 settings).
        let fac = (fac11 / facold.powf(BETA) / SAFE).clamp(FAC_MIN, FAC_MAX);
        facold = trial.err.max(1e-4);
        let mut h_new = h / fac;
        if rejected {
            h_new = h_new.min(h);
        }
        rejected = false;

        y = trial.y_new;
        k1 = trial.k7;
        s = s_new;
        h = h_new;
    }
}

/// Scan one accepted step for terminal events, in the order ThetaCollapse,
/// HitR, HitA, Stall; the earliest refined event time wins and ties within
/// event_tol are reported through the coincident flag.
#[allow(clippy::too_many_arguments)]
fn detect_event(
    params: &Params,
    controls: &IntegrationControls,
    dense: &DenseStep,
    y_lo: &V3,
    y_hi: &V3,
    k_lo: &V3,
    k_hi: &V3,
    step_index: usize,
) -> Result<Option<(Candidate, Option<OutcomeKind>)>, ode::ChartExit> {
    let lo = dense.s0;
    let hi = dense.s0 + dense.h;
    let tol = controls.event_tol;
    let mut cands: Vec<Candidate> = Vec::new();

    // ThetaCollapse: theta falls to the floor.
    let floor = controls.theta_floor;
    if y_lo[1] - floor > 0.0 && y_hi[1] - floor <= 0.0 {
        let s_ev = bisect_dense(|s| Ok(dense.eval(s)[1] - floor), lo, hi, tol)?;
        cands.push(Candidate {
            s_ev,
            kind: OutcomeKind::ThetaCollapse,
        });
    }
    // HitR: r crosses pi/2 from below.
    if y_lo[0] - FRAC_PI_2 < 0.0 && y_hi[0] - FRAC_PI_2 >= 0.0 {
        let s_ev = bisect_dense(|s| Ok(dense.eval(s)[0] - FRAC_PI_2), lo, hi, tol)?;
        cands.push(Candidate {
            s_ev,
            kind: OutcomeKind::HitR,
        });
    }
    // HitA: alpha crosses 0 from below.
    if y_lo[2] < 0.0 && y_hi[2] >= 0.0 {
        let s_ev = bisect_dense(|s| Ok(dense.eval(s)[2]), lo, hi, tol)?;
        cands.push(Candidate {
            s_ev,
            kind: OutcomeKind::HitA,
        });
    }
    // Stall: alpha' crosses 0 from above, or touches down below stall_eps
    // with a negative trend. alpha' > 0 holds throughout B, so a true sign
    // change may not occur at a tangential zero. The touch-down rule is
    // suppressed on the first step: the canonical initial point lies on the
    // boundary of B where alpha'(0) may legitimately be tiny.
    let ad_lo = k_lo[2];
    let ad_hi = k_hi[2];
    let alpha_dot = |s: f64| -> Result<f64, ode::ChartExit> {
        let yv = dense.eval(s);
        Ok(vector_field(&State::new(yv[0], yv[1], yv[2], s), params)?.dalpha)
    };
    if ad_lo > 0.0 && ad_hi <= 0.0 {
        let s_ev = bisect_dense(alpha_dot, lo, hi, tol)?;
        cands.push(Candidate {
            s_ev,
            kind: OutcomeKind::Stall,
        });
    } else if step_index >= 2 && ad_hi > 0.0 && ad_hi < controls.stall_eps && ad_hi < ad_lo {
        cands.push(Candidate {
            s_ev: hi,
            kind: OutcomeKind::Stall,
        });
    }

    if cands.is_empty() {
        return Ok(None);
    }
    let s_min = cands.iter().map(|c| c.s_ev).fold(f64::INFINITY, f64::min);
    let winner_pos = cands.iter().position(|c| c.s_ev - s_min <= tol).unwrap();
    let coincident = cands
        .iter()
        .enumerate()
        .find(|(i, c)| *i != winner_pos && c.s_ev - s_min <= tol)
        .map(|(_, c)| c.kind);
    let winner = cands.swap_remove(winner_pos);
    Ok(Some((winner, coincident)))
}

/// Refine an event time inside a bracket on a finished trajectory's dense
/// output, to within `tol` in s.
pub fn refine_event(
    traj: &Trajectory,
    bracket: (f64, f64),
    event: EventSpec,
    tol: f64,
) -> Result<f64, RefineError> {
    let (lo, hi) = bracket;
    let lo_ok = traj.sample(lo)?;
    let hi_ok = traj.sample(hi)?;
    if hi - lo <= tol {
        return Ok(0.5 * (lo + hi));
    }
    let g = |st: &State| -> Result<f64, ode::ChartExit> {
        Ok(match event {
            EventSpec::RadiusHalfPi => st.r - FRAC_PI_2,
            EventSpec::AlphaZero => st.alpha,
            EventSpec::ThetaFloor(f) => st.theta - f,
            EventSpec::AlphaDotZero => vector_field(st, &traj.params)?.dalpha,
        })
    };
    let g_lo = g(&lo_ok).map_err(RefineError::Chart)?;
    let g_hi = g(&hi_ok).map_err(RefineError::Chart)?;
    if (g_lo > 0.0) == (g_hi > 0.0) {
        return Err(RefineError::NoSignChange { lo, hi });
    }
    let mut a = lo;
    let mut b = hi;
    let positive_at_lo = g_lo > 0.0;
    while b - a > tol {
        let mid = 0.5 * (a + b);
        let gm = g(&traj.sample(mid)?).map_err(RefineError::Chart)?;
        if (gm > 0.0) == positive_at_lo {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}
