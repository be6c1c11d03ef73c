//! Numerical verification harness for the quantitative properties of the
//! quarter-arc flow: monotonicity inside B, the arclength bound, the
//! conditional linear bound on alpha, no-stall criteria, the limiting
//! terminal radius, and the solution symmetries. Checks run over parameter
//! sweeps and aggregate into structured pass/fail reports with margins.

use crate::integrator::{IntegrationControls, OutcomeKind, Trajectory};
use crate::ode::{
    apply_symmetry, radius_bound, stall_margin, vector_field, Params, State, SymmetryKind,
};
use crate::shooting::{classify, ShootError, SCAN_EDGE_MARGIN, SCAN_R0_MIN};
use crate::ARCLENGTH_BOUND;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};

const MAX_WITNESSES: usize = 32;

/// A failing (or hypothesis-carrying) case: the parameters, initial radius,
/// arclength, and check-specific values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub n: u32,
    pub h: f64,
    pub r0: f64,
    pub s: f64,
    pub values: Vec<f64>,
}

/// Aggregated result of one lemma check over a sweep. Margins use the
/// convention positive = satisfied; `worst_margin` is None until a case has
/// been recorded. Vacuous cases (hypotheses not met) are counted separately
/// and do not affect pass/fail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub lemma_id: String,
    pub cases_run: u64,
    pub cases_passed: u64,
    pub vacuous_cases: u64,
    pub worst_margin: Option<f64>,
    pub witnesses: Vec<Witness>,
}

impl LemmaReport {
    pub fn new(lemma_id: &str) -> Self {
        LemmaReport {
            lemma_id: lemma_id.to_string(),
            cases_run: 0,
            cases_passed: 0,
            vacuous_cases: 0,
            worst_margin: None,
            witnesses: Vec::new(),
        }
    }

    pub fn record(&mut self, margin: f64, witness: impl FnOnce() -> Witness) {
        self.cases_run += 1;
        if margin > 0.0 {
            self.cases_passed += 1;
        } else if self.witnesses.len() < MAX_WITNESSES {
            self.witnesses.push(witness());
        }
        self.worst_margin = Some(match self.worst_margin {
            None => margin,
            Some(w) => w.min(margin),
        });
    }

    pub fn record_vacuous(&mut self) {
        self.vacuous_cases += 1;
    }

    pub fn passed(&self) -> bool {
        self.cases_passed == self.cases_run
    }

    /// Associative, order-independent aggregation of two reports of the same
    /// lemma.
    pub fn merge(&mut self, other: LemmaReport) {
        assert_eq!(self.lemma_id, other.lemma_id, "merging different lemmas");
        self.cases_run += other.cases_run;
        self.cases_passed += other.cases_passed;
        self.vacuous_cases += other.vacuous_cases;
        self.worst_margin = match (self.worst_margin, other.worst_margin) {
            (None, m) => m,
            (m, None) => m,
            (Some(a), Some(b)) => Some(a.min(b)),
        };
        for w in other.witnesses {
            if self.witnesses.len() >= MAX_WITNESSES {
                break;
            }
            self.witnesses.push(w);
        }
    }
}

fn traj_meta(traj: &Trajectory) -> (u32, f64, f64) {
    (
        traj.params.n,
        traj.params.h,
        traj.samples[0].state.r,
    )
}

/// Strict signs of the flow inside B: r' > 0, theta' < 0, alpha' > 0 at all
/// interior samples and at dense points between them.
pub fn check_monotonicity(traj: &Trajectory) -> LemmaReport {
    let mut report = LemmaReport::new("monotonicity");
    let (n, h, r0) = traj_meta(traj);
    let mut margin = f64::INFINITY;
    let mut worst_s = 0.0;
    let mut worst_vals = [0.0; 3];
    let s_star = traj.terminal_s();
    let mut consider = |s: f64, dr: f64, dtheta: f64, dalpha: f64| {
        if s <= 0.0 || s >= s_star {
            return;
        }
        let m = dr.min(-dtheta).min(dalpha);
        if m < margin {
            margin = m;
            worst_s = s;
            worst_vals = [dr, dtheta, dalpha];
        }
    };
    for smp in &traj.samples {
        consider(smp.state.s, smp.deriv.dr, smp.deriv.dtheta, smp.deriv.dalpha);
    }
    for w in traj.samples.windows(2) {
        for j in 1..4 {
            let s = w[0].state.s + (w[1].state.s - w[0].state.s) * (j as f64) / 4.0;
            if let Ok(d) = traj.derivative_at(s) {
                consider(s, d.dr, d.dtheta, d.dalpha);
            }
        }
    }
    report.record(margin, || Witness {
        n,
        h,
        r0,
        s: worst_s,
        values: worst_vals.to_vec(),
    });
    report
}

/// Terminal arclength stays below 3 sqrt(2) pi / 4.
pub fn check_arclength_bound(traj: &Trajectory) -> LemmaReport {
    let mut report = LemmaReport::new("arclength");
    let (n, h, r0) = traj_meta(traj);
    let s_star = traj.terminal_s();
    report.record(ARCLENGTH_BOUND - s_star, || Witness {
        n,
        h,
        r0,
        s: s_star,
        values: vec![s_star],
    });
    report
}

/// Conditional linear bound: on the initial trajectory segment where the
/// stall margin (2n-2) cot(2 theta) cos(alpha) + H is negative,
/// alpha + pi/2 < (2n-1)(pi/4 - theta) + H (1 - 1/sin r0) s holds strictly
/// for s > 0. The margin turns nonnegative at most once (both factors of
/// the product grow along the flow), so the check walks samples until the
/// sign flips. Vacuous when no sample has negative margin (e.g. H = 0).
pub fn check_alpha_linear_bound(traj: &Trajectory) -> LemmaReport {
    let mut report = LemmaReport::new("alpha_linear_bound");
    let (n, h, r0) = traj_meta(traj);
    let nf = f64::from(n);
    let slope = h * (1.0 - 1.0 / r0.sin());
    let mut margin = f64::INFINITY;
    let mut worst_s = 0.0;
    let mut worst_vals = vec![];
    let mut any = false;
    for smp in traj.samples.iter().skip(1) {
        let st = &smp.state;
        let m = match stall_margin(st, &traj.params) {
            Ok(m) => m,
            Err(_) => break,
        };
        if m >= 0.0 {
            break;
        }
        any = true;
        let lhs = st.alpha + FRAC_PI_2;
        let rhs = (2.0 * nf - 1.0) * (FRAC_PI_4 - st.theta) + slope * st.s;
        if rhs - lhs < margin {
            margin = rhs - lhs;
            worst_s = st.s;
            worst_vals = vec![lhs, rhs, m];
        }
    }
    if !any {
        report.record_vacuous();
        return report;
    }
    report.record(margin, || Witness {
        n,
        h,
        r0,
        s: worst_s,
        values: worst_vals,
    });
    report
}

/// Hypothesis margins of the no-stall criterion for (params, r0):
/// (1 - 3 sqrt(2) H (1 - 1/sin r0),
///  H + (sqrt(2)/2)(2n-3),
///  sqrt(2)(n-1) tan((2/(2n-1))(pi/4 - H (1 - 1/sin r0) 3 sqrt(2) pi / 4)) + H).
/// All three positive (the third nonnegative) puts (H, r0) inside the
/// no-stall regime. A tangent argument outside (-pi/2, pi/2) is reported as
/// a failed third hypothesis.
pub fn no_stall_hypotheses(params: &Params, r0: f64) -> (f64, f64, f64) {
    let nf = f64::from(params.n);
    let q = params.h * (1.0 - 1.0 / r0.sin());
    let h1 = 1.0 - 3.0 * SQRT_2 * q;
    let h2 = params.h + (SQRT_2 / 2.0) * (2.0 * nf - 3.0);
    let arg = (2.0 / (2.0 * nf - 1.0)) * (FRAC_PI_4 - q * (3.0 * SQRT_2 * PI / 4.0));
    let h3 = if arg.abs() < FRAC_PI_2 {
        SQRT_2 * (nf - 1.0) * arg.tan() + params.h
    } else {
        f64::NEG_INFINITY
    };
    (h1, h2, h3)
}

/// Hypothesis margins of the alpha < -pi/4 criterion (the no-stall
/// hypotheses without the dimensional bound on H).
pub fn quarter_bound_hypotheses(params: &Params, r0: f64) -> (f64, f64) {
    let (h1, _, h3) = no_stall_hypotheses(params, r0);
    (h1, h3)
}

/// No Stall outcome on any hypothesis-satisfying (H, r0) pair of a uniform
/// radius grid; the margin is the terminal alpha', which stays strictly
/// positive at HitR/HitA endings.
pub fn check_no_stall(
    params: &Params,
    r0_min: f64,
    r0_max: f64,
    count: usize,
    controls: &IntegrationControls,
) -> Result<LemmaReport, ShootError> {
    let mut report = LemmaReport::new("no_stall");
    for i in 0..count {
        let r0 = r0_min + (r0_max - r0_min) * (i as f64) / ((count - 1).max(1) as f64);
        let (h1, h2, h3) = no_stall_hypotheses(params, r0);
        if !(h1 > 0.0 && h2 >= 0.0 && h3 >= 0.0) {
            report.record_vacuous();
            continue;
        }
        let (kind, terminal) = classify(r0, params, controls)?;
        let alpha_dot = vector_field(&terminal, params)
            .map(|d| d.dalpha)
            .unwrap_or(f64::NAN);
        let margin = if kind == OutcomeKind::Stall {
            -1.0
        } else {
            alpha_dot
        };
        report.record(margin, || Witness {
            n: params.n,
            h: params.h,
            r0,
            s: terminal.s,
            values: vec![h1, h2, h3, alpha_dot],
        });
    }
    Ok(report)
}

/// Terminal radii approach a(H) as r0 does: the deviations |r(s*) - a(H)|
/// for r0 = a(H) - 10^-k, k = 1..5, shrink strictly; each margin is
/// 1 - (successive deviation ratio). While consecutive probes still end at
/// r = pi/2 the deviation is pinned at the constant gap pi/2 - a(H) and the
/// pair carries no limit information (the basin boundary lies deeper than
/// the ladder for larger n and small |H|); such pairs count as vacuous.
pub fn check_limit_approach(
    params: &Params,
    controls: &IntegrationControls,
) -> Result<LemmaReport, ShootError> {
    let mut report = LemmaReport::new("limit_approach");
    let a = radius_bound(params);
    let mut prev: Option<(f64, OutcomeKind)> = None;
    for k in 1..=5 {
        let r0 = a - 10f64.powi(-k);
        let (kind, terminal) = classify(r0, params, controls)?;
        let dev = (terminal.r - a).abs();
        if let Some((p, p_kind)) = prev {
            if p_kind == OutcomeKind::HitR && kind == OutcomeKind::HitR {
                report.record_vacuous();
            } else {
                let ratio = dev / p;
                report.record(1.0 - ratio, || Witness {
                    n: params.n,
                    h: params.h,
                    r0,
                    s: terminal.s,
                    values: vec![p, dev, ratio],
                });
            }
        }
        prev = Some((dev, kind));
    }
    Ok(report)
}

/// The reflected sample paths solve the system: finite differences of
/// R(x(-s)) along resampled interior points match the vector field at the
/// transformed states (relative, with the field magnitude as floor) within
/// 1e-6, and the field is invariant under alpha shifts by 2 pi within
/// 1e-12. Margins are normalized to the tolerance of each case
/// (1 - residual/tolerance), so the two scales aggregate meaningfully.
pub fn check_symmetry_solutions(traj: &Trajectory, points: usize) -> LemmaReport {
    let mut report = LemmaReport::new("symmetry");
    let (n, h, r0) = traj_meta(traj);
    let s_star = traj.terminal_s();
    let params = &traj.params;

    for kind in [SymmetryKind::PolarReflection, SymmetryKind::AngularReflection] {
        // Reflected path sigma(u) = R(x(-u)) on u in [-s*, 0]; at interior
        // u the centered difference (sigma(u + d) - sigma(u - d)) / 2d uses
        // original-path samples at s = -u -+ d.
        let mut worst = 0.0f64;
        let mut worst_s = 0.0;
        for i in 1..=points {
            let s = s_star * (i as f64) / ((points + 1) as f64);
            let st = traj.sample(s).unwrap();
            // Step scaled to the local feature size: the field coefficients
            // steepen like 1/sin(r) and cot(2 theta) toward the chart edges.
            let d = 1e-4f64.min(st.theta.min(st.r) * 3e-4).max(1e-9);
            if s - d <= 0.0 || s + d >= s_star {
                continue;
            }
            let plus = apply_symmetry(&traj.sample(s - d).unwrap(), kind);
            let minus = apply_symmetry(&traj.sample(s + d).unwrap(), kind);
            let fd = [
                (plus.r - minus.r) / (2.0 * d),
                (plus.theta - minus.theta) / (2.0 * d),
                (plus.alpha - minus.alpha) / (2.0 * d),
            ];
            let img = apply_symmetry(&st, kind);
            let f = match vector_field(&img, params) {
                Ok(f) => f,
                Err(_) => continue,
            };
            let scale = 1.0f64
                .max(f.dr.abs())
                .max(f.dtheta.abs())
                .max(f.dalpha.abs());
            let res = (fd[0] - f.dr)
                .abs()
                .max((fd[1] - f.dtheta).abs())
                .max((fd[2] - f.dalpha).abs())
                / scale;
            if res > worst {
                worst = res;
                worst_s = s;
            }
        }
        report.record(1.0 - worst / 1e-6, || Witness {
            n,
            h,
            r0,
            s: worst_s,
            values: vec![worst],
        });
    }

    for k in [1, -1] {
        let mut worst = 0.0f64;
        for i in 1..=8 {
            let s = s_star * (i as f64) / 9.0;
            let st = traj.sample(s).unwrap();
            let shifted = apply_symmetry(&st, SymmetryKind::AlphaShift(k));
            if let (Ok(a), Ok(b)) = (vector_field(&st, params), vector_field(&shifted, params)) {
                let scale = 1.0f64.max(a.dtheta.abs()).max(a.dalpha.abs());
                worst = worst
                    .max((a.dr - b.dr).abs() / scale)
                    .max((a.dtheta - b.dtheta).abs() / scale)
                    .max((a.dalpha - b.dalpha).abs() / scale);
            }
        }
        report.record(1.0 - worst / 1e-12, || Witness {
            n,
            h,
            r0,
            s: 0.0,
            values: vec![worst, f64::from(k)],
        });
    }
    report
}

/// Conditional alpha < -pi/4 bound, checked in contrapositive mode: a
/// non-Stall run is a vacuous pass; on a Stall run the bound must hold at
/// every interior sample. Witness values carry the hypothesis margins.
pub fn check_alpha_quarter_bound(traj: &Trajectory) -> LemmaReport {
    let mut report = LemmaReport::new("alpha_quarter_bound");
    let (n, h, r0) = traj_meta(traj);
    if traj.outcome.kind != OutcomeKind::Stall {
        report.record_vacuous();
        return report;
    }
    let (h1, h3) = quarter_bound_hypotheses(&traj.params, r0);
    let mut max_alpha = f64::NEG_INFINITY;
    let mut at = 0.0;
    for smp in traj.samples.iter().skip(1) {
        if smp.state.alpha > max_alpha {
            max_alpha = smp.state.alpha;
            at = smp.state.s;
        }
    }
    report.record(-FRAC_PI_4 - max_alpha, || Witness {
        n,
        h,
        r0,
        s: at,
        values: vec![max_alpha, h1, h3],
    });
    report
}

/// Sweep configuration of the default verification suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub n_values: Vec<u32>,
    pub h_values: Vec<f64>,
    pub r0_count: usize,
    pub symmetry_points: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            n_values: vec![2, 3, 4],
            h_values: vec![-0.01, -0.05, -0.1, -0.2],
            r0_count: 64,
            symmetry_points: 256,
        }
    }
}

/// Run every lemma check over the sweep grids and merge per lemma id.
/// Grid cells run in parallel; aggregation is order-independent, so the
/// merged reports are deterministic.
pub fn run_suite(
    config: &SuiteConfig,
    controls: &IntegrationControls,
) -> Result<Vec<LemmaReport>, ShootError> {
    let cells: Vec<(u32, f64)> = config
        .n_values
        .iter()
        .flat_map(|&n| config.h_values.iter().map(move |&h| (n, h)))
        .collect();

    let per_cell: Vec<Vec<LemmaReport>> = cells
        .par_iter()
        .map(|&(n, h)| -> Result<Vec<LemmaReport>, ShootError> {
            let params = Params { n, h };
            let a = radius_bound(&params);
            let (lo, hi) = (SCAN_R0_MIN, a - SCAN_EDGE_MARGIN);
            let mut monotonicity = LemmaReport::new("monotonicity");
            let mut arclength = LemmaReport::new("arclength");
            let mut linear = LemmaReport::new("alpha_linear_bound");
            let mut symmetry = LemmaReport::new("symmetry");
            let mut quarter = LemmaReport::new("alpha_quarter_bound");
            for i in 0..config.r0_count {
                let r0 =
                    lo + (hi - lo) * (i as f64) / ((config.r0_count - 1).max(1) as f64);
                let traj = crate::integrator::integrate(State::initial(r0), params, controls)
                    .map_err(|source| ShootError::Integration { r0, source })?;
                monotonicity.merge(check_monotonicity(&traj));
                arclength.merge(check_arclength_bound(&traj));
                linear.merge(check_alpha_linear_bound(&traj));
                symmetry.merge(check_symmetry_solutions(&traj, config.symmetry_points));
                quarter.merge(check_alpha_quarter_bound(&traj));
            }
            let no_stall = check_no_stall(&params, lo, hi, config.r0_count, controls)?;
            let limit = check_limit_approach(&params, controls)?;
            Ok(vec![
                monotonicity,
                arclength,
                linear,
                no_stall,
                limit,
                symmetry,
                quarter,
            ])
        })
        .collect::<Result<_, _>>()?;

    let mut merged: Vec<LemmaReport> = Vec::new();
    for cell in per_cell {
        for report in cell {
            match merged.iter_mut().find(|r| r.lemma_id == report.lemma_id) {
                Some(existing) => existing.merge(report),
                None => merged.push(report),
            }
        }
    }
    Ok(merged)
}
