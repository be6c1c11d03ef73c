//! Deterministic artifact writers: curve/sweep CSV, versioned JSON.
//!
//! CSV numbers carry 17 significant digits; JSON uses shortest
//! round-trip formatting. Identical configurations produce byte-identical
//! files.

use crate::config::{failure, CliError};
use hypertorus_core::{embed, LemmaReport, ProfileCurve, ScanResult};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BranchSummary {
    pub rho: f64,
    pub s_star: f64,
    pub residual_r: f64,
    pub residual_alpha: f64,
    pub closure_gap: f64,
    pub min_self_distance: f64,
    pub simple: bool,
    pub cmc_residual: f64,
    pub total_length: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SolveSummary {
    pub schema_version: u32,
    pub n: u32,
    pub h: f64,
    pub radius_bound: f64,
    pub branch_tol: f64,
    pub curve_points: usize,
    pub branches: Vec<BranchSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SweepSummary {
    pub schema_version: u32,
    pub n: u32,
    pub h: f64,
    pub r0_min: f64,
    pub r0_max: f64,
    pub steps: usize,
    pub brackets: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub all_passed: bool,
    pub reports: Vec<LemmaReport>,
}

pub fn write_text(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content)
        .map_err(|e| failure(format!("cannot write {}: {e}", path.display())))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable artifact");
    s.push('\n');
    s
}

/// CSV columns exactly `s,r,theta,alpha,x,y,z`, 17 significant digits.
pub fn curve_csv(curve: &ProfileCurve) -> String {
    let mut out = String::with_capacity(curve.points.len() * 160);
    out.push_str("s,r,theta,alpha,x,y,z\n");
    for p in &curve.points {
        let [x, y, z] = embed(p.r, p.theta);
        let _ = writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            p.s, p.r, p.theta, p.alpha, x, y, z
        );
    }
    out
}

/// One row per classified grid point.
pub fn sweep_csv(scan: &ScanResult) -> String {
    let mut out = String::with_capacity(scan.grid.len() * 120);
    out.push_str("r0,outcome,terminal_r,terminal_theta,terminal_alpha,s_star\n");
    for p in &scan.grid {
        let t = &p.terminal;
        let _ = writeln!(
            out,
            "{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e}",
            p.r0, p.kind, t.r, t.theta, t.alpha, t.s
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use hypertorus_core::CurvePoint;

    #[test]
    fn curve_csv_layout() {
        let curve = ProfileCurve {
            points: vec![CurvePoint {
                s: 0.0,
                r: 1.29691,
                theta: std::f64::consts::FRAC_PI_4,
                alpha: -std::f64::consts::FRAC_PI_2,
                dalpha: 0.0,
            }],
            quarter_length: 1.0,
            total_length: 4.0,
            closure_gap: 0.0,
            min_self_distance: 1.0,
        };
        let csv = curve_csv(&curve);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "s,r,theta,alpha,x,y,z");
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 7);
        assert_eq!(row[1].parse::<f64>().unwrap(), 1.29691);
        assert_eq!(
            row[2].parse::<f64>().unwrap(),
            std::f64::consts::FRAC_PI_4
        );
        assert_eq!(
            row[3].parse::<f64>().unwrap(),
            -std::f64::consts::FRAC_PI_2
        );
        // 17 significant digits: d.dddddddddddddddde...
        assert!(row[0].starts_with("0.0000000000000000e0"));
    }

    #[test]
    fn json_round_trip() {
        let summary = SolveSummary {
            schema_version: SCHEMA_VERSION,
            n: 2,
            h: -0.2,
            radius_bound: 1.5042281630190728,
            branch_tol: 1e-8,
            curve_points: 2048,
            branches: vec![BranchSummary {
                rho: 1.2973053,
                s_star: 0.7575,
                residual_r: 1e-9,
                residual_alpha: 1e-10,
                closure_gap: 0.0,
                min_self_distance: 0.01,
                simple: true,
                cmc_residual: 1e-8,
                total_length: 3.03,
            }],
        };
        let json = to_json(&summary);
        let back: SolveSummary = serde_json::from_str(&json).unwrap();
        assert_eq!(summary, back);
    }
}
