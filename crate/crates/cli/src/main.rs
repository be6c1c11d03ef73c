//! Command-line driver: solve for the branch curves, sweep initial radii,
//! run the verification suite, and render profile curves.

mod config;
mod export;
mod svg;

use clap::{Args, Parser, Subcommand};
use config::{failure, fnv1a64, pick, require, usage, CliError, ControlArgs, FileConfig};
use export::{
    curve_csv, sweep_csv, to_json, write_text, BranchSummary, SolveSummary, SweepSummary,
    VerifyReport, SCHEMA_VERSION,
};
use hypertorus_core::{
    build_closed_profile, cmc_residual, epsilon_bound, find_branches, is_simple, radius_bound,
    run_suite, scan, CurvePoint, Params, ProfileCurve, ShootError, SuiteConfig,
    DEFAULT_CURVE_POINTS,
};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::process::ExitCode;
use svg::Projection;

#[derive(Parser)]
#[command(
    name = "hypertorus",
    version,
    about = "Shooting solver for CMC hypertorus profile curves in round spheres"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Locate the branch radii and export the closed profile curves
    Solve(SolveArgs),
    /// Classify a grid of initial radii and report the basin brackets
    Sweep(SweepArgs),
    /// Run the lemma verification suite over the default parameter grids
    Verify(VerifyArgs),
    /// Render the closed profile curves to SVG
    Render(RenderArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
    Svg,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(format!("unknown format `{other}` (csv, json, svg)")),
        }
    }
}

#[derive(Args)]
struct CommonArgs {
    /// Flat key=value config file; flags override file values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default ./out, or HYPERTORUS_OUT_DIR)
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[command(flatten)]
    controls: ControlArgs,
}

#[derive(Args)]
struct SolveArgs {
    /// Dimension parameter, n >= 2
    #[arg(long)]
    n: Option<u32>,
    /// Mean curvature (zero or negative)
    #[arg(long = "H", allow_negative_numbers = true)]
    h: Option<f64>,
    /// Bisection width target in r0
    #[arg(long)]
    branch_tol: Option<f64>,
    /// Resampled points per closed curve
    #[arg(long)]
    points: Option<usize>,
    /// Curve artifact format: csv, json, or svg
    #[arg(long)]
    format: Option<Format>,
    /// SVG projection: rtheta or xy
    #[arg(long)]
    projection: Option<Projection>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Dimension parameter, n >= 2
    #[arg(long)]
    n: Option<u32>,
    /// Mean curvature (zero or negative)
    #[arg(long = "H", allow_negative_numbers = true)]
    h: Option<f64>,
    /// Lower end of the initial-radius grid
    #[arg(long)]
    r0_min: Option<f64>,
    /// Upper end of the initial-radius grid
    #[arg(long)]
    r0_max: Option<f64>,
    /// Number of grid points (>= 2)
    #[arg(long)]
    steps: Option<usize>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// Emit only the report with this lemma id
    #[arg(long)]
    lemma: Option<String>,
    /// Radii per (n, H) grid cell (default 64)
    #[arg(long)]
    r0_count: Option<usize>,
    /// Resampled points per symmetry check (default 256)
    #[arg(long)]
    symmetry_points: Option<usize>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct RenderArgs {
    /// Dimension parameter, n >= 2
    #[arg(long)]
    n: Option<u32>,
    /// Mean curvature (zero or negative)
    #[arg(long = "H", allow_negative_numbers = true)]
    h: Option<f64>,
    /// Bisection width target in r0
    #[arg(long)]
    branch_tol: Option<f64>,
    /// Resampled points per closed curve
    #[arg(long)]
    points: Option<usize>,
    /// SVG projection: rtheta or xy
    #[arg(long)]
    projection: Option<Projection>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Serialize, Deserialize)]
struct CurveFile {
    schema_version: u32,
    points: Vec<CurvePoint>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => run_solve(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Verify(args) => run_verify(args),
        Command::Render(args) => run_render(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Failure(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn run_dir(command: &str, canonical: &str, common: &CommonArgs, file: &FileConfig) -> Result<PathBuf, CliError> {
    let base = common
        .out_dir
        .clone()
        .or(file.get::<PathBuf>("out_dir")?)
        .or_else(|| std::env::var_os("HYPERTORUS_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let dir = base.join(format!("{command}-{:016x}", fnv1a64(canonical)));
    std::fs::create_dir_all(&dir)
        .map_err(|e| failure(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn resolve_params(
    n: Option<u32>,
    h: Option<f64>,
    file: &FileConfig,
) -> Result<Params, CliError> {
    let n = require(n, file.get("n")?, "n")?;
    let h = require(h, file.get("H")?, "H")?;
    let params = Params::new(n, h).map_err(|e| usage(e.to_string()))?;
    if h > 0.0 {
        return Err(usage(format!(
            "branch workflows require H <= 0, got {h}"
        )));
    }
    Ok(params)
}

struct SolvedBranches {
    params: Params,
    curves: Vec<ProfileCurve>,
    summary: SolveSummary,
}

fn solve_pipeline(
    params: Params,
    branch_tol: f64,
    points: usize,
    controls: &hypertorus_core::IntegrationControls,
) -> Result<SolvedBranches, CliError> {
    let branches = find_branches(&params, controls, branch_tol)
        .map_err(|e| failure(format!("stage find_branches: {e}")))?;

    // Small-curvature estimate (with the nonconstructive term omitted),
    // using the lower branch radius as a stand-in for the H = 0 boundary
    // radius it exceeds.
    let eps = epsilon_bound(params.n, branches[0].rho.min(1.5), f64::INFINITY);
    if params.h.abs() >= eps {
        eprintln!(
            "warning: |H| = {} reaches the small-curvature estimate {eps:.4} for n = {}; \
             the two-branch structure is not guaranteed there",
            params.h.abs(),
            params.n
        );
    }

    let mut curves = Vec::new();
    let mut summaries = Vec::new();
    for (i, b) in branches.iter().enumerate() {
        let curve = build_closed_profile(b, points)
            .map_err(|e| failure(format!("stage build_closed_profile (branch {}): {e}", i + 1)))?;
        let (simple, min_dist) = is_simple(&curve);
        if !simple {
            return Err(failure(format!(
                "stage is_simple (branch {}): profile curve self-intersects",
                i + 1
            )));
        }
        summaries.push(BranchSummary {
            rho: b.rho,
            s_star: b.s_star,
            residual_r: b.residual_r,
            residual_alpha: b.residual_alpha,
            closure_gap: curve.closure_gap,
            min_self_distance: min_dist,
            simple,
            cmc_residual: cmc_residual(&curve, &params),
            total_length: curve.total_length,
        });
        curves.push(curve);
    }
    let summary = SolveSummary {
        schema_version: SCHEMA_VERSION,
        n: params.n,
        h: params.h,
        radius_bound: radius_bound(&params),
        branch_tol,
        curve_points: points,
        branches: summaries,
    };
    Ok(SolvedBranches {
        params,
        curves,
        summary,
    })
}

fn print_solve_summary(solved: &SolvedBranches) {
    println!(
        "n={} H={}: {} branch(es), a(H)={:.9}",
        solved.params.n,
        solved.params.h,
        solved.summary.branches.len(),
        solved.summary.radius_bound
    );
    for (i, b) in solved.summary.branches.iter().enumerate() {
        println!(
            "  branch {}: rho={:.9} s*={:.9} residuals=({:.2e}, {:.2e}) simple={} cmc_residual={:.2e}",
            i + 1,
            b.rho,
            b.s_star,
            b.residual_r,
            b.residual_alpha,
            b.simple,
            b.cmc_residual
        );
    }
}

fn run_solve(args: SolveArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let params = resolve_params(args.n, args.h, &file)?;
    let branch_tol = pick(args.branch_tol, file.get("branch_tol")?, 1e-8);
    let points = pick(args.points, file.get("points")?, DEFAULT_CURVE_POINTS);
    let format = pick(args.format, file.get("format")?, Format::Csv);
    let projection = pick(args.projection, file.get("projection")?, Projection::RTheta);
    if !(branch_tol > 0.0) {
        return Err(usage("branch_tol must be strictly positive"));
    }
    let controls = args.common.controls.resolve(&file)?;

    let canonical = format!(
        "solve n={} H={:?} branch_tol={:?} points={} format={:?} projection={:?} {}",
        params.n,
        params.h,
        branch_tol,
        points,
        format,
        projection,
        args.common.controls.describe(&file)?
    );
    let dir = run_dir("solve", &canonical, &args.common, &file)?;

    let solved = solve_pipeline(params, branch_tol, points, &controls)?;
    write_text(&dir.join("summary.json"), &to_json(&solved.summary))?;
    match format {
        Format::Csv => {
            for (i, curve) in solved.curves.iter().enumerate() {
                write_text(&dir.join(format!("branch-{}.csv", i + 1)), &curve_csv(curve))?;
            }
        }
        Format::Json => {
            for (i, curve) in solved.curves.iter().enumerate() {
                let payload = CurveFile {
                    schema_version: SCHEMA_VERSION,
                    points: curve.points.clone(),
                };
                write_text(
                    &dir.join(format!("branch-{}.json", i + 1)),
                    &to_json(&payload),
                )?;
            }
        }
        Format::Svg => {
            let refs: Vec<&ProfileCurve> = solved.curves.iter().collect();
            let title = format!(
                "profile curves, n={} H={}",
                solved.params.n, solved.params.h
            );
            write_text(
                &dir.join("curves.svg"),
                &svg::render(&refs, projection, &title),
            )?;
        }
    }
    print_solve_summary(&solved);
    println!("artifacts written to {}", dir.display());
    Ok(())
}

fn run_render(args: RenderArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let params = resolve_params(args.n, args.h, &file)?;
    let branch_tol = pick(args.branch_tol, file.get("branch_tol")?, 1e-8);
    let points = pick(args.points, file.get("points")?, DEFAULT_CURVE_POINTS);
    let projection = pick(args.projection, file.get("projection")?, Projection::RTheta);
    let controls = args.common.controls.resolve(&file)?;

    let canonical = format!(
        "render n={} H={:?} branch_tol={:?} points={} projection={:?} {}",
        params.n,
        params.h,
        branch_tol,
        points,
        projection,
        args.common.controls.describe(&file)?
    );
    let dir = run_dir("render", &canonical, &args.common, &file)?;

    let solved = solve_pipeline(params, branch_tol, points, &controls)?;
    let refs: Vec<&ProfileCurve> = solved.curves.iter().collect();
    let title = format!("profile curves, n={} H={}", params.n, params.h);
    write_text(
        &dir.join("curves.svg"),
        &svg::render(&refs, projection, &title),
    )?;
    print_solve_summary(&solved);
    println!("artifacts written to {}", dir.display());
    Ok(())
}

fn run_sweep(args: SweepArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let params = resolve_params(args.n, args.h, &file)?;
    let r0_min: f64 = require(args.r0_min, file.get("r0_min")?, "r0_min")?;
    let r0_max: f64 = require(args.r0_max, file.get("r0_max")?, "r0_max")?;
    let steps: usize = require(args.steps, file.get("steps")?, "steps")?;
    let controls = args.common.controls.resolve(&file)?;

    let canonical = format!(
        "sweep n={} H={:?} r0_min={:?} r0_max={:?} steps={} {}",
        params.n,
        params.h,
        r0_min,
        r0_max,
        steps,
        args.common.controls.describe(&file)?
    );
    let dir = run_dir("sweep", &canonical, &args.common, &file)?;

    let result = scan(&params, r0_min, r0_max, steps, &controls).map_err(|e| match e {
        ShootError::InvalidRange
        | ShootError::InvalidInitial { .. }
        | ShootError::PositiveMeanCurvature { .. } => usage(e.to_string()),
        other => failure(format!("stage scan: {other}")),
    })?;

    write_text(&dir.join("sweep.csv"), &sweep_csv(&result))?;
    let summary = SweepSummary {
        schema_version: SCHEMA_VERSION,
        n: params.n,
        h: params.h,
        r0_min,
        r0_max,
        steps,
        brackets: result.brackets.clone(),
    };
    write_text(&dir.join("brackets.json"), &to_json(&summary))?;
    println!(
        "n={} H={}: {} grid points, {} bracket(s)",
        params.n,
        params.h,
        result.grid.len(),
        result.brackets.len()
    );
    for (lo, hi) in &result.brackets {
        println!("  bracket [{lo:.9}, {hi:.9}]");
    }
    println!("artifacts written to {}", dir.display());
    Ok(())
}

const LEMMA_IDS: [&str; 7] = [
    "monotonicity",
    "arclength",
    "alpha_linear_bound",
    "no_stall",
    "limit_approach",
    "symmetry",
    "alpha_quarter_bound",
];

fn run_verify(args: VerifyArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let lemma = args.lemma.clone().or(file.get("lemma")?);
    if let Some(id) = &lemma {
        if !LEMMA_IDS.contains(&id.as_str()) {
            return Err(usage(format!(
                "unknown lemma id `{id}`; known: {}",
                LEMMA_IDS.join(", ")
            )));
        }
    }
    let suite = SuiteConfig {
        r0_count: pick(args.r0_count, file.get("r0_count")?, 64),
        symmetry_points: pick(args.symmetry_points, file.get("symmetry_points")?, 256),
        ..SuiteConfig::default()
    };
    let controls = args.common.controls.resolve(&file)?;

    let canonical = format!(
        "verify lemma={lemma:?} r0_count={} symmetry_points={} {}",
        suite.r0_count,
        suite.symmetry_points,
        args.common.controls.describe(&file)?
    );
    let dir = run_dir("verify", &canonical, &args.common, &file)?;

    let reports = run_suite(&suite, &controls)
        .map_err(|e| failure(format!("stage run_suite: {e}")))?;
    let selected: Vec<_> = reports
        .into_iter()
        .filter(|r| lemma.as_deref().is_none_or(|id| id == r.lemma_id))
        .collect();
    let all_passed = selected.iter().all(|r| r.passed());
    let report = VerifyReport {
        schema_version: SCHEMA_VERSION,
        all_passed,
        reports: selected,
    };
    write_text(&dir.join("report.json"), &to_json(&report))?;

    for r in &report.reports {
        println!(
            "{:<22} {}  cases {}/{} (vacuous {})  worst margin {}",
            r.lemma_id,
            if r.passed() { "PASS" } else { "FAIL" },
            r.cases_passed,
            r.cases_run,
            r.vacuous_cases,
            r.worst_margin
                .map(|m| format!("{m:.6e}"))
                .unwrap_or_else(|| "-".to_string())
        );
    }
    println!("artifacts written to {}", dir.display());
    if !all_passed {
        let failing: Vec<&str> = report
            .reports
            .iter()
            .filter(|r| !r.passed())
            .map(|r| r.lemma_id.as_str())
            .collect();
        return Err(failure(format!("failing lemmas: {}", failing.join(", "))));
    }
    Ok(())
}
