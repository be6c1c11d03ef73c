//! Self-contained SVG rendering of closed profile curves: one path element
//! per curve on a fixed 800x600 viewport, no timestamps.

use hypertorus_core::{embed, ProfileCurve};
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 600.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 25.0;
const MARGIN_TOP: f64 = 25.0;
const MARGIN_BOTTOM: f64 = 55.0;

/// Branch colors in order; the first two match the usual red/green
/// convention for the two CMC branches.
const COLORS: [&str; 4] = ["#cc0000", "#008800", "#0044cc", "#cc8800"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    /// Plot (r, theta) in the coordinate rectangle [0, pi] x [0, pi/2].
    RTheta,
    /// Plot (x, y) = (sin r cos theta, sin r sin theta) in [0, 1]^2.
    Xy,
}

impl std::str::FromStr for Projection {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rtheta" => Ok(Projection::RTheta),
            "xy" => Ok(Projection::Xy),
            other => Err(format!("unknown projection `{other}` (rtheta, xy)")),
        }
    }
}

impl Projection {
    fn domain(&self) -> ((f64, f64), (f64, f64)) {
        match self {
            Projection::RTheta => ((0.0, PI), (0.0, FRAC_PI_2)),
            Projection::Xy => ((0.0, 1.0), (0.0, 1.0)),
        }
    }

    fn labels(&self) -> (&'static str, &'static str) {
        match self {
            Projection::RTheta => ("r", "theta"),
            Projection::Xy => ("x", "y"),
        }
    }

    fn map_point(&self, r: f64, theta: f64) -> (f64, f64) {
        match self {
            Projection::RTheta => (r, theta),
            Projection::Xy => {
                let [x, y, _] = embed(r, theta);
                (x, y)
            }
        }
    }
}

fn scale(v: f64, (lo, hi): (f64, f64), out_lo: f64, out_hi: f64) -> f64 {
    out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo)
}

pub fn render(curves: &[&ProfileCurve], projection: Projection, title: &str) -> String {
    let (dx, dy) = projection.domain();
    let (xl, yl) = projection.labels();
    let px = |u: f64| scale(u, dx, MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let py = |v: f64| scale(v, dy, HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(
        svg,
        "  <rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{:.1}\" y=\"16\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{title}</text>",
        WIDTH / 2.0
    );

    // frame and axis labels
    let _ = writeln!(
        svg,
        "  <rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"black\"/>",
        MARGIN_LEFT,
        MARGIN_TOP,
        WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
        HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{xl}</text>",
        (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
        HEIGHT - 14.0
    );
    let _ = writeln!(
        svg,
        "  <text x=\"18\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.1})\">{yl}</text>",
        (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0,
        (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0
    );

    // ticks at the quarters of each axis
    for i in 0..=4 {
        let fx = dx.0 + (dx.1 - dx.0) * (i as f64) / 4.0;
        let fy = dy.0 + (dy.1 - dy.0) * (i as f64) / 4.0;
        let _ = writeln!(
            svg,
            "  <line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>",
            px(fx),
            HEIGHT - MARGIN_BOTTOM,
            px(fx),
            HEIGHT - MARGIN_BOTTOM + 5.0
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{:.3}</text>",
            px(fx),
            HEIGHT - MARGIN_BOTTOM + 18.0,
            fx
        );
        let _ = writeln!(
            svg,
            "  <line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>",
            MARGIN_LEFT - 5.0,
            py(fy),
            MARGIN_LEFT,
            py(fy)
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{:.3}</text>",
            MARGIN_LEFT - 8.0,
            py(fy) + 4.0,
            fy
        );
    }

    for (i, curve) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut d = String::with_capacity(curve.points.len() * 16);
        for (j, p) in curve.points.iter().enumerate() {
            let (u, v) = projection.map_point(p.r, p.theta);
            let _ = write!(
                d,
                "{}{:.3} {:.3}",
                if j == 0 { "M" } else { " L" },
                px(u),
                py(v)
            );
        }
        let _ = writeln!(
            svg,
            "  <path d=\"{d}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>"
        );
    }

    svg.push_str("</svg>\n");
    svg
}
