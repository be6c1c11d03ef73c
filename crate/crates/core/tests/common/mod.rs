//! Shared test oracles: a fixed-step classical RK4 integrator, independent
//! of the adaptive Dormand-Prince path under test.

use hypertorus_core::{vector_field, Params, State};

pub type V3 = [f64; 3];

pub fn field(params: &Params, y: V3) -> V3 {
    let d = vector_field(&State::new(y[0], y[1], y[2], 0.0), params)
        .expect("oracle left the chart");
    [d.dr, d.dtheta, d.dalpha]
}

pub fn rk4_step(params: &Params, y: V3, h: f64) -> V3 {
    let k1 = field(params, y);
    let k2 = field(params, add(y, scale(k1, 0.5 * h)));
    let k3 = field(params, add(y, scale(k2, 0.5 * h)));
    let k4 = field(params, add(y, scale(k3, h)));
    let mut out = y;
    for i in 0..3 {
        out[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn add(a: V3, b: V3) -> V3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn scale(a: V3, c: f64) -> V3 {
    [a[0] * c, a[1] * c, a[2] * c]
}

/// Integrate from y0 over the given length with steps of size at most h_max.
pub fn rk4_integrate(params: &Params, y0: V3, length: f64, h_max: f64) -> V3 {
    if length == 0.0 {
        return y0;
    }
    let steps = (length / h_max).ceil().max(1.0) as usize;
    let h = length / steps as f64;
    let mut y = y0;
    for _ in 0..steps {
        y = rk4_step(params, y, h);
    }
    y
}

pub fn assert_close(got: f64, want: f64, tol: f64, what: &str) {
    assert!(
        (got - want).abs() <= tol,
        "{what}: got {got}, want {want} (tol {tol}, diff {})",
        (got - want).abs()
    );
}
