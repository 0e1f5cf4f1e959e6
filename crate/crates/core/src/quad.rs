//! Composite Simpson quadrature.

/// Integrates `f` over `[a, b]` with `n` intervals (rounded up to even).
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = (n.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in 1..n {
        let v = f(a + i as f64 * h);
        if i % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    h / 3.0 * (f(a) + f(b) + 4.0 * odd + 2.0 * even)
}

/// Trapezoid rule on uniformly spaced samples.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => h * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1])),
    }
}

/// Running Simpson/trapezoid integral on a uniform grid: `out[i] ≈ ∫_{x0}^{x_i}`.
///
/// Even indices use Simpson's rule; odd indices add a half-interval
/// correction from the quadratic through three neighbouring points.
pub fn cumulative(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n == 2 {
        out[1] = 0.5 * h * (values[0] + values[1]);
        return out;
    }
    let mut i = 0;
    while i + 2 < n {
        let (y0, y1, y2) = (values[i], values[i + 1], values[i + 2]);
        // ∫ over the first half of the parabola through (y0, y1, y2)
        out[i + 1] = out[i] + h / 12.0 * (5.0 * y0 + 8.0 * y1 - y2);
        out[i + 2] = out[i] + h / 3.0 * (y0 + 4.0 * y1 + y2);
        i += 2;
    }
    if i + 1 < n {
        let (y0, y1, y2) = (values[i - 1], values[i], values[i + 1]);
        out[i + 1] = out[i] + h / 12.0 * (-y0 + 8.0 * y1 + 5.0 * y2);
    }
    out
}
