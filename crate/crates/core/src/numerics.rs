//! Fixed-rule quadrature used by the analytic oracles.

/// Composite Simpson rule over `[a, b]` with at least `min_panels` panels
/// (rounded up to an even count).
pub fn simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, min_panels: usize) -> f64 {
    let n = (min_panels.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Simpson rule with the panel count chosen so that the step does not
/// exceed `max_step`.
pub fn simpson_step<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, max_step: f64) -> f64 {
    let panels = ((b - a).abs() / max_step).ceil() as usize;
    simpson(f, a, b, panels)
}
