//! Finite-difference reference derivatives, compiled only into tests.

/// Sixth-order central stencils for the first three derivatives of `f` at `t`.
pub fn derivatives(f: impl Fn(f64) -> f64, t: f64, h: f64) -> [f64; 3] {
    let at = |k: f64| f(t + k * h);
    let d1 = (-at(-3.0) + 9.0 * at(-2.0) - 45.0 * at(-1.0) + 45.0 * at(1.0) - 9.0 * at(2.0)
        + at(3.0))
        / (60.0 * h);
    let d2 = (2.0 * at(-3.0) - 27.0 * at(-2.0) + 270.0 * at(-1.0) - 490.0 * at(0.0)
        + 270.0 * at(1.0)
        - 27.0 * at(2.0)
        + 2.0 * at(3.0))
        / (180.0 * h * h);
    let d3 = (-7.0 * at(-4.0) + 72.0 * at(-3.0) - 338.0 * at(-2.0) + 488.0 * at(-1.0)
        - 488.0 * at(1.0)
        + 338.0 * at(2.0)
        - 72.0 * at(3.0)
        + 7.0 * at(4.0))
        / (240.0 * h * h * h);
    [d1, d2, d3]
}

/// Central-difference gradient of `f` over every entry of `x`.
pub fn gradient(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut x = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + h;
            let up = f(&x);
            x[i] = orig - h;
            let down = f(&x);
            x[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `|a - b| <= max(rel * max(|a|, |b|), abs)`.
pub fn within(a: f64, b: f64, rel: f64, abs: f64) -> bool {
    (a - b).abs() <= (rel * a.abs().max(b.abs())).max(abs)
}
