//! Third-order jets in the scalar time input.
//!
//! A [`Jet3`] carries `f(t), f'(t), f''(t), f'''(t)`. Components are plain
//! derivative values, not Taylor coefficients, so the propagation rules are
//! the Leibniz product rule and the Faà di Bruno chain rule truncated at
//! order three.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet3 {
    pub d0: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl Jet3 {
    pub const ZERO: Jet3 = Jet3 { d0: 0.0, d1: 0.0, d2: 0.0, d3: 0.0 };

    #[inline]
    pub const fn new(d0: f64, d1: f64, d2: f64, d3: f64) -> Self {
        Self { d0, d1, d2, d3 }
    }

    /// The independent variable `t` itself.
    #[inline]
    pub const fn seed(t: f64) -> Self {
        Self::new(t, 1.0, 0.0, 0.0)
    }

    #[inline]
    pub const fn constant(c: f64) -> Self {
        Self::new(c, 0.0, 0.0, 0.0)
    }

    #[inline]
    pub fn as_array(&self) -> [f64; 4] {
        [self.d0, self.d1, self.d2, self.d3]
    }

    #[inline]
    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn is_finite(&self) -> bool {
        self.d0.is_finite() && self.d1.is_finite() && self.d2.is_finite() && self.d3.is_finite()
    }

    #[inline]
    pub fn scale(self, c: f64) -> Self {
        Self::new(c * self.d0, c * self.d1, c * self.d2, c * self.d3)
    }

    /// Applies a scalar function given its value and first three derivatives
    /// at `self.d0`.
    #[inline]
    pub fn compose(self, f: [f64; 4]) -> Self {
        let [f0, f1, f2, f3] = f;
        let (a1, a2, a3) = (self.d1, self.d2, self.d3);
        Self::new(
            f0,
            f1 * a1,
            f2 * a1 * a1 + f1 * a2,
            f3 * a1 * a1 * a1 + 3.0 * f2 * a1 * a2 + f1 * a3,
        )
    }

    pub fn tanh(self) -> Self {
        self.compose(tanh_derivatives(self.d0))
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.d0.sin_cos();
        self.compose([s, c, -s, -c])
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.d0.sin_cos();
        self.compose([c, -s, -c, s])
    }

    pub fn exp(self) -> Self {
        let e = self.d0.exp();
        self.compose([e; 4])
    }
}

/// `tanh` and its first three derivatives at `x`.
#[inline]
pub fn tanh_derivatives(x: f64) -> [f64; 4] {
    let v = x.tanh();
    let f1 = 1.0 - v * v;
    let f2 = -2.0 * v * f1;
    let f3 = -2.0 * (f1 * f1 + v * f2);
    [v, f1, f2, f3]
}

/// `tanh` and its first four derivatives at `x`. The fourth is needed when
/// differentiating a jet's third component with respect to its input.
#[inline]
pub fn tanh_derivatives4(x: f64) -> [f64; 5] {
    let [v, f1, f2, f3] = tanh_derivatives(x);
    let f4 = -6.0 * f1 * f2 - 2.0 * v * f3;
    [v, f1, f2, f3, f4]
}

impl Add for Jet3 {
    type Output = Jet3;
    #[inline]
    fn add(self, b: Jet3) -> Jet3 {
        Jet3::new(self.d0 + b.d0, self.d1 + b.d1, self.d2 + b.d2, self.d3 + b.d3)
    }
}

impl Sub for Jet3 {
    type Output = Jet3;
    #[inline]
    fn sub(self, b: Jet3) -> Jet3 {
        Jet3::new(self.d0 - b.d0, self.d1 - b.d1, self.d2 - b.d2, self.d3 - b.d3)
    }
}

impl Neg for Jet3 {
    type Output = Jet3;
    #[inline]
    fn neg(self) -> Jet3 {
        self.scale(-1.0)
    }
}

impl Mul for Jet3 {
    type Output = Jet3;
    #[inline]
    fn mul(self, b: Jet3) -> Jet3 {
        let a = self;
        Jet3::new(
            a.d0 * b.d0,
            a.d1 * b.d0 + a.d0 * b.d1,
            a.d2 * b.d0 + 2.0 * a.d1 * b.d1 + a.d0 * b.d2,
            a.d3 * b.d0 + 3.0 * a.d2 * b.d1 + 3.0 * a.d1 * b.d2 + a.d0 * b.d3,
        )
    }
}

impl Mul<f64> for Jet3 {
    type Output = Jet3;
    #[inline]
    fn mul(self, c: f64) -> Jet3 {
        self.scale(c)
    }
}

impl Add<f64> for Jet3 {
    type Output = Jet3;
    #[inline]
    fn add(self, c: f64) -> Jet3 {
        Jet3::new(self.d0 + c, self.d1, self.d2, self.d3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fd_oracle as fd;
    use approx::assert_relative_eq;

    fn close(a: Jet3, b: Jet3, tol: f64) {
        for (x, y) in a.as_array().iter().zip(b.as_array()) {
            assert_relative_eq!(*x, y, epsilon = tol, max_relative = tol);
        }
    }

    #[test]
    fn seed_is_identity() {
        assert_eq!(Jet3::seed(0.0), Jet3::new(0.0, 1.0, 0.0, 0.0));
        assert_eq!(Jet3::seed(2.5), Jet3::new(2.5, 1.0, 0.0, 0.0));
        assert_eq!(Jet3::seed(-1.0), Jet3::new(-1.0, 1.0, 0.0, 0.0));
    }

    #[test]
    fn product_rule() {
        let t = Jet3::seed(1.0);
        assert_eq!(t * t, Jet3::new(1.0, 2.0, 2.0, 0.0));

        let x = Jet3::new(0.3, -1.2, 4.0, 0.5);
        assert_eq!(Jet3::constant(3.0) * x, x.scale(3.0));

        // t^3 at t = 2: (8, 3t^2, 6t, 6)
        let t = Jet3::seed(2.0);
        assert_eq!((t * t) * t, Jet3::new(8.0, 12.0, 12.0, 6.0));
    }

    #[test]
    fn cubic_polynomial_is_exact() {
        // p(t) = 2 - t + 0.5 t^2 + 3 t^3
        for &t0 in &[-1.7, 0.0, 0.4, 3.0] {
            let t = Jet3::seed(t0);
            let p = Jet3::constant(2.0) - t + (t * t).scale(0.5) + (t * t * t).scale(3.0);
            let want = Jet3::new(
                2.0 - t0 + 0.5 * t0 * t0 + 3.0 * t0.powi(3),
                -1.0 + t0 + 9.0 * t0 * t0,
                1.0 + 18.0 * t0,
                18.0,
            );
            close(p, want, 1e-12);
        }
    }

    #[test]
    fn tanh_constant_and_series() {
        let c = Jet3::constant(0.7).tanh();
        assert_eq!(c, Jet3::new(0.7f64.tanh(), 0.0, 0.0, 0.0));
        // tanh t = t - t^3/3 + ...
        close(Jet3::seed(0.0).tanh(), Jet3::new(0.0, 1.0, 0.0, -2.0), 1e-15);
    }

    #[test]
    fn tanh_of_sin_matches_finite_differences() {
        let f = |t: f64| (1.3 * t.sin() + 0.2).tanh();
        for &t0 in &[-0.9, 0.1, 1.4] {
            let j = (Jet3::seed(t0).sin() * 1.3 + 0.2).tanh();
            let [d1, d2, d3] = fd::derivatives(f, t0, 1e-2);
            assert_relative_eq!(j.d0, f(t0), max_relative = 1e-14);
            assert_relative_eq!(j.d1, d1, max_relative = 1e-6);
            assert_relative_eq!(j.d2, d2, max_relative = 1e-6);
            assert_relative_eq!(j.d3, d3, max_relative = 1e-6);
        }
    }

    #[test]
    fn fourth_tanh_derivative() {
        // d/dx of the third derivative, by central difference
        let h = 1e-5;
        for &x in &[-1.1, 0.0, 0.35, 2.0] {
            let fd = (tanh_derivatives(x + h)[3] - tanh_derivatives(x - h)[3]) / (2.0 * h);
            assert_relative_eq!(tanh_derivatives4(x)[4], fd, epsilon = 1e-8, max_relative = 1e-7);
        }
    }
}
