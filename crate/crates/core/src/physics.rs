//! The undamped harmonic oscillator `m u'' + k u = 0` on `(0, t_end)` with
//! prescribed `u(0)` and `u'(0)`.

use serde::{Deserialize, Serialize};

use crate::autodiff::Jet3;
use crate::error::{Error, Result};
use crate::sampling::Interval;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorProblem {
    pub m: f64,
    pub k: f64,
    pub u0: f64,
    pub v0: f64,
    pub t_end: f64,
}

impl Default for OscillatorProblem {
    /// `m = k = 1.5`, `u(0) = -2`, `u'(0) = 0` on `(0, 8)`. Longer domains
    /// need more collocation points; at `t_end = 20` even 68 points collapse
    /// to the trivial solution.
    fn default() -> Self {
        Self { m: 1.5, k: 1.5, u0: -2.0, v0: 0.0, t_end: 8.0 }
    }
}

impl OscillatorProblem {
    /// Same oscillator with a nonzero initial tangent.
    pub fn shifted() -> Self {
        Self { v0: 0.5, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.m, self.k, self.u0, self.v0, self.t_end].iter().all(|x| x.is_finite());
        if !finite {
            return Err(Error::config("problem parameters must be finite"));
        }
        if self.m <= 0.0 || self.k <= 0.0 {
            return Err(Error::config("mass and spring constant must be positive"));
        }
        if self.t_end <= 0.0 {
            return Err(Error::config("t_end must be positive"));
        }
        Ok(())
    }

    pub fn domain(&self) -> Interval {
        Interval { lo: 0.0, hi: self.t_end }
    }

    pub fn omega(&self) -> f64 {
        (self.k / self.m).sqrt()
    }

    /// `m Φ'' + k Φ`. Linear in the jet, with partials `(k, 0, m, 0)`.
    #[inline]
    pub fn residual(&self, phi: &Jet3) -> f64 {
        self.m * phi.d2 + self.k * phi.d0
    }

    /// Time derivative of the residual, `m Φ''' + k Φ'`. Partials `(0, k, 0, m)`.
    #[inline]
    pub fn residual_rate(&self, phi: &Jet3) -> f64 {
        self.m * phi.d3 + self.k * phi.d1
    }

    pub fn analytic_solution(&self, t: f64) -> f64 {
        let w = self.omega();
        self.u0 * (w * t).cos() + self.v0 / w * (w * t).sin()
    }

    pub fn analytic_jet(&self, t: f64) -> Jet3 {
        let w = self.omega();
        let tj = Jet3::seed(t).scale(w);
        tj.cos().scale(self.u0) + tj.sin().scale(self.v0 / w)
    }
}
