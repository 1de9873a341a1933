//! Training objective: initial-condition misfit, mean squared ODE residual
//! over the collocation points, and an optional penalty on the largest
//! time-derivative of the residual.

use serde::{Deserialize, Serialize};

use crate::autodiff::{forward_batch, param_gradient, Gradient, Jet3};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::network::Mlp;
use crate::physics::OscillatorProblem;
use crate::sampling::CollocationSet;

/// Which quantity the gradient penalty maximizes over collocation points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PenaltyForm {
    /// `max_i (m Φ'''(t_i) + k Φ'(t_i))²`
    #[default]
    ResidualRate,
    /// `max_i |d/dt residual(t_i)²| = max_i 2 |residual| |residual rate|`
    LossGradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub w_data: f64,
    pub w_physics: f64,
    pub w_penalty: f64,
    pub penalty_enabled: bool,
    #[serde(default)]
    pub penalty_form: PenaltyForm,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            w_data: 1.0,
            w_physics: 1.0,
            w_penalty: 1.0,
            penalty_enabled: false,
            penalty_form: PenaltyForm::ResidualRate,
        }
    }
}

impl LossConfig {
    pub fn with_penalty(enabled: bool) -> Self {
        Self { penalty_enabled: enabled, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, w) in [("w_data", self.w_data), ("w_physics", self.w_physics), ("w_penalty", self.w_penalty)] {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::config(format!("{name} must be finite and nonnegative")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub ic_term: f64,
    pub physics_term: f64,
    pub penalty_term: f64,
    pub total: f64,
    /// Squared residual at each collocation point.
    pub per_point_residual_sq: Vec<f64>,
}

pub fn data_mse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::DimensionMismatch { expected: targets.len(), found: predictions.len() });
    }
    if predictions.is_empty() {
        return Err(Error::config("mean squared error of empty lists"));
    }
    let sum: f64 = predictions.iter().zip(targets).map(|(p, y)| (y - p) * (y - p)).sum();
    Ok(sum / predictions.len() as f64)
}

/// Index of the largest value, lowest index on ties.
fn argmax(values: impl Iterator<Item = f64>) -> Option<(usize, f64)> {
    values.enumerate().fold(None, |best, (i, v)| match best {
        Some((_, b)) if v <= b => best,
        _ => Some((i, v)),
    })
}

/// Loss value and output-jet adjoints from the network jets at the
/// collocation points followed by the jet at `t = 0`.
fn assemble(p: &OscillatorProblem, cfg: &LossConfig, jets: &[Jet3]) -> (LossBreakdown, Vec<Jet3>) {
    let (colloc, ic) = jets.split_at(jets.len() - 1);
    let ic = ic[0];
    let n = colloc.len() as f64;
    let mut adj = vec![Jet3::ZERO; jets.len()];

    let residuals: Vec<f64> = colloc.iter().map(|j| p.residual(j)).collect();
    let per_point_residual_sq: Vec<f64> = residuals.iter().map(|r| r * r).collect();
    let physics_term = per_point_residual_sq.iter().sum::<f64>() / n;
    for (a, r) in adj.iter_mut().zip(&residuals) {
        let c = cfg.w_physics * 2.0 * r / n;
        a.d0 += c * p.k;
        a.d2 += c * p.m;
    }

    let value_err = ic.d0 - p.u0;
    let tangent_err = ic.d1 - p.v0;
    let ic_term = tangent_err * tangent_err + value_err * value_err;
    let last = adj.len() - 1;
    adj[last].d0 += cfg.w_data * 2.0 * value_err;
    adj[last].d1 += cfg.w_data * 2.0 * tangent_err;

    let mut penalty_term = 0.0;
    if cfg.penalty_enabled {
        let rates: Vec<f64> = colloc.iter().map(|j| p.residual_rate(j)).collect();
        match cfg.penalty_form {
            PenaltyForm::ResidualRate => {
                if let Some((i, v)) = argmax(rates.iter().map(|q| q * q)) {
                    penalty_term = v;
                    let c = cfg.w_penalty * 2.0 * rates[i];
                    adj[i].d1 += c * p.k;
                    adj[i].d3 += c * p.m;
                }
            }
            PenaltyForm::LossGradient => {
                let vals = residuals.iter().zip(&rates).map(|(r, q)| 2.0 * r.abs() * q.abs());
                if let Some((i, v)) = argmax(vals) {
                    penalty_term = v;
                    let (r, q) = (residuals[i], rates[i]);
                    let dr = cfg.w_penalty * 2.0 * sign(r) * q.abs();
                    let dq = cfg.w_penalty * 2.0 * r.abs() * sign(q);
                    adj[i].d0 += dr * p.k;
                    adj[i].d2 += dr * p.m;
                    adj[i].d1 += dq * p.k;
                    adj[i].d3 += dq * p.m;
                }
            }
        }
    }

    let total = cfg.w_data * ic_term + cfg.w_physics * physics_term
        + if cfg.penalty_enabled { cfg.w_penalty * penalty_term } else { 0.0 };
    (
        LossBreakdown { ic_term, physics_term, penalty_term, total, per_point_residual_sq },
        adj,
    )
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn evaluation_points(colloc: &CollocationSet) -> Result<Vec<f64>> {
    if colloc.is_empty() {
        return Err(Error::config("collocation set is empty"));
    }
    let mut ts = colloc.points.clone();
    ts.push(0.0);
    Ok(ts)
}

pub fn total_loss(
    p: &OscillatorProblem,
    mlp: &Mlp,
    colloc: &CollocationSet,
    cfg: &LossConfig,
) -> Result<LossBreakdown> {
    let jets = forward_batch(mlp, &evaluation_points(colloc)?)?;
    Ok(assemble(p, cfg, &jets).0)
}

/// [`total_loss`] together with its exact parameter gradient.
pub fn total_loss_and_gradient(
    p: &OscillatorProblem,
    mlp: &Mlp,
    colloc: &CollocationSet,
    cfg: &LossConfig,
    exec: Exec,
) -> Result<(LossBreakdown, Gradient)> {
    param_gradient(mlp, &evaluation_points(colloc)?, exec, |jets| Ok(assemble(p, cfg, jets)))
}

pub fn physics_loss(p: &OscillatorProblem, mlp: &Mlp, colloc: &CollocationSet) -> Result<f64> {
    let cfg = LossConfig::default();
    Ok(total_loss(p, mlp, colloc, &cfg)?.physics_term)
}

/// `Φ'(0) - v0` and `u0 - Φ(0)`, squared and summed.
pub fn ic_loss(p: &OscillatorProblem, mlp: &Mlp) -> Result<f64> {
    let j = mlp.forward_jet(Jet3::seed(0.0))?;
    Ok((j.d1 - p.v0).powi(2) + (p.u0 - j.d0).powi(2))
}

pub fn gradient_penalty(
    p: &OscillatorProblem,
    mlp: &Mlp,
    colloc: &CollocationSet,
    form: PenaltyForm,
) -> Result<f64> {
    let cfg = LossConfig { penalty_enabled: true, penalty_form: form, ..LossConfig::default() };
    Ok(total_loss(p, mlp, colloc, &cfg)?.penalty_term)
}
