//! Single training run: sample collocation points once, initialize the
//! network from the run seed, then take one full-batch Adam step per epoch.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::loss::{total_loss_and_gradient, LossConfig, PenaltyForm};
use crate::network::{InitScheme, Mlp, DEFAULT_LAYER_SIZES};
use crate::optimizer::{AdamConfig, AdamState};
use crate::physics::OscillatorProblem;
use crate::sampling::{sample, CollocationSet, Strategy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub n_collocation: usize,
    pub strategy: Strategy,
    pub penalty_enabled: bool,
    pub penalty_form: PenaltyForm,
    pub epochs: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
    pub eval_points: usize,
    pub success_threshold: f64,
    /// Training stops once the total loss drops below this value.
    pub early_stop_loss: f64,
    /// Epoch interval between early-stop checks.
    pub early_stop_every: usize,
    pub w_data: f64,
    pub w_physics: f64,
    pub w_penalty: f64,
    pub problem: OscillatorProblem,
    pub layer_sizes: Vec<usize>,
    pub init: InitScheme,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        let loss = LossConfig::default();
        Self {
            n_collocation: 32,
            strategy: Strategy::Lhs,
            penalty_enabled: false,
            penalty_form: PenaltyForm::ResidualRate,
            epochs: 20_000,
            lr: adam.lr,
            beta1: adam.beta1,
            beta2: adam.beta2,
            eps: adam.eps,
            seed: 0,
            eval_points: 1000,
            success_threshold: 0.01,
            early_stop_loss: 1e-6,
            early_stop_every: 100,
            w_data: loss.w_data,
            w_physics: loss.w_physics,
            w_penalty: loss.w_penalty,
            problem: OscillatorProblem::default(),
            layer_sizes: DEFAULT_LAYER_SIZES.to_vec(),
            init: InitScheme::default(),
        }
    }
}

impl TrainConfig {
    pub fn loss_config(&self) -> LossConfig {
        LossConfig {
            w_data: self.w_data,
            w_physics: self.w_physics,
            w_penalty: self.w_penalty,
            penalty_enabled: self.penalty_enabled,
            penalty_form: self.penalty_form,
        }
    }

    pub fn adam_config(&self) -> AdamConfig {
        AdamConfig { lr: self.lr, beta1: self.beta1, beta2: self.beta2, eps: self.eps }
    }

    pub fn validate(&self) -> Result<()> {
        self.problem.validate()?;
        self.loss_config().validate()?;
        self.adam_config().validate()?;
        if self.epochs < 1 {
            return Err(Error::config("epochs must be at least 1"));
        }
        if self.eval_points < 2 {
            return Err(Error::config("eval_points must be at least 2"));
        }
        if self.success_threshold.is_nan() || self.success_threshold <= 0.0 {
            return Err(Error::config("success_threshold must be positive"));
        }
        if self.early_stop_every < 1 {
            return Err(Error::config("early_stop_every must be at least 1"));
        }
        let min_n = if self.strategy == Strategy::Grid { 2 } else { 1 };
        if self.n_collocation < min_n {
            return Err(Error::config(format!(
                "{} sampling needs at least {min_n} collocation points",
                self.strategy
            )));
        }
        Mlp::zeros(&self.layer_sizes)?;
        Ok(())
    }
}

/// One row of the loss history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub epoch: usize,
    pub ic: f64,
    pub physics: f64,
    pub penalty: f64,
    pub total: f64,
}

/// Network and reference solution at one evaluation point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub t: f64,
    pub prediction: f64,
    pub analytic: f64,
    pub residual_sq: f64,
    pub residual_rate_sq: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub final_mse: f64,
    pub success: bool,
    pub epochs_run: usize,
    pub diverged: bool,
    /// First early-stop checkpoint at which the evaluation MSE was already
    /// below the success threshold.
    pub converged_epoch: Option<usize>,
    pub loss_history: Vec<LossRecord>,
    pub final_params: Mlp,
    pub collocation: CollocationSet,
    pub prediction_trace: Vec<TracePoint>,
    pub seed: u64,
}

impl RunRecord {
    /// Mean `|Φ|` over evaluation points in the last quarter of the domain.
    pub fn tail_amplitude(&self) -> f64 {
        let Some(last) = self.prediction_trace.last() else { return 0.0 };
        let cut = 0.75 * last.t;
        let tail: Vec<f64> =
            self.prediction_trace.iter().filter(|p| p.t >= cut).map(|p| p.prediction.abs()).collect();
        tail.iter().sum::<f64>() / tail.len().max(1) as f64
    }
}

pub fn is_success(mse: f64, threshold: f64) -> bool {
    mse < threshold
}

/// MSE against the analytic solution at `n_points` equidistant points,
/// endpoints included.
pub fn evaluate_mse(params: &Mlp, p: &OscillatorProblem, n_points: usize) -> f64 {
    let ts = p.domain().linspace(n_points.max(2));
    let sum: f64 = ts
        .iter()
        .map(|&t| {
            let e = params.forward(t) - p.analytic_solution(t);
            e * e
        })
        .sum();
    let mse = sum / ts.len() as f64;
    if mse.is_nan() {
        f64::INFINITY
    } else {
        mse
    }
}

pub fn prediction_trace(params: &Mlp, p: &OscillatorProblem, n_points: usize) -> Vec<TracePoint> {
    p.domain()
        .linspace(n_points)
        .into_iter()
        .map(|t| {
            let j = params.forward_jet(crate::Jet3::seed(t)).unwrap_or(crate::Jet3::constant(f64::NAN));
            TracePoint {
                t,
                prediction: j.d0,
                analytic: p.analytic_solution(t),
                residual_sq: p.residual(&j).powi(2),
                residual_rate_sq: p.residual_rate(&j).powi(2),
            }
        })
        .collect()
}

pub fn train(cfg: &TrainConfig) -> Result<RunRecord> {
    train_with(cfg, Exec::Sequential)
}

/// [`train`], evaluating collocation blocks under `exec`.
pub fn train_with(cfg: &TrainConfig, exec: Exec) -> Result<RunRecord> {
    cfg.validate()?;
    let problem = cfg.problem;
    let collocation = sample(cfg.strategy, cfg.n_collocation, problem.domain(), cfg.seed)?;
    let mut mlp = Mlp::init_with(&cfg.layer_sizes, cfg.seed, cfg.init)?;
    let mut adam = AdamState::new(mlp.num_params(), cfg.adam_config());
    let loss_cfg = cfg.loss_config();

    let mut history = Vec::with_capacity(cfg.epochs);
    let mut diverged = false;
    let mut converged_epoch = None;
    for epoch in 0..cfg.epochs {
        let (breakdown, grad) =
            match total_loss_and_gradient(&problem, &mlp, &collocation, &loss_cfg, exec) {
                Ok(v) => v,
                Err(Error::NonFinite(_)) => {
                    diverged = true;
                    break;
                }
                Err(e) => return Err(e),
            };
        history.push(LossRecord {
            epoch,
            ic: breakdown.ic_term,
            physics: breakdown.physics_term,
            penalty: breakdown.penalty_term,
            total: breakdown.total,
        });
        if !breakdown.total.is_finite() {
            diverged = true;
            break;
        }
        if epoch % cfg.early_stop_every == 0 {
            if converged_epoch.is_none()
                && is_success(evaluate_mse(&mlp, &problem, cfg.eval_points), cfg.success_threshold)
            {
                converged_epoch = Some(epoch);
            }
            if breakdown.total < cfg.early_stop_loss {
                break;
            }
        }
        if adam.step(mlp.params_mut(), &grad).is_err() {
            diverged = true;
            break;
        }
    }

    let final_mse = if diverged { f64::INFINITY } else { evaluate_mse(&mlp, &problem, cfg.eval_points) };
    Ok(RunRecord {
        final_mse,
        success: is_success(final_mse, cfg.success_threshold),
        epochs_run: history.len(),
        diverged,
        converged_epoch,
        loss_history: history,
        prediction_trace: prediction_trace(&mlp, &problem, cfg.eval_points),
        final_params: mlp,
        collocation,
        seed: cfg.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn success_is_strict() {
        assert!(is_success(0.009, 0.01));
        assert!(!is_success(0.01, 0.01));
        assert!(!is_success(f64::INFINITY, 0.01));
    }

    #[test]
    fn trivial_network_mse() {
        let p = OscillatorProblem { t_end: 20.0, ..Default::default() };
        let zero = Mlp::zeros(&[1, 3, 1]).unwrap();
        let mse = evaluate_mse(&zero, &p, 1000);
        // mean of 4 cos²t over 1000 points of [0, 20], summed directly
        let ts = p.domain().linspace(1000);
        let oracle = ts.iter().map(|t| 4.0 * t.cos().powi(2)).sum::<f64>() / 1000.0;
        assert!((mse - oracle).abs() < 1e-12);
        assert!((mse - 2.0).abs() < 0.05);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        assert!(TrainConfig { epochs: 0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { eval_points: 1, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { success_threshold: 0.0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { n_collocation: 1, strategy: Strategy::Grid, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { n_collocation: 0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { layer_sizes: vec![1, 4, 2], ..Default::default() }.validate().is_err());
    }

    #[test]
    fn short_run_is_deterministic() {
        let cfg = TrainConfig { epochs: 30, layer_sizes: vec![1, 8, 8, 1], eval_points: 50, ..Default::default() };
        let a = train(&cfg).unwrap();
        let b = train_with(&cfg, Exec::Parallel).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.epochs_run, 30);
        assert_eq!(a.prediction_trace.len(), 50);
        assert_eq!(a.success, a.final_mse < cfg.success_threshold);
        assert!(a.loss_history.iter().all(|r| r.total.is_finite()));
        // the loss decreases over a short run
        assert!(a.loss_history.last().unwrap().total < a.loss_history[0].total);
    }

    #[test]
    fn tail_amplitude_of_zero_trace() {
        let cfg = TrainConfig { epochs: 1, layer_sizes: vec![1, 2, 1], lr: 0.0, ..Default::default() };
        let mut r = train(&cfg).unwrap();
        for p in &mut r.prediction_trace {
            p.prediction = 0.0;
        }
        assert_eq!(r.tail_amplitude(), 0.0);
    }
}
