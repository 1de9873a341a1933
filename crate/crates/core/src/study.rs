//! Success-ratio study over collocation budgets and sampling strategies.
//!
//! Every `(strategy, n_c)` cell trains `repetitions` networks with seeds
//! `base_seed + i`. The same seeds are reused in every cell, so strategies
//! are compared on matched initializations, and growing `repetitions` only
//! appends runs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::sampling::Strategy;
use crate::trainer::{train, RunRecord, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub nc_values: Vec<usize>,
    pub strategies: Vec<Strategy>,
    pub repetitions: usize,
    pub base_seed: u64,
    pub penalty_enabled: bool,
    /// Settings shared by every run; its collocation count, strategy, seed
    /// and penalty flag are overridden per run.
    pub template: TrainConfig,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            nc_values: (10..=50).collect(),
            strategies: vec![Strategy::Grid, Strategy::Lhs],
            repetitions: 30,
            base_seed: 0,
            penalty_enabled: false,
            template: TrainConfig::default(),
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions < 1 {
            return Err(Error::config("repetitions must be at least 1"));
        }
        if self.nc_values.is_empty() || self.nc_values.iter().any(|&n| n < 2) {
            return Err(Error::config("nc_values must be nonempty with every entry >= 2"));
        }
        if self.strategies.is_empty() {
            return Err(Error::config("at least one sampling strategy is required"));
        }
        self.template.validate()
    }

    pub fn run_config(&self, strategy: Strategy, n_c: usize, repetition: usize) -> TrainConfig {
        TrainConfig {
            n_collocation: n_c,
            strategy,
            seed: self.base_seed + repetition as u64,
            penalty_enabled: self.penalty_enabled,
            ..self.template.clone()
        }
    }
}

/// Outcome of one run inside a study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub strategy: Strategy,
    pub n_c: usize,
    pub repetition: usize,
    pub seed: u64,
    pub final_mse: f64,
    pub success: bool,
    pub epochs_run: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub strategy: Strategy,
    pub n_c: usize,
    pub repetitions: usize,
    pub successes: usize,
    pub rho: f64,
    pub mean_mse: f64,
    pub median_mse: f64,
    pub seeds_used: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyTable {
    pub rows: Vec<StudyRow>,
    pub runs: Vec<RunOutcome>,
}

impl StudyTable {
    pub fn row(&self, strategy: Strategy, n_c: usize) -> Option<&StudyRow> {
        self.rows.iter().find(|r| r.strategy == strategy && r.n_c == n_c)
    }

    /// Smallest collocation count whose success ratio is exactly one.
    pub fn min_nc_with_full_success(&self, strategy: Strategy) -> Option<usize> {
        self.rows.iter().filter(|r| r.strategy == strategy && r.rho == 1.0).map(|r| r.n_c).min()
    }
}

/// Anything that reports a pass/fail training outcome.
pub trait Outcome {
    fn succeeded(&self) -> bool;
}

impl Outcome for RunRecord {
    fn succeeded(&self) -> bool {
        self.success
    }
}

impl Outcome for RunOutcome {
    fn succeeded(&self) -> bool {
        self.success
    }
}

pub fn success_ratio<T: Outcome>(records: &[T]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::config("success ratio of an empty run list"));
    }
    Ok(records.iter().filter(|r| r.succeeded()).count() as f64 / records.len() as f64)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

pub fn run_study(cfg: &StudyConfig, exec: Exec) -> Result<StudyTable> {
    run_study_with(cfg, exec, train)
}

/// [`run_study`] with a custom single-run trainer, e.g. for progress output.
pub fn run_study_with<F>(cfg: &StudyConfig, exec: Exec, trainer: F) -> Result<StudyTable>
where
    F: Fn(&TrainConfig) -> Result<RunRecord> + Sync + Send,
{
    cfg.validate()?;
    let mut tasks = Vec::new();
    for &strategy in &cfg.strategies {
        for &n_c in &cfg.nc_values {
            for rep in 0..cfg.repetitions {
                tasks.push((strategy, n_c, rep));
            }
        }
    }
    let results = exec.map(&tasks, |&(strategy, n_c, rep)| {
        let run_cfg = cfg.run_config(strategy, n_c, rep);
        trainer(&run_cfg).map(|r| RunOutcome {
            strategy,
            n_c,
            repetition: rep,
            seed: run_cfg.seed,
            final_mse: r.final_mse,
            success: r.success,
            epochs_run: r.epochs_run,
        })
    });
    let runs = results.into_iter().collect::<Result<Vec<_>>>()?;

    let rows = runs
        .chunks(cfg.repetitions)
        .map(|cell| {
            let successes = cell.iter().filter(|r| r.success).count();
            let mut mses: Vec<f64> = cell.iter().map(|r| r.final_mse).collect();
            StudyRow {
                strategy: cell[0].strategy,
                n_c: cell[0].n_c,
                repetitions: cell.len(),
                successes,
                rho: successes as f64 / cell.len() as f64,
                mean_mse: mses.iter().sum::<f64>() / cell.len() as f64,
                median_mse: median(&mut mses),
                seeds_used: cell.iter().map(|r| r.seed).collect(),
            }
        })
        .collect();
    Ok(StudyTable { rows, runs })
}
