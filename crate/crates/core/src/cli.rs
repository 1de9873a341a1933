//! `colloc-pinn` command line: `train`, `study` and `sample`.
//!
//! Each subcommand takes an optional `--config` JSON file whose keys are the
//! long flag names (`"n-collocation": 32`, `"sampling": "grid"`, ...).
//! Flags given on the command line override the file. The resolved settings
//! are echoed back into the output directory in the same format, so an echo
//! can be passed to `--config` to repeat a run exactly. A `summary.json`
//! written by `train` is accepted as well; its `config` member is used.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::exec::{with_jobs, Exec};
use crate::loss::PenaltyForm;
use crate::network::InitScheme;
use crate::physics::OscillatorProblem;
use crate::sampling::{sample, Interval, Strategy};
use crate::study::{run_study, StudyConfig, StudyTable};
use crate::trainer::{train_with, RunRecord, TrainConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;

pub const OUT_DIR_ENV: &str = "COLLOC_PINN_OUT";

pub const TRACE_HEADER: &str = "t,prediction,analytic,abs_error,residual_sq,residual_rate_sq";
pub const LOSS_HEADER: &str = "epoch,ic,physics,penalty,total";
pub const STUDY_HEADER: &str = "strategy,n_c,repetitions,successes,rho,mean_mse,median_mse";
pub const POINTS_HEADER: &str = "t";

#[derive(Debug, Parser)]
#[command(name = "colloc-pinn", version, about = "Physics-informed network training for the harmonic oscillator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one network and write its trace, loss history and summary.
    Train(TrainArgs),
    /// Success-ratio study over collocation counts and sampling strategies.
    Study(StudyArgs),
    /// Write a collocation point set.
    Sample(SampleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Toggle {
    On,
    Off,
}

impl Toggle {
    fn from_bool(b: bool) -> Self {
        if b {
            Toggle::On
        } else {
            Toggle::Off
        }
    }

    fn enabled(self) -> bool {
        self == Toggle::On
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PenaltyFormArg {
    ResidualRate,
    LossGradient,
}

fn parse_penalty_form(s: &str) -> std::result::Result<PenaltyForm, String> {
    match PenaltyFormArg::from_str(s, true)? {
        PenaltyFormArg::ResidualRate => Ok(PenaltyForm::ResidualRate),
        PenaltyFormArg::LossGradient => Ok(PenaltyForm::LossGradient),
    }
}

fn parse_init(s: &str) -> std::result::Result<InitScheme, String> {
    match s {
        "glorot" => Ok(InitScheme::Glorot),
        "fan_in" | "fan-in" => Ok(InitScheme::FanIn),
        other => Err(format!("unknown init scheme `{other}` (expected glorot or fan-in)")),
    }
}

/// Settings of a single training run. Every field is optional so that a
/// config file and the command line can be layered.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunFlags {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_collocation: Option<usize>,
    /// Collocation sampling strategy: grid, lhs (alias random) or uniform.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampling: Option<Strategy>,
    /// Residual-rate penalty term.
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub penalty: Option<Toggle>,
    /// residual-rate or loss-gradient.
    #[arg(long, value_parser = parse_penalty_form)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub penalty_form: Option<PenaltyForm>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta1: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta2: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Run seed; the base seed for `study`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_points: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub success_threshold: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub early_stop_loss: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub early_stop_every: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_data: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_physics: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_penalty: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v0: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hidden_layers: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,
    /// glorot or fan-in.
    #[arg(long, value_parser = parse_init)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<InitScheme>,
}

impl RunFlags {
    /// Fills every unset field from `base`.
    fn to_config(&self, base: &TrainConfig) -> Result<TrainConfig> {
        let hidden = base.layer_sizes.len().saturating_sub(2);
        let base_width = base.layer_sizes.get(1).copied().unwrap_or(1);
        let hidden = self.hidden_layers.unwrap_or(hidden);
        let width = self.width.unwrap_or(base_width);
        let mut layer_sizes = vec![1];
        layer_sizes.extend(std::iter::repeat_n(width, hidden));
        layer_sizes.push(1);
        let p = base.problem;
        let cfg = TrainConfig {
            n_collocation: self.n_collocation.unwrap_or(base.n_collocation),
            strategy: self.sampling.unwrap_or(base.strategy),
            penalty_enabled: self.penalty.map(Toggle::enabled).unwrap_or(base.penalty_enabled),
            penalty_form: self.penalty_form.unwrap_or(base.penalty_form),
            epochs: self.epochs.unwrap_or(base.epochs),
            lr: self.lr.unwrap_or(base.lr),
            beta1: self.beta1.unwrap_or(base.beta1),
            beta2: self.beta2.unwrap_or(base.beta2),
            eps: self.eps.unwrap_or(base.eps),
            seed: self.seed.unwrap_or(base.seed),
            eval_points: self.eval_points.unwrap_or(base.eval_points),
            success_threshold: self.success_threshold.unwrap_or(base.success_threshold),
            early_stop_loss: self.early_stop_loss.unwrap_or(base.early_stop_loss),
            early_stop_every: self.early_stop_every.unwrap_or(base.early_stop_every),
            w_data: self.w_data.unwrap_or(base.w_data),
            w_physics: self.w_physics.unwrap_or(base.w_physics),
            w_penalty: self.w_penalty.unwrap_or(base.w_penalty),
            problem: OscillatorProblem {
                m: self.m.unwrap_or(p.m),
                k: self.k.unwrap_or(p.k),
                u0: self.u0.unwrap_or(p.u0),
                v0: self.v0.unwrap_or(p.v0),
                t_end: self.t_end.unwrap_or(p.t_end),
            },
            layer_sizes,
            init: self.init.unwrap_or(base.init),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn from_config(cfg: &TrainConfig) -> Self {
        let n = cfg.layer_sizes.len();
        RunFlags {
            n_collocation: Some(cfg.n_collocation),
            sampling: Some(cfg.strategy),
            penalty: Some(Toggle::from_bool(cfg.penalty_enabled)),
            penalty_form: Some(cfg.penalty_form),
            epochs: Some(cfg.epochs),
            lr: Some(cfg.lr),
            beta1: Some(cfg.beta1),
            beta2: Some(cfg.beta2),
            eps: Some(cfg.eps),
            seed: Some(cfg.seed),
            eval_points: Some(cfg.eval_points),
            success_threshold: Some(cfg.success_threshold),
            early_stop_loss: Some(cfg.early_stop_loss),
            early_stop_every: Some(cfg.early_stop_every),
            w_data: Some(cfg.w_data),
            w_physics: Some(cfg.w_physics),
            w_penalty: Some(cfg.w_penalty),
            m: Some(cfg.problem.m),
            k: Some(cfg.problem.k),
            u0: Some(cfg.problem.u0),
            v0: Some(cfg.problem.v0),
            t_end: Some(cfg.problem.t_end),
            hidden_layers: Some(n.saturating_sub(2)),
            width: Some(if n > 2 { cfg.layer_sizes[1] } else { 1 }),
            init: Some(cfg.init),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Settings file; keys mirror the long flag names.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, env = OUT_DIR_ENV, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub run: RunFlags,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct StudyFlags {
    #[command(flatten)]
    #[serde(flatten)]
    pub run: RunFlags,
    /// Repetitions per (strategy, n_c) cell.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nc_min: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nc_max: Option<usize>,
    /// Explicit comma-separated collocation counts; overrides the range.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nc_values: Option<Vec<usize>>,
    /// Comma-separated strategies, default grid,lhs.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strategies: Option<Vec<Strategy>>,
}

impl StudyFlags {
    fn to_config(&self) -> Result<StudyConfig> {
        let defaults = StudyConfig::default();
        let template = self.run.to_config(&TrainConfig::default())?;
        let nc_values = match &self.nc_values {
            Some(v) => v.clone(),
            None => {
                let lo = self.nc_min.unwrap_or(10);
                let hi = self.nc_max.unwrap_or(50);
                if lo > hi {
                    return Err(Error::config(format!("--nc-min {lo} exceeds --nc-max {hi}")));
                }
                (lo..=hi).collect()
            }
        };
        let cfg = StudyConfig {
            nc_values,
            strategies: self.strategies.clone().unwrap_or(defaults.strategies),
            repetitions: self.reps.unwrap_or(defaults.repetitions),
            base_seed: template.seed,
            penalty_enabled: template.penalty_enabled,
            template,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn from_config(cfg: &StudyConfig) -> Self {
        let mut run = RunFlags::from_config(&cfg.template);
        run.n_collocation = None;
        run.sampling = None;
        run.seed = Some(cfg.base_seed);
        run.penalty = Some(Toggle::from_bool(cfg.penalty_enabled));
        StudyFlags {
            run,
            reps: Some(cfg.repetitions),
            nc_min: None,
            nc_max: None,
            nc_values: Some(cfg.nc_values.clone()),
            strategies: Some(cfg.strategies.clone()),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct StudyArgs {
    #[command(flatten)]
    pub study: StudyFlags,
    /// Worker threads; defaults to the number of available cores.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SampleFlags {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampling: Option<Strategy>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub sample: SampleFlags,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Shortest decimal text that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e16).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn load_layered<T: DeserializeOwned + Serialize>(file: Option<&Path>, flags: &T) -> Result<T> {
    let mut merged = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let mut value: Value = serde_json::from_str(&text)
                .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
            if let Some(inner) = value.get_mut("config") {
                value = inner.take();
            }
            match value {
                Value::Object(m) => m,
                _ => return Err(Error::config(format!("{}: expected a JSON object", path.display()))),
            }
        }
        None => Map::new(),
    };
    if let Value::Object(over) = serde_json::to_value(flags)? {
        merged.extend(over);
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| Error::config(format!("config: {e}")))
}

/// Writes `contents` to `dir/name` through a temporary file and rename.
pub fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> Result<()> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(dir.join(name)).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn prepare_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

pub fn trace_csv(record: &RunRecord) -> String {
    let mut s = String::from(TRACE_HEADER);
    s.push('\n');
    for p in &record.prediction_trace {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            fmt_f64(p.t),
            fmt_f64(p.prediction),
            fmt_f64(p.analytic),
            fmt_f64((p.prediction - p.analytic).abs()),
            fmt_f64(p.residual_sq),
            fmt_f64(p.residual_rate_sq)
        );
    }
    s
}

pub fn loss_csv(record: &RunRecord) -> String {
    let mut s = String::from(LOSS_HEADER);
    s.push('\n');
    for r in &record.loss_history {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.epoch,
            fmt_f64(r.ic),
            fmt_f64(r.physics),
            fmt_f64(r.penalty),
            fmt_f64(r.total)
        );
    }
    s
}

pub fn study_csv(table: &StudyTable) -> String {
    let mut s = String::from(STUDY_HEADER);
    s.push('\n');
    for r in &table.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.strategy,
            r.n_c,
            r.repetitions,
            r.successes,
            fmt_f64(r.rho),
            fmt_f64(r.mean_mse),
            fmt_f64(r.median_mse)
        );
    }
    s
}

pub fn points_csv(points: &[f64]) -> String {
    let mut s = String::from(POINTS_HEADER);
    s.push('\n');
    for &t in points {
        s.push_str(&fmt_f64(t));
        s.push('\n');
    }
    s
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    final_mse: f64,
    success: bool,
    epochs_run: usize,
    diverged: bool,
    converged_epoch: Option<usize>,
    seed: u64,
    config: &'a RunFlags,
}

fn usage_error(sub: &str, msg: &str) -> Error {
    let mut cmd = Cli::command();
    let usage = cmd
        .find_subcommand_mut(sub)
        .map(|c| c.render_usage().to_string())
        .unwrap_or_default();
    Error::config(format!("{msg}\n\n{usage}"))
}

pub fn cmd_train(args: &TrainArgs) -> Result<RunRecord> {
    let flags = load_layered(args.output.config.as_deref(), &args.run)?;
    if flags.n_collocation.is_none() {
        return Err(usage_error("train", "--n-collocation is required (or set it in --config)"));
    }
    let cfg = flags.to_config(&TrainConfig::default())?;
    prepare_out_dir(&args.output.out_dir)?;
    let record = train_with(&cfg, Exec::Parallel)?;
    let echo = RunFlags::from_config(&cfg);
    let summary = Summary {
        final_mse: record.final_mse,
        success: record.success,
        epochs_run: record.epochs_run,
        diverged: record.diverged,
        converged_epoch: record.converged_epoch,
        seed: record.seed,
        config: &echo,
    };
    let dir = &args.output.out_dir;
    write_atomic(dir, "trace.csv", trace_csv(&record).as_bytes())?;
    write_atomic(dir, "loss.csv", loss_csv(&record).as_bytes())?;
    write_atomic(dir, "params.json", serde_json::to_string(&record.final_params)?.as_bytes())?;
    write_atomic(dir, "summary.json", serde_json::to_string_pretty(&summary)?.as_bytes())?;
    Ok(record)
}

pub fn cmd_study(args: &StudyArgs) -> Result<StudyTable> {
    let flags: StudyFlags = load_layered(args.output.config.as_deref(), &args.study)?;
    let cfg = flags.to_config()?;
    prepare_out_dir(&args.output.out_dir)?;
    let table = with_jobs(args.jobs, || run_study(&cfg, Exec::Parallel))?;
    let dir = &args.output.out_dir;
    write_atomic(dir, "study.csv", study_csv(&table).as_bytes())?;
    let echo = StudyFlags::from_config(&cfg);
    write_atomic(dir, "study_config.json", serde_json::to_string_pretty(&echo)?.as_bytes())?;
    Ok(table)
}

pub fn cmd_sample(args: &SampleArgs) -> Result<Vec<f64>> {
    let flags: SampleFlags = load_layered(args.output.config.as_deref(), &args.sample)?;
    let n = flags.n.ok_or_else(|| usage_error("sample", "--n is required"))?;
    let t_end = flags.t_end.unwrap_or(OscillatorProblem::default().t_end);
    let domain = Interval::new(0.0, t_end)?;
    let set = sample(flags.sampling.unwrap_or(Strategy::Lhs), n, domain, flags.seed.unwrap_or(0))?;
    prepare_out_dir(&args.output.out_dir)?;
    write_atomic(&args.output.out_dir, "points.csv", points_csv(&set.points).as_bytes())?;
    Ok(set.points)
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::DimensionMismatch { .. } | Error::Json(_) => EXIT_CONFIG,
        Error::Io(_) => EXIT_IO,
        Error::NonFinite(_) => EXIT_FAILURE,
    }
}

/// Parses `argv` and runs the selected subcommand, returning the exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Train(a) => cmd_train(a).and_then(|r| {
            println!(
                "final_mse={} success={} epochs_run={}",
                fmt_f64(r.final_mse),
                r.success,
                r.epochs_run
            );
            if r.diverged {
                return Err(Error::NonFinite("training loss"));
            }
            Ok(())
        }),
        Command::Study(a) => cmd_study(a).map(|t| {
            for r in &t.rows {
                println!("{:>7} n_c={:<3} rho={:.3} ({}/{})", r.strategy, r.n_c, r.rho, r.successes, r.repetitions);
            }
        }),
        Command::Sample(a) => cmd_sample(a).map(|p| println!("wrote {} points", p.len())),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
