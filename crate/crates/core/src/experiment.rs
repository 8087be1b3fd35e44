//! Experiment configuration and orchestration: the plain-text `key = value`
//! config and its echo, (solver x seed x axis) job planning, shared `F*`
//! finalization and the summary table.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::dataset::{load_libsvm, split_train_test, synthetic, Dataset, SyntheticSpec};
use crate::error::{Error, Result};
use crate::harness::{finalize_suboptimality, format_real, Trace, CSV_HEADER};
use crate::line_search::SbasParams;
use crate::objective::{LossKind, Objective, Regularizer};
use crate::solvers::{reference_optimum, run, RunConfig, SolverKind};

#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    File(PathBuf),
    Synthetic(SyntheticSpec),
}

impl DataSource {
    fn echo(&self) -> (&'static str, String) {
        match self {
            DataSource::File(p) => ("dataset", p.display().to_string()),
            DataSource::Synthetic(s) => ("synthetic", format_synthetic(s)),
        }
    }
}

pub fn format_synthetic(s: &SyntheticSpec) -> String {
    format!(
        "n={},d={},separability={},flip={},seed={}",
        s.n, s.d, s.separability, s.flip, s.seed
    )
}

/// Parses `n=200,d=10,...`; missing keys keep their defaults.
pub fn parse_synthetic(text: &str) -> Result<SyntheticSpec> {
    let mut spec = SyntheticSpec::default();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("synthetic spec entry {part:?} is not key=value")))?;
        let v = v.trim();
        match k.trim() {
            "n" => spec.n = parse_value(k, v)?,
            "d" => spec.d = parse_value(k, v)?,
            "separability" | "sep" => spec.separability = parse_value(k, v)?,
            "flip" => spec.flip = parse_value(k, v)?,
            "seed" => spec.seed = parse_value(k, v)?,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown synthetic key {other:?}; valid keys: n, d, separability, flip, seed"
                )))
            }
        }
    }
    Ok(spec)
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse()
        .map_err(|e| Error::InvalidArgument(format!("bad value {v:?} for {key}: {e}")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub solvers: Vec<SolverKind>,
    pub loss: LossKind,
    pub l1: f64,
    pub l2: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub sbas: SbasParams,
    pub fixed_eta: Option<f64>,
    pub seeds: Vec<u64>,
    pub train_fraction: f64,
    pub split_seed: u64,
    /// Full-gradient epochs spent on the reference optimum.
    pub reference_budget: usize,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data: DataSource::Synthetic(SyntheticSpec::default()),
            solvers: SolverKind::ALL.to_vec(),
            loss: LossKind::Logistic,
            l1: 0.0,
            l2: 1e-5,
            batch_size: 32,
            epochs: 30,
            sbas: SbasParams::default(),
            fixed_eta: None,
            seeds: vec![1],
            train_fraction: 0.8,
            split_seed: 0,
            reference_budget: 500,
            out: None,
        }
    }
}

/// Keys accepted by [`ExperimentConfig::set`]; dashes and underscores are interchangeable.
pub const CONFIG_KEYS: &[&str] = &[
    "dataset",
    "synthetic",
    "solvers",
    "loss",
    "l1",
    "l2",
    "b",
    "epochs",
    "eta0",
    "alpha",
    "shrink",
    "max_backtracks",
    "fixed_eta",
    "seeds",
    "train_fraction",
    "split_seed",
    "reference_budget",
    "out",
];

impl ExperimentConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let v = value.trim();
        match key.as_str() {
            "dataset" => self.data = DataSource::File(PathBuf::from(v)),
            "synthetic" => self.data = DataSource::Synthetic(parse_synthetic(v)?),
            "solvers" | "solver" => {
                self.solvers = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::parse)
                    .collect::<Result<_>>()?
            }
            "loss" => self.loss = v.parse()?,
            "l1" => self.l1 = parse_value(&key, v)?,
            "l2" | "lambda" => self.l2 = parse_value(&key, v)?,
            "b" | "batch_size" => self.batch_size = parse_value(&key, v)?,
            "epochs" => self.epochs = parse_value(&key, v)?,
            "eta0" => self.sbas.eta0 = parse_value(&key, v)?,
            "alpha" => self.sbas.alpha = parse_value(&key, v)?,
            "shrink" => self.sbas.shrink = parse_value(&key, v)?,
            "max_backtracks" => self.sbas.max_backtracks = parse_value(&key, v)?,
            "fixed_eta" => {
                self.fixed_eta = match v {
                    "" | "none" => None,
                    _ => Some(parse_value(&key, v)?),
                }
            }
            "seeds" | "seed" => self.seeds = parse_list(&key, v)?,
            "train_fraction" => self.train_fraction = parse_value(&key, v)?,
            "split_seed" => self.split_seed = parse_value(&key, v)?,
            "reference_budget" => self.reference_budget = parse_value(&key, v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "unknown config key {key:?}; valid keys: {}",
                    CONFIG_KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (ix, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: ix + 1,
                message: format!("expected key = value, got {line:?}"),
            })?;
            self.set(k, v).map_err(|e| Error::Parse {
                line: ix + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    /// Recovers the config echoed into the `#` lines of a trace CSV.
    pub fn from_csv_metadata(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut found = false;
        for (ix, line) in text.lines().enumerate() {
            let Some(body) = line.strip_prefix("# ") else {
                continue;
            };
            let Some((k, v)) = body.split_once(" = ") else {
                continue;
            };
            cfg.set(k, v).map_err(|e| Error::Parse {
                line: ix + 1,
                message: e.to_string(),
            })?;
            found = true;
        }
        if !found {
            return Err(Error::InvalidArgument("no config echo found in CSV metadata".into()));
        }
        Ok(cfg)
    }

    /// Reads a config file: either plain `key = value` text or a trace CSV
    /// whose metadata carries an echo.
    pub fn from_file_text(text: &str) -> Result<Self> {
        if text.lines().any(|l| l.starts_with(CSV_HEADER)) {
            Self::from_csv_metadata(text)
        } else {
            Self::from_text(text)
        }
    }

    /// Every setting that affects results, one `key = value` line each.
    /// Feeding the lines back through [`ExperimentConfig::apply_text`]
    /// reproduces the config (output path excluded).
    pub fn echo(&self) -> Vec<String> {
        let (data_key, data_value) = self.data.echo();
        let names: Vec<&str> = self.solvers.iter().map(|s| s.name()).collect();
        vec![
            format!("{data_key} = {data_value}"),
            format!("solvers = {}", names.join(",")),
            format!("loss = {}", self.loss),
            format!("l1 = {}", self.l1),
            format!("l2 = {}", self.l2),
            format!("b = {}", self.batch_size),
            format!("epochs = {}", self.epochs),
            format!("eta0 = {}", self.sbas.eta0),
            format!("alpha = {}", self.sbas.alpha),
            format!("shrink = {}", self.sbas.shrink),
            format!("max_backtracks = {}", self.sbas.max_backtracks),
            format!(
                "fixed_eta = {}",
                self.fixed_eta.map_or("none".to_string(), |v| v.to_string())
            ),
            format!("seeds = {}", join(&self.seeds)),
            format!("train_fraction = {}", self.train_fraction),
            format!("split_seed = {}", self.split_seed),
            format!("reference_budget = {}", self.reference_budget),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if self.solvers.is_empty() {
            return Err(Error::InvalidArgument("solver list is empty".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidArgument("seed list is empty".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "train fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        Regularizer::new(self.l2, self.l1)?;
        self.sbas.validate()?;
        Ok(())
    }

    /// Loads or generates the data and applies the shuffled train/test split.
    pub fn prepare_data(&self) -> Result<(Dataset, Dataset)> {
        let full = match &self.data {
            DataSource::File(p) => load_libsvm(p)?,
            DataSource::Synthetic(s) => synthetic(s)?,
        };
        split_train_test(&full, self.train_fraction, self.split_seed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    Batch,
    Lambda,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Batch => "b",
            SweepAxis::Lambda => "lambda",
        }
    }

    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepAxis::Batch => vec![32.0, 64.0, 128.0],
            SweepAxis::Lambda => vec![1e-3, 1e-5, 1e-7],
        }
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "batch" | "b" => Ok(SweepAxis::Batch),
            "lambda" | "l2" => Ok(SweepAxis::Lambda),
            _ => Err(Error::InvalidArgument(format!(
                "unknown sweep axis {s:?}; valid axes: batch, lambda"
            ))),
        }
    }
}

/// One independent run.
#[derive(Clone, Debug, PartialEq)]
pub struct Job {
    pub solver: SolverKind,
    pub seed: u64,
    pub batch_size: usize,
    pub l2: f64,
    pub axis: Option<(SweepAxis, f64)>,
}

/// Cross product of solvers, seeds and (optionally) axis values.
pub fn plan_jobs(cfg: &ExperimentConfig, sweep: Option<(SweepAxis, &[f64])>) -> Result<Vec<Job>> {
    cfg.validate()?;
    let points: Vec<Option<(SweepAxis, f64)>> = match sweep {
        None => vec![None],
        Some((axis, [])) => {
            return Err(Error::InvalidArgument(format!(
                "sweep over {} needs at least one value",
                axis.name()
            )))
        }
        Some((axis, values)) => values.iter().map(|&v| Some((axis, v))).collect(),
    };
    let mut jobs = Vec::new();
    for point in points {
        let (batch_size, l2) = match point {
            Some((SweepAxis::Batch, v)) => {
                if !(v >= 1.0 && v.fract() == 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "batch size must be a positive integer, got {v}"
                    )));
                }
                (v as usize, cfg.l2)
            }
            Some((SweepAxis::Lambda, v)) => {
                Regularizer::new(v, cfg.l1)?;
                (cfg.batch_size, v)
            }
            None => (cfg.batch_size, cfg.l2),
        };
        for &solver in &cfg.solvers {
            for &seed in &cfg.seeds {
                jobs.push(Job {
                    solver,
                    seed,
                    batch_size,
                    l2,
                    axis: point,
                });
            }
        }
    }
    Ok(jobs)
}

impl Job {
    pub fn run_config(&self, cfg: &ExperimentConfig) -> RunConfig {
        let mut rc = RunConfig::new(self.solver, cfg.epochs, self.batch_size, self.seed);
        rc.sbas = cfg.sbas;
        rc.fixed_eta = cfg.fixed_eta;
        rc
    }

    pub fn objective<'a>(&self, cfg: &ExperimentConfig, train: &'a Dataset) -> Result<Objective<'a>> {
        Ok(Objective::new(cfg.loss, Regularizer::new(self.l2, cfg.l1)?, train))
    }
}

/// Runs one job. Invalid configurations and mid-run failures both end up in
/// `trace.failure` so the remaining jobs still report.
pub fn run_job(cfg: &ExperimentConfig, job: &Job, train: &Dataset, test: &Dataset) -> Trace {
    let result = job
        .objective(cfg, train)
        .and_then(|obj| run(&job.run_config(cfg), &obj, test));
    let mut trace = match result {
        Ok(out) => out.trace,
        Err(e) => {
            let mut t = Trace::new(job.solver.name(), job.seed);
            t.failure = Some(e.to_string());
            t
        }
    };
    trace.axis = job.axis.map(|(a, v)| (a.name().to_string(), v));
    trace.config_echo = format!(
        "solver={} seed={} b={} l2={}",
        job.solver, job.seed, job.batch_size, job.l2
    );
    trace
}

/// `F*` of one group of traces sharing an objective.
#[derive(Clone, Debug, PartialEq)]
pub struct FStar {
    pub l2: f64,
    pub value: f64,
    pub reference: Option<f64>,
    pub reference_converged: bool,
}

/// Computes a reference optimum per distinct `l2` and finalizes the
/// suboptimality of each group against it and its traces.
pub fn finalize(cfg: &ExperimentConfig, jobs: &[Job], traces: &mut [Trace], train: &Dataset) -> Result<Vec<FStar>> {
    if jobs.len() != traces.len() {
        return Err(Error::InvalidArgument("one trace per job expected".into()));
    }
    let mut groups: Vec<f64> = Vec::new();
    for job in jobs {
        if !groups.iter().any(|&g| g.to_bits() == job.l2.to_bits()) {
            groups.push(job.l2);
        }
    }
    let mut out = Vec::new();
    for l2 in groups {
        let obj = Objective::new(cfg.loss, Regularizer::new(l2, cfg.l1)?, train);
        let reference = reference_optimum(&obj, cfg.reference_budget)?;
        let mut group: Vec<Trace> = jobs
            .iter()
            .zip(traces.iter())
            .filter(|(j, _)| j.l2.to_bits() == l2.to_bits())
            .map(|(_, t)| t.clone())
            .collect();
        let value = finalize_suboptimality(&mut group, Some(reference.value));
        let mut it = group.into_iter();
        for (job, trace) in jobs.iter().zip(traces.iter_mut()) {
            if job.l2.to_bits() == l2.to_bits() {
                *trace = it.next().expect("group sizes match");
            }
        }
        out.push(FStar {
            l2,
            value,
            reference: Some(reference.value),
            reference_converged: reference.converged,
        });
    }
    Ok(out)
}

/// Metadata lines for the CSV: the config echo, then `F*` and failures.
pub fn metadata(
    cfg: &ExperimentConfig,
    sweep: Option<(SweepAxis, &[f64])>,
    f_stars: &[FStar],
    traces: &[Trace],
) -> Vec<String> {
    let mut lines = cfg.echo();
    if let Some((axis, values)) = sweep {
        lines.push(format!("sweep: {} in {}", axis.name(), join(values)));
    }
    for f in f_stars {
        let mut line = format!("f_star: l2 {} -> {}", f.l2, format_real(f.value));
        if !f.reference_converged {
            line.push_str(" (reference optimum not converged)");
        }
        lines.push(line);
    }
    for t in traces {
        if let Some(why) = &t.failure {
            lines.push(format!("failure: {} seed {}: {why}", t.solver, t.seed));
        }
    }
    lines
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub solver: String,
    pub seed: u64,
    pub axis: Option<f64>,
    pub final_epoch: usize,
    pub final_suboptimality: f64,
    pub final_accuracy: f64,
    pub best_epoch: usize,
    pub best_suboptimality: f64,
    pub best_accuracy: f64,
    pub failed: bool,
}

pub fn summarize(traces: &[Trace]) -> Vec<SummaryRow> {
    traces
        .iter()
        .filter_map(|t| {
            let last = t.last()?;
            let best = t
                .points
                .iter()
                .min_by(|a, b| a.suboptimality.total_cmp(&b.suboptimality))?;
            Some(SummaryRow {
                solver: t.solver.clone(),
                seed: t.seed,
                axis: t.axis.as_ref().map(|a| a.1),
                final_epoch: last.epoch,
                final_suboptimality: last.suboptimality,
                final_accuracy: last.test_accuracy,
                best_epoch: best.epoch,
                best_suboptimality: best.suboptimality,
                best_accuracy: best.test_accuracy,
                failed: t.failure.is_some(),
            })
        })
        .collect()
}

pub fn render_summary(rows: &[SummaryRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<8} {:>5} {:>10} {:>6} {:>12} {:>8} {:>6} {:>12} {:>8}",
        "solver", "seed", "axis", "epoch", "subopt", "acc", "best@", "best subopt", "acc@best"
    );
    for r in rows {
        let axis = r.axis.map_or("-".to_string(), |v| format!("{v}"));
        let _ = writeln!(
            out,
            "{:<8} {:>5} {:>10} {:>6} {:>12.4e} {:>8.4} {:>6} {:>12.4e} {:>8.4}{}",
            r.solver,
            r.seed,
            axis,
            r.final_epoch,
            r.final_suboptimality,
            r.final_accuracy,
            r.best_epoch,
            r.best_suboptimality,
            r.best_accuracy,
            if r.failed { "  FAILED" } else { "" }
        );
    }
    out
}
