//! Epoch-structured drivers.
//!
//! Every solver runs `m = ceil(n/b)` inner steps per epoch (one full-gradient
//! step for GD). Smooth problems (`l1 = 0`) take `w - eta d`; otherwise the
//! step is `prox(w - eta d)`. The step size comes from the stochastic Armijo
//! search on the current batch unless a fixed step is configured.
//!
//! Epoch-boundary rules:
//!
//! | solver | snap point        | next start          | estimator |
//! |--------|-------------------|---------------------|-----------|
//! | SAAG-I | —                 | last iterate        | table     |
//! | SAAG-II| epoch start       | last iterate        | biased    |
//! | SAAG-III| —                | average of epoch    | table     |
//! | SAAG-IV| previous average  | last iterate        | biased    |
//! | SVRG   | epoch start       | last iterate        | unbiased  |
//! | VR-SGD | previous average  | last iterate        | unbiased  |

use std::fmt;
use std::str::FromStr;

use crate::dataset::{make_schedule, Dataset};
use crate::error::{Error, Result};
use crate::estimators::{
    saag1_direction, saag2_direction_scaled, sgd_direction, svrg_direction, GradTable, SnapScaling, SnapState,
};
use crate::harness::{record_epoch, EpochCounters, Stopwatch, Trace};
use crate::line_search::{sbas_line, SbasParams, StepBranch};
use crate::objective::{all_finite, prox_in_place, Objective};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SolverKind {
    Saag1,
    Saag2,
    Saag3,
    Saag4,
    Svrg,
    Vrsgd,
    Gd,
    Sgd,
}

impl SolverKind {
    pub const ALL: [SolverKind; 8] = [
        SolverKind::Saag1,
        SolverKind::Saag2,
        SolverKind::Saag3,
        SolverKind::Saag4,
        SolverKind::Svrg,
        SolverKind::Vrsgd,
        SolverKind::Gd,
        SolverKind::Sgd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Saag1 => "saag1",
            SolverKind::Saag2 => "saag2",
            SolverKind::Saag3 => "saag3",
            SolverKind::Saag4 => "saag4",
            SolverKind::Svrg => "svrg",
            SolverKind::Vrsgd => "vrsgd",
            SolverKind::Gd => "gd",
            SolverKind::Sgd => "sgd",
        }
    }

    pub fn uses_table(self) -> bool {
        matches!(self, SolverKind::Saag1 | SolverKind::Saag3)
    }

    pub fn uses_snap(self) -> bool {
        matches!(
            self,
            SolverKind::Saag2 | SolverKind::Saag4 | SolverKind::Svrg | SolverKind::Vrsgd
        )
    }

    /// Snap taken at the average of the previous epoch rather than at its start.
    fn snap_at_average(self) -> bool {
        matches!(self, SolverKind::Saag4 | SolverKind::Vrsgd)
    }

    pub fn valid_names() -> String {
        Self::ALL.iter().map(|k| k.name()).collect::<Vec<_>>().join(", ")
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .filter(|c| !matches!(c, '-' | '_'))
            .collect();
        let kind = match key.as_str() {
            "saag1" | "saagi" => SolverKind::Saag1,
            "saag2" | "saagii" => SolverKind::Saag2,
            "saag3" | "saagiii" => SolverKind::Saag3,
            "saag4" | "saagiv" => SolverKind::Saag4,
            "svrg" => SolverKind::Svrg,
            "vrsgd" => SolverKind::Vrsgd,
            "gd" | "pgd" => SolverKind::Gd,
            "sgd" => SolverKind::Sgd,
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "unknown solver {s:?}; valid kinds: {}",
                    Self::valid_names()
                )))
            }
        };
        Ok(kind)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub solver: SolverKind,
    pub epochs: usize,
    pub batch_size: usize,
    pub sbas: SbasParams,
    pub seed: u64,
    /// Constant step; bypasses the line search (and SGD's decay) when set.
    pub fixed_eta: Option<f64>,
    /// Starting point, zero when absent.
    pub init: Option<Vec<f64>>,
    /// Record a trace point every this many epochs; 0 records only the
    /// baseline and the final epoch.
    pub metrics_every: usize,
    pub snap_scaling: SnapScaling,
    /// Divisor `l` of the stale table entries, `n` when absent.
    pub stale_divisor: Option<f64>,
}

impl RunConfig {
    pub fn new(solver: SolverKind, epochs: usize, batch_size: usize, seed: u64) -> Self {
        Self {
            solver,
            epochs,
            batch_size,
            sbas: SbasParams::default(),
            seed,
            fixed_eta: None,
            init: None,
            metrics_every: 1,
            snap_scaling: SnapScaling::PerDataset,
            stale_divisor: None,
        }
    }

    pub fn validate(&self, n: usize, d: usize) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 || self.batch_size > n {
            return Err(Error::InvalidArgument(format!(
                "batch size must satisfy 1 <= b <= n (b = {}, n = {n})",
                self.batch_size
            )));
        }
        self.sbas.validate()?;
        if let Some(eta) = self.fixed_eta {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "fixed step must be positive, got {eta}"
                )));
            }
        }
        if let Some(w0) = &self.init {
            if w0.len() != d || !all_finite(w0) {
                return Err(Error::InvalidArgument(format!(
                    "initial point must be finite with length {d}"
                )));
            }
        }
        if let Some(l) = self.stale_divisor {
            if !(l > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "stale divisor must be positive, got {l}"
                )));
            }
        }
        Ok(())
    }
}

/// Step-size controls for a single inner step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepControl {
    pub sbas: SbasParams,
    pub fixed_eta: Option<f64>,
    pub snap_scaling: SnapScaling,
}

impl From<&RunConfig> for StepControl {
    fn from(c: &RunConfig) -> Self {
        Self {
            sbas: c.sbas,
            fixed_eta: c.fixed_eta,
            snap_scaling: c.snap_scaling,
        }
    }
}

/// Mutable state of one run.
#[derive(Clone, Debug)]
pub struct EpochState {
    pub kind: SolverKind,
    pub w: Vec<f64>,
    /// Sum of the iterates produced in the current epoch.
    pub iterate_sum: Vec<f64>,
    pub inner_steps: usize,
    pub snap: Option<SnapState>,
    pub table: Option<GradTable>,
    /// Completed epochs.
    pub epoch: usize,
    /// Inner steps taken over the whole run.
    pub global_step: u64,
    /// Line-search evaluations of the batch objective.
    pub ls_evals: u64,
    pub rejected_steps: u64,
    /// Iterate at the start of the current (or last completed) epoch.
    pub epoch_start: Vec<f64>,
    /// Average of the last completed epoch's iterates.
    pub epoch_average: Option<Vec<f64>>,
    /// When `Some`, every inner iterate of the current epoch is kept.
    pub iterate_log: Option<Vec<Vec<f64>>>,
}

impl EpochState {
    pub fn new(kind: SolverKind, obj: &Objective, w0: Vec<f64>, stale_divisor: Option<f64>) -> Self {
        let (n, d) = (obj.n(), obj.d());
        let table = kind.uses_table().then(|| match stale_divisor {
            Some(l) => GradTable::with_stale_divisor(n, d, l),
            None => GradTable::new(n, d),
        });
        Self {
            kind,
            iterate_sum: vec![0.0; d],
            inner_steps: 0,
            snap: None,
            table,
            epoch: 0,
            global_step: 0,
            ls_evals: 0,
            rejected_steps: 0,
            epoch_start: w0.clone(),
            epoch_average: None,
            iterate_log: None,
            w: w0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepInfo {
    pub eta: f64,
    /// `None` when the step size did not come from the line search.
    pub branch: Option<StepBranch>,
}

fn non_finite(state: &EpochState, what: &str) -> Error {
    Error::NonFinite {
        epoch: state.epoch + 1,
        step: state.inner_steps,
        what: what.to_string(),
    }
}

/// One inner iteration on `batch`.
pub fn inner_step(state: &mut EpochState, obj: &Objective, batch: &[usize], control: &StepControl) -> Result<StepInfo> {
    let kind = state.kind;
    let direction = match kind {
        SolverKind::Saag1 | SolverKind::Saag3 => {
            let table = state
                .table
                .as_mut()
                .ok_or_else(|| Error::InvalidArgument(format!("{kind} needs a gradient table")))?;
            saag1_direction(table, obj, &state.w, batch)?
        }
        SolverKind::Saag2 | SolverKind::Saag4 | SolverKind::Svrg | SolverKind::Vrsgd => {
            let snap = state
                .snap
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument(format!("{kind} needs a snap point")))?;
            if matches!(kind, SolverKind::Svrg | SolverKind::Vrsgd) {
                svrg_direction(obj, &state.w, batch, snap)?
            } else {
                saag2_direction_scaled(obj, &state.w, batch, snap, control.snap_scaling)?
            }
        }
        SolverKind::Gd | SolverKind::Sgd => sgd_direction(obj, &state.w, batch)?,
    };
    if !all_finite(&direction) {
        return Err(non_finite(state, "direction"));
    }

    state.global_step += 1;
    let info = match (control.fixed_eta, kind) {
        (Some(eta), _) => StepInfo { eta, branch: None },
        (None, SolverKind::Sgd) => StepInfo {
            eta: control.sbas.eta0 / (state.global_step as f64).sqrt(),
            branch: None,
        },
        (None, _) => {
            let line = obj.batch_line(&state.w, &direction, batch)?;
            let out = sbas_line(&control.sbas, line.direction_norm_sq(), |eta| line.eval(eta));
            state.ls_evals += out.evals as u64;
            StepInfo {
                eta: out.eta,
                branch: Some(out.branch),
            }
        }
    };

    if info.eta > 0.0 {
        for (wj, dj) in state.w.iter_mut().zip(&direction) {
            *wj -= info.eta * dj;
        }
        let reg = obj.reg();
        if !reg.is_smooth() {
            prox_in_place(&mut state.w, info.eta, &reg)?;
        }
        if !all_finite(&state.w) {
            return Err(non_finite(state, "iterate"));
        }
    } else {
        state.rejected_steps += 1;
    }

    state.inner_steps += 1;
    state.iterate_sum.iter_mut().zip(&state.w).for_each(|(s, v)| *s += v);
    if let Some(log) = state.iterate_log.as_mut() {
        log.push(state.w.clone());
    }
    Ok(info)
}

/// Sets up the snap point for the epoch about to start.
pub fn begin_epoch(state: &mut EpochState, obj: &Objective) -> Result<()> {
    let kind = state.kind;
    state.epoch_start = state.w.clone();
    state.iterate_sum.iter_mut().for_each(|v| *v = 0.0);
    state.inner_steps = 0;
    if let Some(log) = state.iterate_log.as_mut() {
        log.clear();
    }
    if kind.uses_snap() {
        let point = if kind.snap_at_average() {
            state.epoch_average.as_deref().unwrap_or(&state.w)
        } else {
            &state.w
        };
        state.snap = Some(SnapState::new(obj, point, state.epoch)?);
    }
    Ok(())
}

/// Closes the epoch: computes the iterate average and applies the start rule.
pub fn end_epoch(state: &mut EpochState) {
    let m = state.inner_steps.max(1) as f64;
    let average: Vec<f64> = state.iterate_sum.iter().map(|s| s / m).collect();
    if state.kind == SolverKind::Saag3 {
        state.w = average.clone();
    }
    state.epoch_average = Some(average);
    state.epoch += 1;
}

/// Runs one epoch over the given batches (GD ignores them and takes a single
/// full-gradient step).
pub fn run_epoch(state: &mut EpochState, obj: &Objective, batches: &[Vec<usize>], control: &StepControl) -> Result<()> {
    begin_epoch(state, obj)?;
    if state.kind == SolverKind::Gd {
        let all: Vec<usize> = (0..obj.n()).collect();
        inner_step(state, obj, &all, control)?;
    } else {
        for batch in batches {
            inner_step(state, obj, batch, control)?;
        }
    }
    end_epoch(state);
    Ok(())
}

#[derive(Debug)]
pub struct RunOutput {
    pub model: Vec<f64>,
    pub trace: Trace,
    pub state: EpochState,
}

/// Runs `config.epochs` epochs and records a trace point after each (plus the
/// epoch-0 baseline). Failures mid-run stop the run and are reported in
/// `trace.failure`; only an invalid configuration is an `Err`.
pub fn run(config: &RunConfig, obj: &Objective, test: &Dataset) -> Result<RunOutput> {
    let (n, d) = (obj.n(), obj.d());
    config.validate(n, d)?;
    let schedule = make_schedule(n, config.batch_size, config.seed)?;
    let control = StepControl::from(config);
    let w0 = config.init.clone().unwrap_or_else(|| vec![0.0; d]);
    let mut state = EpochState::new(config.solver, obj, w0, config.stale_divisor);
    let mut trace = Trace::new(config.solver.name(), config.seed);

    let base_grads = obj.grad_evals();
    let counters = |state: &EpochState| EpochCounters {
        epoch: state.epoch,
        grad_evals: obj.grad_evals() - base_grads,
        fevals: state.ls_evals,
    };
    let mut clock = Stopwatch::started();
    record_epoch(&mut trace, counters(&state), &state.w, obj, test, &mut clock)?;
    for e in 0..config.epochs {
        let batches = schedule.for_epoch(e as u64);
        if let Err(err) = run_epoch(&mut state, obj, batches.batches(), &control) {
            trace.failure = Some(err.to_string());
            break;
        }
        let last = e + 1 == config.epochs;
        let due = config.metrics_every > 0 && (e + 1) % config.metrics_every == 0;
        if last || due {
            record_epoch(&mut trace, counters(&state), &state.w, obj, test, &mut clock)?;
        }
    }
    Ok(RunOutput {
        model: state.w.clone(),
        trace,
        state,
    })
}

/// High-accuracy solution used as the suboptimality anchor.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceOptimum {
    pub w: Vec<f64>,
    pub value: f64,
    /// False when the objective still moved by more than 1e-12 (relative)
    /// over the final ten iterations.
    pub converged: bool,
}

/// Smallest budget accepted by [`reference_optimum`].
pub const MIN_REFERENCE_BUDGET: usize = 500;

/// Upper bound on the smoothness constant of the full smooth objective.
pub(crate) fn smoothness_bound(obj: &Objective) -> f64 {
    let max_row = obj.data().rows().iter().map(|r| r.norm_sq()).fold(0.0, f64::max);
    obj.loss().curvature_bound() * max_row + obj.reg().l2
}

/// Full-gradient run with the line search for `budget` iterations, followed
/// by an accelerated proximal-gradient polish (step `1/L`, restart on
/// objective increase) of up to `10 * budget` iterations. Returns the best
/// point seen.
pub fn reference_optimum(obj: &Objective, budget: usize) -> Result<ReferenceOptimum> {
    if budget < MIN_REFERENCE_BUDGET {
        return Err(Error::InvalidArgument(format!(
            "reference budget must be >= {MIN_REFERENCE_BUDGET} epochs, got {budget}"
        )));
    }
    let obj = obj.clone();
    let d = obj.d();
    let reg = obj.reg();
    let mut best_w = vec![0.0; d];
    let mut best = obj.value(&best_w);

    let mut state = EpochState::new(SolverKind::Gd, &obj, vec![0.0; d], None);
    let control = StepControl {
        sbas: SbasParams::default(),
        fixed_eta: None,
        snap_scaling: SnapScaling::PerDataset,
    };
    for _ in 0..budget {
        run_epoch(&mut state, &obj, &[], &control)?;
        let v = obj.value(&state.w);
        if v < best {
            best = v;
            best_w.clone_from(&state.w);
        }
    }

    let step = 1.0 / smoothness_bound(&obj);
    let mut x = best_w.clone();
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut fx = best;
    let mut history = vec![fx];
    for _ in 0..10 * budget {
        let g = obj.full_grad(&y)?;
        let mut next: Vec<f64> = y.iter().zip(&g).map(|(yj, gj)| yj - step * gj).collect();
        prox_in_place(&mut next, step, &reg)?;
        let f_next = obj.value(&next);
        if f_next > fx {
            // restart momentum from the current point
            t = 1.0;
            y.clone_from(&x);
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        y = next.iter().zip(&x).map(|(a, b)| a + beta * (a - b)).collect();
        x = next;
        t = t_next;
        fx = f_next;
        if fx < best {
            best = fx;
            best_w.clone_from(&x);
        }
        history.push(fx);
        if history.len() > 10 {
            let old = history[history.len() - 11];
            if (old - fx).abs() <= 1e-15 * fx.abs().max(1e-300) {
                break;
            }
        }
    }
    let converged = match history.len() {
        len if len > 10 => {
            let old = history[len - 11];
            (old - history[len - 1]).abs() <= 1e-12 * history[len - 1].abs().max(1e-300)
        }
        _ => true,
    };
    if !all_finite(&best_w) {
        return Err(Error::NonFinite {
            epoch: budget,
            step: 0,
            what: "reference optimum".into(),
        });
    }
    Ok(ReferenceOptimum {
        w: best_w,
        value: best,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{parse_libsvm_str, synthetic, SyntheticSpec};
    use crate::objective::{LossKind, Regularizer};

    fn toy(n: usize) -> Dataset {
        synthetic(&SyntheticSpec {
            n,
            d: 4,
            separability: 2.0,
            flip: 0.1,
            seed: 3,
        })
        .unwrap()
    }

    #[test]
    fn solver_names_round_trip() {
        for k in SolverKind::ALL {
            assert_eq!(k.name().parse::<SolverKind>().unwrap(), k);
        }
        assert_eq!("SAAG-IV".parse::<SolverKind>().unwrap(), SolverKind::Saag4);
        let err = "adam".parse::<SolverKind>().unwrap_err().to_string();
        assert!(err.contains("saag1") && err.contains("sgd"));
    }

    #[test]
    fn zero_step_leaves_iterate_but_advances_counters() {
        let ds = toy(8);
        let obj = Objective::new(LossKind::Logistic, Regularizer::ridge(0.1), &ds);
        let mut state = EpochState::new(SolverKind::Saag4, &obj, vec![0.5; 4], None);
        begin_epoch(&mut state, &obj).unwrap();
        // an Armijo constant that nothing satisfies and only one tiny trial
        let control = StepControl {
            sbas: SbasParams {
                alpha: 0.999_999,
                eta0: 1e3,
                max_backtracks: 1,
                shrink: 0.5,
            },
            fixed_eta: None,
            snap_scaling: SnapScaling::PerDataset,
        };
        let info = inner_step(&mut state, &obj, &[0, 1], &control).unwrap();
        assert_eq!(info.eta, 0.0);
        assert_eq!(state.w, vec![0.5; 4]);
        assert_eq!((state.inner_steps, state.global_step, state.rejected_steps), (1, 1, 1));
        assert_eq!(state.iterate_sum, vec![0.5; 4]);
    }

    #[test]
    fn prox_step_with_zero_direction_soft_thresholds() {
        // least squares at its unregularized minimizer gives a zero data gradient
        let ds = parse_libsvm_str("+1 1:1").unwrap();
        let obj = Objective::new(LossKind::LeastSquares, Regularizer::new(0.0, 0.25).unwrap(), &ds);
        let mut state = EpochState::new(SolverKind::Gd, &obj, vec![1.0], None);
        let control = StepControl::from(&RunConfig::new(SolverKind::Gd, 1, 1, 0));
        let info = inner_step(&mut state, &obj, &[0], &control).unwrap();
        assert_eq!(info.eta, 1.0);
        assert_eq!(state.w, vec![0.75]);
    }

    #[test]
    fn gradient_accounting_per_epoch() {
        let ds = toy(12);
        let test = ds.clone();
        for (kind, expected) in [
            (SolverKind::Saag1, 1.0),
            (SolverKind::Saag3, 1.0),
            (SolverKind::Saag2, 3.0),
            (SolverKind::Saag4, 3.0),
            (SolverKind::Svrg, 3.0),
            (SolverKind::Vrsgd, 3.0),
            (SolverKind::Gd, 1.0),
            (SolverKind::Sgd, 1.0),
        ] {
            let obj = Objective::new(LossKind::Logistic, Regularizer::ridge(1e-2), &ds);
            let out = run(&RunConfig::new(kind, 2, 4, 1), &obj, &test).unwrap();
            let g: Vec<f64> = out.trace.points.iter().map(|p| p.grads_over_n).collect();
            assert_eq!(g, vec![0.0, expected, 2.0 * expected], "{kind}");
        }
    }

    #[test]
    fn ragged_batches_count_actual_sizes() {
        let ds = toy(10);
        let obj = Objective::new(LossKind::Logistic, Regularizer::ridge(1e-2), &ds);
        let out = run(&RunConfig::new(SolverKind::Saag4, 1, 3, 1), &obj, &ds).unwrap();
        assert_eq!(out.state.inner_steps, 4);
        assert_eq!(out.trace.points[1].grads_over_n, 3.0);
    }

    #[test]
    fn run_is_deterministic() {
        let ds = toy(20);
        let cfg = RunConfig::new(SolverKind::Saag3, 4, 3, 17);
        let a = run(
            &cfg,
            &Objective::new(LossKind::Logistic, Regularizer::ridge(1e-2), &ds),
            &ds,
        )
        .unwrap();
        let b = run(
            &cfg,
            &Objective::new(LossKind::Logistic, Regularizer::ridge(1e-2), &ds),
            &ds,
        )
        .unwrap();
        assert_eq!(a.model, b.model);
        let strip = |t: &Trace| {
            t.points
                .iter()
                .map(|p| {
                    (
                        p.epoch,
                        p.grads_over_n,
                        p.fevals,
                        p.objective.to_bits(),
                        p.test_accuracy.to_bits(),
                    )
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&a.trace), strip(&b.trace));
    }

    #[test]
    fn invalid_configs() {
        let ds = toy(6);
        let obj = Objective::new(LossKind::Logistic, Regularizer::ridge(1e-2), &ds);
        assert!(run(&RunConfig::new(SolverKind::Saag1, 0, 2, 1), &obj, &ds).is_err());
        assert!(run(&RunConfig::new(SolverKind::Saag1, 1, 7, 1), &obj, &ds).is_err());
        let mut cfg = RunConfig::new(SolverKind::Saag1, 1, 2, 1);
        cfg.fixed_eta = Some(-1.0);
        assert!(run(&cfg, &obj, &ds).is_err());
        cfg.fixed_eta = None;
        cfg.init = Some(vec![0.0; 3]);
        assert!(run(&cfg, &obj, &ds).is_err());
    }

    #[test]
    fn divergence_is_reported_in_trace() {
        let ds = toy(6);
        let obj = Objective::new(LossKind::LeastSquares, Regularizer::ridge(0.0), &ds);
        let mut cfg = RunConfig::new(SolverKind::Sgd, 400, 2, 1);
        cfg.fixed_eta = Some(1e3);
        let out = run(&cfg, &obj, &ds).unwrap();
        assert!(out.trace.failure.as_deref().unwrap().contains("non-finite"));
        assert!(out.trace.points.len() < 401);
    }

    #[test]
    fn reference_optimum_trivial_cases() {
        let ds = parse_libsvm_str("+1 1:1").unwrap();
        let obj = Objective::new(LossKind::LeastSquares, Regularizer::default(), &ds);
        let r = reference_optimum(&obj, 500).unwrap();
        assert!((r.w[0] - 1.0).abs() < 1e-12);
        assert!(r.value.abs() < 1e-20);
        assert!(r.converged);

        let ds = parse_libsvm_str("+1 1:1 2:-2\n+1 1:-1 2:2\n-1 1:0.5\n-1 1:-0.5").unwrap();
        let obj = Objective::new(LossKind::Logistic, Regularizer::ridge(0.1), &ds);
        let r = reference_optimum(&obj, 500).unwrap();
        assert!(r.w.iter().all(|v| v.abs() < 1e-12), "{:?}", r.w);
        assert!((r.value - std::f64::consts::LN_2).abs() < 1e-15);

        assert!(reference_optimum(&obj, 10).is_err());
    }
}
