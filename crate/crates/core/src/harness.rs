//! Per-epoch traces (objective, suboptimality, test accuracy against epochs,
//! gradients/n and wall time) and their CSV form.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::objective::Objective;

/// Floor applied to suboptimality so downstream log plots stay finite.
pub const SUBOPTIMALITY_FLOOR: f64 = 1e-16;

pub const CSV_HEADER: &str = "solver,seed,epoch,wall_seconds,grads_over_n,objective,suboptimality,test_accuracy";

#[derive(Clone, Debug, PartialEq)]
pub struct TracePoint {
    pub epoch: usize,
    /// Cumulative training time, metric evaluation excluded.
    pub wall_seconds: f64,
    /// Cumulative component-gradient evaluations divided by n.
    pub grads_over_n: f64,
    /// Line-search evaluations of the batch objective.
    pub fevals: u64,
    pub objective: f64,
    pub suboptimality: f64,
    pub test_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Trace {
    pub solver: String,
    pub seed: u64,
    /// Extra sweep column: `(axis name, value)`.
    pub axis: Option<(String, f64)>,
    pub config_echo: String,
    pub points: Vec<TracePoint>,
    pub failure: Option<String>,
}

impl Trace {
    pub fn new(solver: impl Into<String>, seed: u64) -> Self {
        Self {
            solver: solver.into(),
            seed,
            ..Self::default()
        }
    }

    pub fn last(&self) -> Option<&TracePoint> {
        self.points.last()
    }

    pub fn min_objective(&self) -> Option<f64> {
        self.points
            .iter()
            .map(|p| p.objective)
            .filter(|v| v.is_finite())
            .reduce(f64::min)
    }
}

/// Wall clock that can be paused while metrics are computed.
#[derive(Debug)]
pub struct Stopwatch {
    accumulated: Duration,
    running_since: Option<Instant>,
}

impl Stopwatch {
    pub fn started() -> Self {
        Self {
            accumulated: Duration::ZERO,
            running_since: Some(Instant::now()),
        }
    }

    pub fn pause(&mut self) {
        if let Some(t) = self.running_since.take() {
            self.accumulated += t.elapsed();
        }
    }

    pub fn resume(&mut self) {
        if self.running_since.is_none() {
            self.running_since = Some(Instant::now());
        }
    }

    pub fn seconds(&self) -> f64 {
        let live = self.running_since.map_or(Duration::ZERO, |t| t.elapsed());
        (self.accumulated + live).as_secs_f64()
    }
}

/// Counters the harness reads at an epoch boundary.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct EpochCounters {
    pub epoch: usize,
    pub grad_evals: u64,
    pub fevals: u64,
}

/// Appends one point. The clock is paused while the full objective and the
/// test accuracy are evaluated. Suboptimality is provisional (relative to the
/// best objective in this trace) until [`finalize_suboptimality`].
pub fn record_epoch(
    trace: &mut Trace,
    counters: EpochCounters,
    w: &[f64],
    obj: &Objective,
    test: &Dataset,
    clock: &mut Stopwatch,
) -> Result<()> {
    clock.pause();
    let wall_seconds = clock.seconds();
    let objective = obj.value(w);
    let test_accuracy = obj.accuracy(w, test)?;
    let best = trace.min_objective().map_or(objective, |b| b.min(objective));
    trace.points.push(TracePoint {
        epoch: counters.epoch,
        wall_seconds,
        grads_over_n: counters.grad_evals as f64 / obj.n() as f64,
        fevals: counters.fevals,
        objective,
        suboptimality: (objective - best).max(0.0),
        test_accuracy,
    });
    clock.resume();
    Ok(())
}

/// Sets `F*` to the minimum objective across all traces and `reference`,
/// recomputes every suboptimality and floors it at [`SUBOPTIMALITY_FLOOR`].
/// Returns the `F*` used.
pub fn finalize_suboptimality(traces: &mut [Trace], reference: Option<f64>) -> f64 {
    let f_star = traces
        .iter()
        .filter_map(Trace::min_objective)
        .chain(reference.filter(|v| v.is_finite()))
        .fold(f64::INFINITY, f64::min);
    for p in traces.iter_mut().flat_map(|t| t.points.iter_mut()) {
        p.suboptimality = (p.objective - f_star).max(SUBOPTIMALITY_FLOOR);
    }
    f_star
}

/// 17 significant digits; parses back to the identical `f64`.
pub fn format_real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

fn sort_key(t: &Trace) -> (f64, &str, u64) {
    (t.axis.as_ref().map_or(0.0, |a| a.1), t.solver.as_str(), t.seed)
}

/// Renders the CSV. Lines in `metadata` are written first, each prefixed `# `.
/// Rows are ordered by (axis value, solver, seed, epoch). Sweep traces add a
/// trailing column named after the axis.
pub fn render_csv(traces: &[Trace], metadata: &[String]) -> Result<String> {
    if traces.is_empty() {
        return Err(Error::InvalidArgument("no traces to write".into()));
    }
    let axis_name = traces.iter().find_map(|t| t.axis.as_ref().map(|a| a.0.clone()));
    let mut order: Vec<&Trace> = traces.iter().collect();
    order.sort_by(|a, b| {
        let (ka, kb) = (sort_key(a), sort_key(b));
        ka.0.total_cmp(&kb.0).then(ka.1.cmp(kb.1)).then(ka.2.cmp(&kb.2))
    });

    let mut out = String::new();
    for line in metadata {
        for sub in line.lines() {
            let _ = writeln!(out, "# {sub}");
        }
    }
    out.push_str(CSV_HEADER);
    if let Some(name) = &axis_name {
        let _ = write!(out, ",{name}");
    }
    out.push('\n');
    for t in order {
        let mut points: Vec<&TracePoint> = t.points.iter().collect();
        points.sort_by_key(|p| p.epoch);
        for p in points {
            let _ = write!(
                out,
                "{},{},{},{},{},{},{},{}",
                t.solver,
                t.seed,
                p.epoch,
                format_real(p.wall_seconds),
                format_real(p.grads_over_n),
                format_real(p.objective),
                format_real(p.suboptimality),
                format_real(p.test_accuracy),
            );
            if axis_name.is_some() {
                let v = t.axis.as_ref().map_or(f64::NAN, |a| a.1);
                let _ = write!(out, ",{}", format_real(v));
            }
            out.push('\n');
        }
    }
    Ok(out)
}

pub fn emit_csv(traces: &[Trace], path: &Path, metadata: &[String]) -> Result<()> {
    let text = render_csv(traces, metadata)?;
    let io_err = |e| Error::Io {
        path: path.display().to_string(),
        source: e,
    };
    let mut file = std::fs::File::create(path).map_err(io_err)?;
    file.write_all(text.as_bytes()).map_err(io_err)?;
    Ok(())
}

/// One parsed data row of a trace CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvRow {
    pub solver: String,
    pub seed: u64,
    pub epoch: usize,
    pub wall_seconds: f64,
    pub grads_over_n: f64,
    pub objective: f64,
    pub suboptimality: f64,
    pub test_accuracy: f64,
    pub axis: Option<f64>,
}

/// Parses text produced by [`render_csv`], skipping `#` metadata lines.
pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "missing header".into(),
    })?;
    if !header.starts_with(CSV_HEADER) {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected header {header:?}"),
        });
    }
    let with_axis = header.len() > CSV_HEADER.len();
    let mut rows = Vec::new();
    for (ix, line) in lines {
        let err = |message: String| Error::Parse { line: ix + 1, message };
        let f: Vec<&str> = line.split(',').collect();
        let expected = if with_axis { 9 } else { 8 };
        if f.len() != expected {
            return Err(err(format!("expected {expected} fields, got {}", f.len())));
        }
        let real = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad number {s:?}")));
        rows.push(CsvRow {
            solver: f[0].to_string(),
            seed: f[1].parse().map_err(|_| err(format!("bad seed {:?}", f[1])))?,
            epoch: f[2].parse().map_err(|_| err(format!("bad epoch {:?}", f[2])))?,
            wall_seconds: real(f[3])?,
            grads_over_n: real(f[4])?,
            objective: real(f[5])?,
            suboptimality: real(f[6])?,
            test_accuracy: real(f[7])?,
            axis: if with_axis { Some(real(f[8])?) } else { None },
        });
    }
    Ok(rows)
}
