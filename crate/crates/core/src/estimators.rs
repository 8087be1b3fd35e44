//! Gradient-direction constructions.
//!
//! * SAAG-I/III keep a table of the most recent gradient of every point and
//!   mix the fresh mini-batch gradient (weight `1/|B|`) with the stale
//!   out-of-batch entries (weight `1/l`, `l = n` by default).
//! * SAAG-II/IV use a snap point `w~` with full gradient `mu~`:
//!   `(1/b) sum_B grad f_i(w) - (1/n) sum_B grad f_i(w~) + mu~`. The mismatched
//!   scalings make the estimator biased:
//!   `E[d] = grad f(w) + ((m-1)/m) grad f(w~)` over a uniform partition.
//! * SVRG/VR-SGD use `1/b` on both batch terms and are unbiased.
//! * SGD is the plain mini-batch gradient.

use std::fmt;

use crate::dataset::BatchSchedule;
use crate::error::{Error, Result};
use crate::objective::Objective;

/// Largest dataset for which batch enumeration is permitted.
pub const ENUMERATION_CAP: usize = 64;

/// Per-point gradient memory for SAAG-I/III.
///
/// For linear models `grad loss_i(w) = loss'(x_i . w) x_i`, so each slot stores
/// only that scalar; `aggregate` holds the dense sum of all stored gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct GradTable {
    scalars: Vec<f64>,
    initialized: Vec<bool>,
    aggregate: Vec<f64>,
    stale_divisor: f64,
}

impl GradTable {
    /// Empty table over `n` points and `d` features, stale weight `1/n`.
    pub fn new(n: usize, d: usize) -> Self {
        Self::with_stale_divisor(n, d, n as f64)
    }

    /// Table whose out-of-batch entries enter the direction at weight `1/l`.
    pub fn with_stale_divisor(n: usize, d: usize, l: f64) -> Self {
        Self {
            scalars: vec![0.0; n],
            initialized: vec![false; n],
            aggregate: vec![0.0; d],
            stale_divisor: l,
        }
    }

    pub fn stale_divisor(&self) -> f64 {
        self.stale_divisor
    }

    pub fn is_initialized(&self, i: usize) -> bool {
        self.initialized[i]
    }

    pub fn initialized_count(&self) -> usize {
        self.initialized.iter().filter(|&&b| b).count()
    }

    pub fn scalar(&self, i: usize) -> f64 {
        self.scalars[i]
    }

    /// Running sum of every stored gradient (data part only).
    pub fn aggregate(&self) -> &[f64] {
        &self.aggregate
    }

    /// Sum of stored gradients rebuilt from the slots.
    pub fn recompute_aggregate(&self, obj: &Objective) -> Vec<f64> {
        let mut sum = vec![0.0; self.aggregate.len()];
        for (i, (&g, &init)) in self.scalars.iter().zip(&self.initialized).enumerate() {
            if init {
                obj.data().row(i).axpy_into(g, &mut sum);
            }
        }
        sum
    }

    #[cfg(debug_assertions)]
    fn debug_check(&self, obj: &Objective) {
        let exact = self.recompute_aggregate(obj);
        let scale = exact
            .iter()
            .chain(&self.aggregate)
            .fold(1.0f64, |acc, v| acc.max(v.abs()));
        for (a, b) in exact.iter().zip(&self.aggregate) {
            debug_assert!(
                (a - b).abs() <= 1e-9 * scale,
                "gradient table aggregate drifted: {a} vs {b}"
            );
        }
    }
}

/// Snap point `w~` together with `mu~ = grad f(w~)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapState {
    snap_point: Vec<f64>,
    full_grad_at_snap: Vec<f64>,
    epoch_tag: usize,
}

impl SnapState {
    /// Computes the full gradient at `point` (n gradient evaluations).
    pub fn new(obj: &Objective, point: &[f64], epoch_tag: usize) -> Result<Self> {
        Ok(Self {
            snap_point: point.to_vec(),
            full_grad_at_snap: obj.full_grad(point)?,
            epoch_tag,
        })
    }

    pub fn snap_point(&self) -> &[f64] {
        &self.snap_point
    }

    pub fn full_grad_at_snap(&self) -> &[f64] {
        &self.full_grad_at_snap
    }

    pub fn epoch_tag(&self) -> usize {
        self.epoch_tag
    }
}

/// Scaling of the snap-point batch term in the SAAG-II/IV estimator.
/// `PerBatch` turns the estimator into SVRG and only exists as a mutation
/// switch for the verification suite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SnapScaling {
    #[default]
    PerDataset,
    PerBatch,
}

/// SAAG-I/III direction; refreshes the slots of `batch` as a side effect.
///
/// Returns `(1/|B|) sum_{i in B} grad f_i(w) + (1/l) sum_{i not in B} t_i + l2 w`,
/// where `t_i` are the stored (possibly stale, possibly zero) gradients.
pub fn saag1_direction(table: &mut GradTable, obj: &Objective, w: &[f64], batch: &[usize]) -> Result<Vec<f64>> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let data = obj.data();
    let l2 = obj.reg().l2;
    let fresh_weight = 1.0 / batch.len() as f64;
    let stale_weight = 1.0 / table.stale_divisor;

    // Out-of-batch sum = aggregate minus the old contributions of the batch.
    let mut out_of_batch = table.aggregate.clone();
    let mut fresh = Vec::with_capacity(batch.len());
    for &i in batch {
        if i >= table.scalars.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                n: table.scalars.len(),
            });
        }
        if table.initialized[i] {
            data.row(i).axpy_into(-table.scalars[i], &mut out_of_batch);
        }
        fresh.push(obj.component_scalar(w, i)?);
    }

    let mut direction: Vec<f64> = out_of_batch
        .iter()
        .zip(w)
        .map(|(s, wj)| stale_weight * s + l2 * wj)
        .collect();
    for (&i, &g) in batch.iter().zip(&fresh) {
        let row = data.row(i);
        row.axpy_into(fresh_weight * g, &mut direction);
        let old = if table.initialized[i] { table.scalars[i] } else { 0.0 };
        row.axpy_into(g - old, &mut table.aggregate);
        table.scalars[i] = g;
        table.initialized[i] = true;
    }
    #[cfg(debug_assertions)]
    table.debug_check(obj);
    Ok(direction)
}

/// SAAG-II/IV direction:
/// `(1/|B|) sum_B grad f_i(w) - (|B|/n)(1/|B|) sum_B grad f_i(w~) + mu~`.
///
/// `grad f_i` includes the ridge term on both sides, so with `w = w~` the
/// direction is `(1 - |B|/n) grad f_B(w~) + grad f(w~)`.
pub fn saag2_direction(obj: &Objective, w: &[f64], batch: &[usize], snap: &SnapState) -> Result<Vec<f64>> {
    saag2_direction_scaled(obj, w, batch, snap, SnapScaling::PerDataset)
}

pub fn saag2_direction_scaled(
    obj: &Objective,
    w: &[f64],
    batch: &[usize],
    snap: &SnapState,
    scaling: SnapScaling,
) -> Result<Vec<f64>> {
    let at_w = obj.batch_grad(w, batch)?;
    let at_snap = obj.batch_grad(&snap.snap_point, batch)?;
    let snap_weight = match scaling {
        SnapScaling::PerDataset => batch.len() as f64 / obj.n() as f64,
        SnapScaling::PerBatch => 1.0,
    };
    Ok(at_w
        .iter()
        .zip(&at_snap)
        .zip(&snap.full_grad_at_snap)
        .map(|((a, s), mu)| a - snap_weight * s + mu)
        .collect())
}

/// SVRG / VR-SGD direction `grad f_B(w) - grad f_B(w~) + mu~` (unbiased).
pub fn svrg_direction(obj: &Objective, w: &[f64], batch: &[usize], snap: &SnapState) -> Result<Vec<f64>> {
    saag2_direction_scaled(obj, w, batch, snap, SnapScaling::PerBatch)
}

/// Plain mini-batch gradient.
pub fn sgd_direction(obj: &Objective, w: &[f64], batch: &[usize]) -> Result<Vec<f64>> {
    obj.batch_grad(w, batch)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimatorKind {
    /// Gradient-table estimator of SAAG-I/III.
    Saag1,
    /// Biased snap estimator of SAAG-II/IV.
    Saag2,
    /// Unbiased snap estimator of SVRG/VR-SGD.
    Svrg,
    Sgd,
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimatorKind::Saag1 => "saag1-table",
            EstimatorKind::Saag2 => "saag2-snap",
            EstimatorKind::Svrg => "svrg-snap",
            EstimatorKind::Sgd => "sgd",
        })
    }
}

/// State an estimator needs besides the iterate.
#[derive(Clone, Copy, Debug)]
pub enum EstimatorState<'s> {
    Table(&'s GradTable),
    Snap(&'s SnapState),
    None,
}

/// One direction evaluation, cloning any table so the caller's state is untouched.
pub fn direction_of(
    kind: EstimatorKind,
    obj: &Objective,
    w: &[f64],
    batch: &[usize],
    state: EstimatorState,
    scaling: SnapScaling,
) -> Result<Vec<f64>> {
    match (kind, state) {
        (EstimatorKind::Saag1, EstimatorState::Table(table)) => {
            let mut table = table.clone();
            saag1_direction(&mut table, obj, w, batch)
        }
        (EstimatorKind::Saag2, EstimatorState::Snap(snap)) => saag2_direction_scaled(obj, w, batch, snap, scaling),
        (EstimatorKind::Svrg, EstimatorState::Snap(snap)) => svrg_direction(obj, w, batch, snap),
        (EstimatorKind::Sgd, _) => sgd_direction(obj, w, batch),
        (kind, _) => Err(Error::InvalidArgument(format!(
            "{kind} estimator given the wrong state"
        ))),
    }
}

/// Mean direction over every batch of `schedule`, each evaluated from the
/// same starting state.
pub fn estimator_mean_bruteforce(
    kind: EstimatorKind,
    obj: &Objective,
    w: &[f64],
    state: EstimatorState,
    schedule: &BatchSchedule,
) -> Result<Vec<f64>> {
    estimator_mean_bruteforce_scaled(kind, obj, w, state, schedule, SnapScaling::PerDataset)
}

pub fn estimator_mean_bruteforce_scaled(
    kind: EstimatorKind,
    obj: &Objective,
    w: &[f64],
    state: EstimatorState,
    schedule: &BatchSchedule,
    scaling: SnapScaling,
) -> Result<Vec<f64>> {
    let n = obj.n();
    if n > ENUMERATION_CAP {
        return Err(Error::TooLargeToEnumerate {
            n,
            cap: ENUMERATION_CAP,
        });
    }
    let mut mean = vec![0.0; obj.d()];
    let m = schedule.m() as f64;
    for batch in schedule.batches() {
        let d = direction_of(kind, obj, w, batch, state, scaling)?;
        mean.iter_mut().zip(&d).for_each(|(acc, v)| *acc += v / m);
    }
    Ok(mean)
}
