//! Composite ERM objective `F(w) = (1/n) sum_i loss_i(w) + (l2/2)|w|^2 + l1 |w|_1`.
//!
//! The ℓ2 term belongs to the smooth part `f`; only the ℓ1 term is handled by
//! the proximal operator. Every per-point loss is a function of the linear
//! score `x_i . w`, so its gradient is a scalar multiple of `x_i`.

use std::cell::Cell;
use std::fmt;
use std::str::FromStr;

use crate::dataset::{Dataset, SparseVector};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LossKind {
    /// `ln(1 + exp(-y s))`
    Logistic,
    /// `max(0, 1 - y s)^2`
    SquaredHinge,
    /// `(s - y)^2 / 2`
    LeastSquares,
}

impl LossKind {
    pub const ALL: [LossKind; 3] = [LossKind::Logistic, LossKind::SquaredHinge, LossKind::LeastSquares];

    /// Loss at score `s = x . w` with label `y`.
    pub fn value(self, s: f64, y: f64) -> f64 {
        match self {
            LossKind::Logistic => softplus(-y * s),
            LossKind::SquaredHinge => {
                let slack = (1.0 - y * s).max(0.0);
                slack * slack
            }
            LossKind::LeastSquares => 0.5 * (s - y) * (s - y),
        }
    }

    /// Derivative of the loss with respect to the score.
    pub fn derivative(self, s: f64, y: f64) -> f64 {
        match self {
            LossKind::Logistic => -y * sigmoid(-y * s),
            LossKind::SquaredHinge => -2.0 * y * (1.0 - y * s).max(0.0),
            LossKind::LeastSquares => s - y,
        }
    }

    /// Upper bound on the second derivative in the score.
    pub fn curvature_bound(self) -> f64 {
        match self {
            LossKind::Logistic => 0.25,
            LossKind::SquaredHinge => 2.0,
            LossKind::LeastSquares => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Logistic => "logistic",
            LossKind::SquaredHinge => "squared-hinge",
            LossKind::LeastSquares => "least-squares",
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "logistic" | "logreg" => Ok(LossKind::Logistic),
            "squared-hinge" | "squared_hinge" | "sqhinge" | "svm" => Ok(LossKind::SquaredHinge),
            "least-squares" | "least_squares" | "ls" => Ok(LossKind::LeastSquares),
            other => Err(Error::InvalidArgument(format!(
                "unknown loss {other:?} (expected logistic, squared-hinge, least-squares)"
            ))),
        }
    }
}

/// `ln(1 + e^t)` without overflow.
pub fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `l2` is the smooth ridge coefficient, `l1` the non-smooth lasso coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Regularizer {
    pub l2: f64,
    pub l1: f64,
}

impl Regularizer {
    pub fn new(l2: f64, l1: f64) -> Result<Self> {
        if !(l2 >= 0.0 && l2.is_finite()) || !(l1 >= 0.0 && l1.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "regularization coefficients must be finite and >= 0 (l2 = {l2}, l1 = {l1})"
            )));
        }
        Ok(Self { l2, l1 })
    }

    pub fn ridge(l2: f64) -> Self {
        Self { l2, l1: 0.0 }
    }

    /// Smooth problems use the plain gradient update, otherwise prox.
    pub fn is_smooth(&self) -> bool {
        self.l1 == 0.0
    }
}

/// Loss, regularizer and a borrowed dataset, plus evaluation counters.
///
/// The counters use interior mutability, so an `Objective` is owned by a single
/// run; concurrent runs each build their own view over a shared `Dataset`.
#[derive(Debug)]
pub struct Objective<'a> {
    loss: LossKind,
    reg: Regularizer,
    data: &'a Dataset,
    grad_evals: Cell<u64>,
    fevals: Cell<u64>,
}

impl Clone for Objective<'_> {
    fn clone(&self) -> Self {
        Self::new(self.loss, self.reg, self.data)
    }
}

impl<'a> Objective<'a> {
    pub fn new(loss: LossKind, reg: Regularizer, data: &'a Dataset) -> Self {
        Self {
            loss,
            reg,
            data,
            grad_evals: Cell::new(0),
            fevals: Cell::new(0),
        }
    }

    pub fn loss(&self) -> LossKind {
        self.loss
    }

    pub fn reg(&self) -> Regularizer {
        self.reg
    }

    pub fn data(&self) -> &'a Dataset {
        self.data
    }

    pub fn n(&self) -> usize {
        self.data.n()
    }

    pub fn d(&self) -> usize {
        self.data.d()
    }

    /// Component-gradient evaluations since construction or the last reset.
    pub fn grad_evals(&self) -> u64 {
        self.grad_evals.get()
    }

    /// Per-point loss evaluations made on behalf of line searches.
    pub fn fevals(&self) -> u64 {
        self.fevals.get()
    }

    pub fn reset_counters(&self) {
        self.grad_evals.set(0);
        self.fevals.set(0);
    }

    pub(crate) fn count_fevals(&self, k: u64) {
        self.fevals.set(self.fevals.get() + k);
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.n() {
            return Err(Error::IndexOutOfRange { index: i, n: self.n() });
        }
        Ok(())
    }

    pub fn score(&self, w: &[f64], i: usize) -> f64 {
        self.data.row(i).dot(w)
    }

    /// `loss'(x_i . w)`; the data part of `grad f_i` is this scalar times `x_i`.
    /// Counts one gradient evaluation.
    pub fn component_scalar(&self, w: &[f64], i: usize) -> Result<f64> {
        self.check_index(i)?;
        self.grad_evals.set(self.grad_evals.get() + 1);
        Ok(self.loss.derivative(self.score(w, i), self.data.label(i)))
    }

    /// Data-dependent part of `grad f_i(w)`; the ℓ2 term is added by callers.
    pub fn component_grad(&self, w: &[f64], i: usize) -> Result<SparseVector> {
        let g = self.component_scalar(w, i)?;
        Ok(self.data.row(i).scaled(g))
    }

    /// `out += scale * sum_{i in batch} loss_i'(w) x_i`; counts `|batch|`.
    pub(crate) fn accumulate_loss_grad(&self, w: &[f64], batch: &[usize], scale: f64, out: &mut [f64]) -> Result<()> {
        for &i in batch {
            let g = self.component_scalar(w, i)?;
            self.data.row(i).axpy_into(scale * g, out);
        }
        Ok(())
    }

    /// `(1/|B|) sum_{i in B} grad f_i(w) + l2 w`.
    pub fn batch_grad(&self, w: &[f64], batch: &[usize]) -> Result<Vec<f64>> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let mut out: Vec<f64> = w.iter().map(|v| self.reg.l2 * v).collect();
        self.accumulate_loss_grad(w, batch, 1.0 / batch.len() as f64, &mut out)?;
        Ok(out)
    }

    /// Gradient of the smooth part `f`; counts `n` evaluations.
    pub fn full_grad(&self, w: &[f64]) -> Result<Vec<f64>> {
        let all: Vec<usize> = (0..self.n()).collect();
        self.batch_grad(w, &all)
    }

    fn loss_mean(&self, w: &[f64], batch: impl ExactSizeIterator<Item = usize>) -> f64 {
        let len = batch.len() as f64;
        let total: f64 = batch
            .map(|i| self.loss.value(self.score(w, i), self.data.label(i)))
            .sum();
        total / len
    }

    /// Smooth part `f(w)`: mean loss plus the ridge term.
    pub fn smooth_value(&self, w: &[f64]) -> f64 {
        self.loss_mean(w, 0..self.n()) + 0.5 * self.reg.l2 * norm_sq(w)
    }

    /// Full objective `F(w) = f(w) + l1 |w|_1`.
    pub fn value(&self, w: &[f64]) -> f64 {
        self.smooth_value(w) + self.reg.l1 * w.iter().map(|v| v.abs()).sum::<f64>()
    }

    /// Mini-batch smooth objective `f_B(w)`; counts `|B|` function evaluations.
    pub fn batch_smooth_value(&self, w: &[f64], batch: &[usize]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        self.count_fevals(batch.len() as u64);
        Ok(self.loss_mean(w, batch.iter().copied()) + 0.5 * self.reg.l2 * norm_sq(w))
    }

    /// `eta -> f_B(w - eta d)` with the per-point scores precomputed, so each
    /// trial step costs O(|B|) rather than O(|B| nnz + d).
    pub fn batch_line<'s>(&'s self, w: &[f64], direction: &[f64], batch: &'s [usize]) -> Result<BatchLine<'s, 'a>> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let scores = batch.iter().map(|&i| self.score(w, i)).collect();
        let slopes = batch.iter().map(|&i| self.score(direction, i)).collect();
        Ok(BatchLine {
            objective: self,
            batch,
            scores,
            slopes,
            w_sq: norm_sq(w),
            w_dot_d: dot(w, direction),
            d_sq: norm_sq(direction),
        })
    }

    /// Fraction of `test` rows with `sign(x . w) == y`, where `sign(0) = +1`.
    pub fn accuracy(&self, w: &[f64], test: &Dataset) -> Result<f64> {
        accuracy(w, test)
    }
}

pub fn accuracy(w: &[f64], test: &Dataset) -> Result<f64> {
    if test.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    let hits = (0..test.n())
        .filter(|&i| {
            let s = test.row(i).dot(w);
            let pred = if s >= 0.0 { 1.0 } else { -1.0 };
            pred == test.label(i)
        })
        .count();
    Ok(hits as f64 / test.n() as f64)
}

/// One-dimensional restriction of a mini-batch objective along `-d`.
pub struct BatchLine<'s, 'a> {
    objective: &'s Objective<'a>,
    batch: &'s [usize],
    scores: Vec<f64>,
    slopes: Vec<f64>,
    w_sq: f64,
    w_dot_d: f64,
    d_sq: f64,
}

impl BatchLine<'_, '_> {
    /// `f_B(w - eta d)`; counts `|B|` function evaluations.
    pub fn eval(&self, eta: f64) -> f64 {
        let obj = self.objective;
        obj.count_fevals(self.batch.len() as u64);
        let loss: f64 = self
            .batch
            .iter()
            .zip(self.scores.iter().zip(&self.slopes))
            .map(|(&i, (&s, &t))| obj.loss.value(s - eta * t, obj.data.label(i)))
            .sum::<f64>()
            / self.batch.len() as f64;
        let sq = self.w_sq - 2.0 * eta * self.w_dot_d + eta * eta * self.d_sq;
        loss + 0.5 * obj.reg.l2 * sq.max(0.0)
    }

    pub fn direction_norm_sq(&self) -> f64 {
        self.d_sq
    }
}

/// `sign(v) max(|v| - t, 0)`
pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Proximal map of `eta * l1 |.|_1`. Identity when `l1 = 0`: the ridge term
/// lives in the smooth part.
pub fn prox(z: &[f64], eta: f64, reg: &Regularizer) -> Result<Vec<f64>> {
    let mut out = z.to_vec();
    prox_in_place(&mut out, eta, reg)?;
    Ok(out)
}

pub fn prox_in_place(z: &mut [f64], eta: f64, reg: &Regularizer) -> Result<()> {
    if !(eta > 0.0) {
        return Err(Error::InvalidArgument(format!("prox step must be positive, got {eta}")));
    }
    if reg.l1 > 0.0 {
        let t = eta * reg.l1;
        z.iter_mut().for_each(|v| *v = soft_threshold(*v, t));
    }
    Ok(())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|v| v.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::parse_libsvm_str;

    fn toy() -> Dataset {
        parse_libsvm_str("+1 1:1 2:2\n-1 1:0.5 3:-1\n+1 2:-1 3:0.25\n-1 1:-2").unwrap()
    }

    #[test]
    fn logistic_gradient_at_zero_is_half_negative_margin() {
        let ds = toy();
        let obj = Objective::new(LossKind::Logistic, Regularizer::default(), &ds);
        let w = vec![0.0; 3];
        for i in 0..ds.n() {
            let g = obj.component_grad(&w, i).unwrap();
            let expected = ds.row(i).scaled(-0.5 * ds.label(i));
            assert_eq!(g, expected);
        }
    }

    #[test]
    fn squared_hinge_flat_region() {
        let ds = parse_libsvm_str("+1 1:1").unwrap();
        let obj = Objective::new(LossKind::SquaredHinge, Regularizer::default(), &ds);
        assert_eq!(obj.component_grad(&[1.0], 0).unwrap().nnz(), 0);
        assert_eq!(obj.component_grad(&[3.0], 0).unwrap().nnz(), 0);
        assert!(obj.component_grad(&[0.5], 0).unwrap().nnz() == 1);
    }

    #[test]
    fn least_squares_gradient_at_zero() {
        let ds = parse_libsvm_str("+1 1:1").unwrap();
        let obj = Objective::new(LossKind::LeastSquares, Regularizer::default(), &ds);
        let g = obj.component_grad(&[0.0], 0).unwrap();
        assert_eq!(g.values(), &[-1.0]);
    }

    #[test]
    fn component_grad_index_checked() {
        let ds = toy();
        let obj = Objective::new(LossKind::Logistic, Regularizer::default(), &ds);
        assert!(matches!(
            obj.component_grad(&[0.0; 3], 4),
            Err(Error::IndexOutOfRange { index: 4, n: 4 })
        ));
    }

    #[test]
    fn batch_grad_identities_and_counting() {
        let ds = toy();
        let obj = Objective::new(LossKind::Logistic, Regularizer::ridge(0.3), &ds);
        let w = [0.2, -0.1, 0.4];
        let full = obj.full_grad(&w).unwrap();
        assert_eq!(obj.grad_evals(), 4);
        let all = obj.batch_grad(&w, &[0, 1, 2, 3]).unwrap();
        assert_eq!(full, all);

        let single = obj.batch_grad(&w, &[2]).unwrap();
        let mut expected = obj.component_grad(&w, 2).unwrap().to_dense(3);
        for (e, wj) in expected.iter_mut().zip(&w) {
            *e += 0.3 * wj;
        }
        for (a, b) in single.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(matches!(obj.batch_grad(&w, &[]), Err(Error::EmptyBatch)));
    }

    #[test]
    fn objective_values_at_zero() {
        let ds = toy();
        let w = [0.0; 3];
        let logistic = Objective::new(LossKind::Logistic, Regularizer::new(1.0, 5.0).unwrap(), &ds);
        assert!((logistic.value(&w) - std::f64::consts::LN_2).abs() < 1e-15);
        let hinge = Objective::new(LossKind::SquaredHinge, Regularizer::default(), &ds);
        assert_eq!(hinge.value(&w), 1.0);
    }

    #[test]
    fn prox_examples() {
        let reg = Regularizer::new(0.0, 0.5).unwrap();
        assert_eq!(prox(&[0.0, 2.0, -0.3], 1.0, &reg).unwrap(), vec![0.0, 1.5, 0.0]);
        assert_eq!(
            prox(&[-2.0], 0.5, &Regularizer::new(0.0, 1.0).unwrap()).unwrap(),
            vec![-1.5]
        );
        let ridge_only = Regularizer::ridge(3.0);
        assert_eq!(prox(&[0.7, -4.0], 2.0, &ridge_only).unwrap(), vec![0.7, -4.0]);
        assert!(prox(&[1.0], 0.0, &reg).is_err());
        assert!(prox(&[1.0], -1.0, &reg).is_err());
    }

    #[test]
    fn accuracy_rules() {
        let ds = parse_libsvm_str("+1 1:1\n-1 1:-1\n+1 1:2\n-1 1:-0.5\n+1 1:3").unwrap();
        let perfect = [1.0];
        assert_eq!(accuracy(&perfect, &ds).unwrap(), 1.0);
        assert_eq!(accuracy(&[-1.0], &ds).unwrap(), 0.0);
        assert_eq!(accuracy(&[0.0], &ds).unwrap(), 3.0 / 5.0);
    }

    #[test]
    fn batch_line_matches_direct_evaluation() {
        let ds = toy();
        for loss in LossKind::ALL {
            let obj = Objective::new(loss, Regularizer::ridge(0.1), &ds);
            let w = [0.3, -0.2, 0.5];
            let d = [1.0, 0.5, -0.25];
            let batch = [0, 2, 3];
            let line = obj.batch_line(&w, &d, &batch).unwrap();
            for eta in [0.0, 0.125, 1.0, 3.0] {
                let trial: Vec<f64> = w.iter().zip(&d).map(|(a, b)| a - eta * b).collect();
                let direct = obj.batch_smooth_value(&trial, &batch).unwrap();
                assert!((line.eval(eta) - direct).abs() < 1e-13, "{loss} eta={eta}");
            }
        }
    }

    #[test]
    fn stable_logistic_pieces() {
        assert!((softplus(0.0) - std::f64::consts::LN_2).abs() < 1e-16);
        assert_eq!(softplus(800.0), 800.0);
        assert!(softplus(-800.0) >= 0.0);
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
    }
}
