//! Stochastic backtracking-Armijo line search on the current mini-batch.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SbasParams {
    /// Sufficient-decrease constant.
    pub alpha: f64,
    /// Backtracking factor.
    pub shrink: f64,
    /// First trial step.
    pub eta0: f64,
    /// Number of trial steps.
    pub max_backtracks: usize,
}

impl Default for SbasParams {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            shrink: 0.5,
            eta0: 1.0,
            max_backtracks: 10,
        }
    }
}

impl SbasParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha > 0.0
            && self.alpha < 1.0
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.eta0 > 0.0
            && self.eta0.is_finite()
            && self.max_backtracks >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "line search needs 0 < alpha < 1, 0 < shrink < 1, eta0 > 0, max_backtracks >= 1 (got {self:?})"
            )))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepBranch {
    /// Sufficient decrease held.
    Armijo,
    /// Fallback: the last trial failed Armijo but still decreased `f_B`.
    Decrease,
    /// No acceptable step; `eta = 0` and the update is skipped.
    Rejected,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SbasOutcome {
    pub eta: f64,
    pub branch: StepBranch,
    /// Calls of the batch objective, including the one at `eta = 0`.
    pub evals: usize,
}

/// Line search over `phi(eta) = f_B(w - eta d)` where `|d|^2 = d_norm_sq`.
///
/// Trials `eta0 * shrink^j` for `j = 0..max_backtracks` are tested against
/// `phi(eta) <= phi(0) - alpha eta |d|^2`; the first hit is returned. If none
/// passes, the final trial is returned when it strictly decreases `phi`,
/// otherwise 0. At most `max_backtracks + 1` evaluations of `phi`.
pub fn sbas_line(params: &SbasParams, d_norm_sq: f64, mut phi: impl FnMut(f64) -> f64) -> SbasOutcome {
    let f0 = phi(0.0);
    let mut evals = 1;
    let mut eta = params.eta0;
    let mut last = f64::NAN;
    for j in 0..params.max_backtracks {
        if j > 0 {
            eta *= params.shrink;
        }
        last = phi(eta);
        evals += 1;
        if last <= f0 - params.alpha * eta * d_norm_sq {
            return SbasOutcome {
                eta,
                branch: StepBranch::Armijo,
                evals,
            };
        }
    }
    if last < f0 {
        SbasOutcome {
            eta,
            branch: StepBranch::Decrease,
            evals,
        }
    } else {
        SbasOutcome {
            eta: 0.0,
            branch: StepBranch::Rejected,
            evals,
        }
    }
}

/// Line search on an arbitrary batch objective `f_b` at `w` along `-direction`.
pub fn sbas(params: &SbasParams, mut f_b: impl FnMut(&[f64]) -> f64, w: &[f64], direction: &[f64]) -> SbasOutcome {
    let d_norm_sq: f64 = direction.iter().map(|v| v * v).sum();
    let mut trial = w.to_vec();
    sbas_line(params, d_norm_sq, |eta| {
        for ((t, wj), dj) in trial.iter_mut().zip(w).zip(direction) {
            *t = wj - eta * dj;
        }
        f_b(&trial)
    })
}
