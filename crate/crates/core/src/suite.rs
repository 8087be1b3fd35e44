//! Self-checks run by `saag verify`: estimator bias and unbiasedness by batch
//! enumeration, variance bounds, prox and gradient oracles, rate constants.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::{make_schedule, synthetic, Dataset, SyntheticSpec};
use crate::error::Result;
use crate::estimators::{
    estimator_mean_bruteforce_scaled, EstimatorKind, EstimatorState, SnapScaling, SnapState, ENUMERATION_CAP,
};
use crate::objective::{soft_threshold, LossKind, Objective, Regularizer};
use crate::solvers::reference_optimum;
use crate::verify::{
    estimate_constants, theoretical_rate, variance_bound_check, ProblemConstants, RateParams, Theorem,
};

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Dataset sizes for the enumeration suites.
    pub sizes: Vec<usize>,
    pub batch_sizes: Vec<usize>,
    /// Random `(w, w~)` pairs per configuration.
    pub pairs: usize,
    /// Samples for the variance-bound suite.
    pub variance_samples: usize,
    pub prox_trials: usize,
    pub fd_trials: usize,
    /// Scaling of the SAAG-II snap term; `PerBatch` is a deliberate mutation.
    pub snap_scaling: SnapScaling,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            seed: 2024,
            sizes: vec![4, 6, 8],
            batch_sizes: vec![1, 2],
            pairs: 20,
            variance_samples: 50,
            prox_trials: 1000,
            fd_trials: 5,
            snap_scaling: SnapScaling::PerDataset,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CheckStatus {
    Passed,
    Failed,
    Skipped(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub status: CheckStatus,
    pub cases: usize,
    /// Largest error, or largest lhs/rhs ratio for inequality checks.
    pub worst: f64,
    pub tolerance: f64,
    /// First few failing cases.
    pub failures: Vec<String>,
}

impl CheckOutcome {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            status: CheckStatus::Passed,
            cases: 0,
            worst: 0.0,
            tolerance,
            failures: Vec::new(),
        }
    }

    fn skipped(name: &'static str, why: String) -> Self {
        Self {
            status: CheckStatus::Skipped(why),
            ..Self::new(name, 0.0)
        }
    }

    fn record(&mut self, err: f64, describe: impl FnOnce() -> String) {
        self.cases += 1;
        if err.is_nan() || err > self.worst {
            self.worst = err;
        }
        if !(err <= self.tolerance) {
            self.status = CheckStatus::Failed;
            if self.failures.len() < 5 {
                self.failures.push(describe());
            }
        }
    }

    fn fail(&mut self, why: String) {
        self.status = CheckStatus::Failed;
        self.failures.push(why);
    }

    pub fn passed(&self) -> bool {
        !matches!(self.status, CheckStatus::Failed)
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.status {
            CheckStatus::Skipped(why) => write!(f, "SKIP {:<18} {why}", self.name),
            status => {
                let tag = if *status == CheckStatus::Passed { "PASS" } else { "FAIL" };
                write!(
                    f,
                    "{tag} {:<18} cases = {:<5} worst = {:.3e} (tol {:.1e})",
                    self.name, self.cases, self.worst, self.tolerance
                )?;
                for case in &self.failures {
                    write!(f, "\n       {case}")?;
                }
                Ok(())
            }
        }
    }
}

fn gaussian(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

fn toy(n: usize, d: usize, seed: u64) -> Result<Dataset> {
    synthetic(&SyntheticSpec {
        n,
        d,
        separability: 1.5,
        flip: 0.1,
        seed,
    })
}

fn norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn enumeration_sizes(opts: &SuiteOptions) -> std::result::Result<(), String> {
    match opts.sizes.iter().find(|&&n| n > ENUMERATION_CAP) {
        Some(n) => Err(format!("n = {n} exceeds the enumeration cap of {ENUMERATION_CAP}")),
        None => Ok(()),
    }
}

/// Mean SAAG-II direction over a uniform partition equals
/// `grad f(w) + ((m-1)/m) grad f(w~)`.
pub fn check_bias_identity(opts: &SuiteOptions) -> Result<CheckOutcome> {
    check_snap_mean(opts, "bias-identity", EstimatorKind::Saag2)
}

/// Mean SVRG direction equals `grad f(w)`.
pub fn check_unbiasedness(opts: &SuiteOptions) -> Result<CheckOutcome> {
    check_snap_mean(opts, "unbiasedness", EstimatorKind::Svrg)
}

fn check_snap_mean(opts: &SuiteOptions, name: &'static str, kind: EstimatorKind) -> Result<CheckOutcome> {
    if let Err(why) = enumeration_sizes(opts) {
        return Ok(CheckOutcome::skipped(name, why));
    }
    let mut out = CheckOutcome::new(name, 1e-10);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for &n in &opts.sizes {
        let ds = toy(n, 3, opts.seed ^ n as u64)?;
        let obj = Objective::new(LossKind::Logistic, Regularizer::ridge(1e-2), &ds);
        for &b in opts.batch_sizes.iter().filter(|&&b| b <= n && n % b == 0) {
            let schedule = make_schedule(n, b, rng.random())?;
            let m = schedule.m() as f64;
            for _ in 0..opts.pairs {
                let w = gaussian(&mut rng, 3, 1.0);
                let snap_w = gaussian(&mut rng, 3, 1.0);
                let snap = SnapState::new(&obj, &snap_w, 0)?;
                let mean = estimator_mean_bruteforce_scaled(
                    kind,
                    &obj,
                    &w,
                    EstimatorState::Snap(&snap),
                    &schedule,
                    opts.snap_scaling,
                )?;
                let mut expected = obj.full_grad(&w)?;
                if kind == EstimatorKind::Saag2 {
                    for (e, g) in expected.iter_mut().zip(snap.full_grad_at_snap()) {
                        *e += (m - 1.0) / m * g;
                    }
                }
                let err = norm_diff(&mean, &expected);
                out.record(err, || format!("n = {n}, b = {b}: |mean - expected| = {err:.3e}"));
            }
        }
    }
    Ok(out)
}

/// Variance bound on `n = 6, b = 2` for the smooth (logistic + ℓ2) and the
/// elastic-net objective. `worst` is the largest `lhs / rhs`.
pub fn check_variance_bound(opts: &SuiteOptions) -> Result<CheckOutcome> {
    let name = "variance-bound";
    if let Err(why) = enumeration_sizes(opts) {
        return Ok(CheckOutcome::skipped(name, why));
    }
    let mut out = CheckOutcome::new(name, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(1));
    let ds = toy(6, 3, opts.seed)?;
    let schedule = make_schedule(6, 2, opts.seed)?;
    for reg in [Regularizer::ridge(1e-2), Regularizer::new(1e-2, 5e-2)?] {
        let obj = Objective::new(LossKind::Logistic, reg, &ds);
        let constants = estimate_constants(&obj);
        let reference = reference_optimum(&obj, 500)?;
        for _ in 0..opts.variance_samples {
            let w = gaussian(&mut rng, 3, 1.0);
            let snap_w = gaussian(&mut rng, 3, 1.0);
            let rep = variance_bound_check(&obj, &w, &snap_w, &schedule, &constants, &reference)?;
            let ratio = rep.lhs / rep.rhs;
            out.record(ratio, || format!("l1 = {}: {rep}", reg.l1));
        }
        // at the optimum only R' remains on the right
        let w = reference.w.clone();
        let rep = variance_bound_check(&obj, &w, &w, &schedule, &constants, &reference)?;
        out.record(rep.lhs / rep.rhs, || format!("l1 = {} at w*: {rep}", reg.l1));
    }
    Ok(out)
}

/// Root of the monotone subgradient of `(w - z)^2 / (2 eta) + l1 |w|` by bisection.
pub fn prox_by_bisection(z: f64, eta: f64, l1: f64) -> f64 {
    // right derivative; non-decreasing in w
    let slope = |w: f64| (w - z) / eta + if w >= 0.0 { l1 } else { -l1 };
    let (mut lo, mut hi) = (-z.abs() - 1.0, z.abs() + 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()).max(1e-300) {
            break;
        }
    }
    let mid = 0.5 * (lo + hi);
    // the minimizer sits exactly at the kink when 0 lies in the subdifferential there
    if (-z / eta - l1) <= 0.0 && (-z / eta + l1) >= 0.0 {
        0.0
    } else {
        mid
    }
}

pub fn check_prox(opts: &SuiteOptions) -> CheckOutcome {
    let mut out = CheckOutcome::new("prox-oracle", 1e-8);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(2));
    for _ in 0..opts.prox_trials {
        let z = 4.0 * rng.sample::<f64, _>(StandardNormal);
        let eta = 10f64.powf(rng.random_range(-2.0..1.0));
        let l1 = 10f64.powf(rng.random_range(-3.0..1.0));
        let got = soft_threshold(z, eta * l1);
        let want = prox_by_bisection(z, eta, l1);
        let err = (got - want).abs();
        out.record(err, || format!("z = {z}, eta = {eta}, l1 = {l1}: {got} vs {want}"));
    }
    out
}

/// Analytic full gradient against central differences (h = 1e-6) on random
/// 5x4 problems. Error per coordinate is `|a - b| / max(|a|, |b|, 1e-4)`.
pub fn check_gradients(opts: &SuiteOptions) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new("gradient-fd", 1e-5);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(3));
    for trial in 0..opts.fd_trials {
        let ds = toy(5, 4, opts.seed.wrapping_add(100 + trial as u64))?;
        for loss in LossKind::ALL {
            let obj = Objective::new(loss, Regularizer::ridge(0.1), &ds);
            let w = gaussian(&mut rng, 4, 0.5);
            let g = obj.full_grad(&w)?;
            let fd = central_difference(|x| obj.smooth_value(x), &w, 1e-6);
            for (j, (a, b)) in g.iter().zip(&fd).enumerate() {
                let err = (a - b).abs() / a.abs().max(b.abs()).max(1e-4);
                out.record(err, || format!("{loss} coord {j}: analytic {a} vs fd {b}"));
            }
        }
    }
    Ok(out)
}

pub fn central_difference(f: impl Fn(&[f64]) -> f64, w: &[f64], h: f64) -> Vec<f64> {
    let mut x = w.to_vec();
    (0..w.len())
        .map(|j| {
            x[j] = w[j] + h;
            let up = f(&x);
            x[j] = w[j] - h;
            let down = f(&x);
            x[j] = w[j];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Smooth-convex rate constant at `(n, b, m, c, beta) = (1000, 10, 100, 1, 10)`
/// against a direct floating-point evaluation, plus the regime guard.
pub fn check_rate_constants() -> CheckOutcome {
    let mut out = CheckOutcome::new("rate-constants", 1e-12);
    let constants = ProblemConstants {
        lipschitz: 1.0,
        strong_convexity: 0.0,
    };
    let params = RateParams {
        beta: 10.0,
        c: 1.0,
        m: 100,
        b: 10,
        n: 1000,
    };
    match theoretical_rate(Theorem::SmoothConvex, &params, &constants) {
        Ok(rep) => {
            let alpha = 990.0 / 9990.0;
            let (m, c, beta) = (100.0f64, 1.0, 10.0);
            let den = beta - 1.0 - 4.0 * alpha;
            let direct = 4.0 * alpha / den * c / m + 4.0 * (alpha * m * m + (m - 1.0).powi(2)) / (m * m * den);
            let err = (rep.c - direct).abs();
            out.record(err, || format!("exact {} vs direct {direct}", rep.c));
            if !rep.contraction {
                out.fail(format!("expected contraction, C = {}", rep.c));
            }
        }
        Err(e) => out.fail(e.to_string()),
    }
    let bad = RateParams { beta: 1.3, ..params };
    if theoretical_rate(Theorem::SmoothConvex, &bad, &constants).is_ok() {
        out.fail("beta = 1.3 <= 1 + 4 alpha(b) was accepted".into());
    }
    out
}

/// Runs every suite. Enumeration suites are skipped (with a notice) when a
/// requested size exceeds the cap.
pub fn run_suite(opts: &SuiteOptions) -> Result<Vec<CheckOutcome>> {
    Ok(vec![
        check_bias_identity(opts)?,
        check_unbiasedness(opts)?,
        check_variance_bound(opts)?,
        check_prox(opts),
        check_gradients(opts)?,
        check_rate_constants(),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_prox_known_values() {
        assert!((prox_by_bisection(2.0, 1.0, 0.5) - 1.5).abs() < 1e-14);
        assert_eq!(prox_by_bisection(-0.3, 1.0, 0.5), 0.0);
        assert_eq!(prox_by_bisection(0.0, 2.0, 0.1), 0.0);
    }

    #[test]
    fn default_suite_passes() {
        for outcome in run_suite(&SuiteOptions::default()).unwrap() {
            assert!(outcome.passed(), "{outcome}");
            assert!(outcome.cases > 0, "{outcome}");
        }
    }

    #[test]
    fn wrong_snap_scaling_breaks_bias_identity() {
        let opts = SuiteOptions {
            snap_scaling: SnapScaling::PerBatch,
            pairs: 3,
            ..SuiteOptions::default()
        };
        assert_eq!(check_bias_identity(&opts).unwrap().status, CheckStatus::Failed);
    }

    #[test]
    fn oversized_enumeration_is_skipped() {
        let opts = SuiteOptions {
            sizes: vec![100],
            ..SuiteOptions::default()
        };
        let out = check_bias_identity(&opts).unwrap();
        assert!(matches!(out.status, CheckStatus::Skipped(_)));
        assert!(out.passed());
    }
}
