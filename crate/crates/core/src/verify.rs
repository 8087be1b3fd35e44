//! Computable pieces of the convergence analysis: the mini-batch variance
//! factor `alpha(b)`, smoothness / strong-convexity constants, an exact
//! variance-bound check by batch enumeration, and the linear-rate constants
//! `C` of the four SAAG-IV rate statements.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};

use crate::dataset::BatchSchedule;
use crate::error::{Error, Result};
use crate::estimators::{saag2_direction, SnapState, ENUMERATION_CAP};
use crate::objective::{norm_sq, Objective};
use crate::solvers::{smoothness_bound, ReferenceOptimum};

/// `alpha(b) = (n - b) / (b (n - 1))` as an exact rational.
pub fn alpha_b_exact(n: usize, b: usize) -> Result<BigRational> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("alpha(b) needs n >= 2, got {n}")));
    }
    if b == 0 || b > n {
        return Err(Error::InvalidArgument(format!(
            "alpha(b) needs 1 <= b <= n (b = {b}, n = {n})"
        )));
    }
    Ok(BigRational::new(
        BigInt::from(n - b),
        BigInt::from(b) * BigInt::from(n - 1),
    ))
}

pub fn alpha_b(n: usize, b: usize) -> Result<f64> {
    Ok(to_f64(&alpha_b_exact(n, b)?))
}

fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

fn exact(v: f64, what: &str) -> Result<BigRational> {
    BigRational::from_float(v).ok_or_else(|| Error::InvalidArgument(format!("{what} must be finite, got {v}")))
}

/// Smoothness constant `L` of every component `f_i` and strong-convexity
/// constant `mu` of `f`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProblemConstants {
    pub lipschitz: f64,
    pub strong_convexity: f64,
}

/// `L = c_loss max_i |x_i|^2 + l2` with `c_loss` = 1/4 (logistic),
/// 2 (squared hinge), 1 (least squares); `mu = l2`.
pub fn estimate_constants(obj: &Objective) -> ProblemConstants {
    ProblemConstants {
        lipschitz: smoothness_bound(obj),
        strong_convexity: obj.reg().l2,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VarianceBoundReport {
    /// Exact `E_B |d_B - grad f(w)|^2` over the schedule's batches.
    pub lhs: f64,
    pub rhs: f64,
    /// `max_B |grad f_B(w*)|^2`
    pub r: f64,
    /// `2 (m-1)^2 / m^2 * r`
    pub r_prime: f64,
    pub alpha: f64,
    pub m: usize,
    pub gap_w: f64,
    pub gap_snap: f64,
    /// Batches of unequal size; the bound assumes `n = m b`.
    pub ragged: bool,
    pub pass: bool,
}

impl fmt::Display for VarianceBoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "lhs = {:.6e} {} rhs = {:.6e} (R' = {:.3e}, alpha = {:.4}, m = {}{})",
            self.lhs,
            if self.pass { "<=" } else { ">" },
            self.rhs,
            self.r_prime,
            self.alpha,
            self.m,
            if self.ragged { ", ragged batches" } else { "" }
        )
    }
}

/// Checks
/// `E|d - grad f(w)|^2 <= 8 L alpha [F(w) - F*] + 8 L (alpha m^2 + (m-1)^2)/m^2 [F(w~) - F*] + R'`
/// for the SAAG-II/IV direction `d` with snap point `snap_point`, the
/// expectation taken exactly over the batches of `schedule`. With `l1 = 0`
/// this is the smooth form (`F = f`).
pub fn variance_bound_check(
    obj: &Objective,
    w: &[f64],
    snap_point: &[f64],
    schedule: &BatchSchedule,
    constants: &ProblemConstants,
    reference: &ReferenceOptimum,
) -> Result<VarianceBoundReport> {
    let n = obj.n();
    if n > ENUMERATION_CAP {
        return Err(Error::TooLargeToEnumerate {
            n,
            cap: ENUMERATION_CAP,
        });
    }
    if schedule.n() != n {
        return Err(Error::InvalidArgument(format!(
            "schedule covers {} points, dataset has {n}",
            schedule.n()
        )));
    }
    if reference.w.len() != obj.d() {
        return Err(Error::InvalidArgument(
            "reference optimum has the wrong dimension".into(),
        ));
    }
    let m = schedule.m();
    let mf = m as f64;
    let alpha = alpha_b(n, schedule.b())?;
    let l = constants.lipschitz;

    let grad = obj.full_grad(w)?;
    let snap = SnapState::new(obj, snap_point, 0)?;
    let mut lhs = 0.0;
    let mut r = 0.0f64;
    for batch in schedule.batches() {
        let d = saag2_direction(obj, w, batch, &snap)?;
        let dev: f64 = d.iter().zip(&grad).map(|(a, b)| (a - b) * (a - b)).sum();
        lhs += dev / mf;
        r = r.max(norm_sq(&obj.batch_grad(&reference.w, batch)?));
    }
    let r_prime = 2.0 * (mf - 1.0).powi(2) / (mf * mf) * r;
    let gap_w = (obj.value(w) - reference.value).max(0.0);
    let gap_snap = (obj.value(snap_point) - reference.value).max(0.0);
    let rhs =
        8.0 * l * alpha * gap_w + 8.0 * l * (alpha * mf * mf + (mf - 1.0).powi(2)) / (mf * mf) * gap_snap + r_prime;
    Ok(VarianceBoundReport {
        lhs,
        rhs,
        r,
        r_prime,
        alpha,
        m,
        gap_w,
        gap_snap,
        ragged: !schedule.is_uniform(),
        pass: lhs <= rhs,
    })
}

/// Which rate statement to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Theorem {
    /// Smooth regularizer, no strong convexity.
    SmoothConvex = 1,
    /// Smooth regularizer, strongly convex.
    SmoothStronglyConvex = 2,
    /// Non-smooth regularizer, no strong convexity.
    NonSmoothConvex = 3,
    /// Non-smooth regularizer, strongly convex.
    NonSmoothStronglyConvex = 4,
}

impl Theorem {
    pub const ALL: [Theorem; 4] = [
        Theorem::SmoothConvex,
        Theorem::SmoothStronglyConvex,
        Theorem::NonSmoothConvex,
        Theorem::NonSmoothStronglyConvex,
    ];

    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn from_number(k: u8) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.number() == k)
            .ok_or_else(|| Error::InvalidArgument(format!("theorem must be 1..4, got {k}")))
    }

    pub fn needs_strong_convexity(self) -> bool {
        matches!(self, Theorem::SmoothStronglyConvex | Theorem::NonSmoothStronglyConvex)
    }
}

/// Analysis constants. `beta` is the free constant of the rate proofs, not
/// the line-search shrink factor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateParams {
    pub beta: f64,
    pub c: f64,
    pub m: usize,
    pub b: usize,
    pub n: usize,
}

impl RateParams {
    /// `m = ceil(n / b)`.
    pub fn for_dataset(n: usize, b: usize, beta: f64, c: f64) -> Self {
        Self {
            beta,
            c,
            m: n.div_ceil(b.max(1)),
            b,
            n,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateReport {
    pub theorem: Theorem,
    pub c_exact: BigRational,
    pub c: f64,
    pub contraction: bool,
    pub params: RateParams,
    pub notes: Vec<String>,
}

impl fmt::Display for RateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "theorem {}: C = {:.12} ({}) beta = {} c = {} m = {} b = {} n = {}",
            self.theorem.number(),
            self.c,
            if self.contraction {
                "contraction"
            } else {
                "no contraction"
            },
            self.params.beta,
            self.params.c,
            self.params.m,
            self.params.b,
            self.params.n
        )?;
        for note in &self.notes {
            write!(f, "; {note}")?;
        }
        Ok(())
    }
}

fn int(v: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

fn positive(q: &BigRational, what: &str) -> Result<()> {
    if q.is_positive() {
        Ok(())
    } else {
        Err(Error::Regime(format!("{what} must be positive, got {}", to_f64(q))))
    }
}

/// Evaluates the rate constant `C` in exact rational arithmetic (inputs are
/// converted from `f64` exactly). `contraction` is `C < 1`.
pub fn theoretical_rate(theorem: Theorem, params: &RateParams, constants: &ProblemConstants) -> Result<RateReport> {
    let RateParams { beta, c, m, b, n } = *params;
    if m == 0 {
        return Err(Error::InvalidArgument("m must be >= 1".into()));
    }
    let alpha = alpha_b_exact(n, b)?;
    let beta_q = exact(beta, "beta")?;
    let c_q = exact(c, "c")?;
    positive(&c_q, "c")?;
    let m_q = int(m);
    let m_sq = &m_q * &m_q;
    let one = BigRational::one();
    let four = int(4);
    let m1 = &m_q - &one;
    let m1_sq = &m1 * &m1;
    // (alpha m^2 + (m-1)^2) / m^2
    let mixed = (&alpha * &m_sq + &m1_sq) / &m_sq;

    let value = match theorem {
        Theorem::SmoothConvex | Theorem::NonSmoothConvex => {
            let den = &beta_q - &one - &four * &alpha;
            positive(&den, "beta - 1 - 4 alpha(b)")?;
            &four * &alpha / &den * &c_q / &m_q + &four * &mixed / &den
        }
        Theorem::SmoothStronglyConvex | Theorem::NonSmoothStronglyConvex => {
            let bm1 = &beta_q - &one;
            positive(&bm1, "beta - 1")?;
            let l_q = exact(constants.lipschitz, "L")?;
            let mu_q = exact(constants.strong_convexity, "mu")?;
            positive(&mu_q, "mu")?;
            let lead = &c_q * &l_q * &beta_q / (&m_q * &mu_q);
            let a_over = &four * &alpha / &bm1;
            let den = &one - &a_over - &c_q * &m1 / &m_sq + &c_q * &a_over / &m_q;
            let num = if theorem == Theorem::SmoothStronglyConvex {
                &lead + &four * &mixed / &bm1 - &c_q * &m1 / &m_sq + &a_over
            } else {
                &lead + &c_q * &a_over / &m_q - &c_q * &m1 / &m_sq + &four * &mixed / &bm1
            };
            positive(&den, "contraction denominator")?;
            num / den
        }
    };

    let mut notes = Vec::new();
    if n != m * b {
        notes.push(format!(
            "n = {n} is not m*b = {}; constants assume equal batches",
            m * b
        ));
    }
    if c >= m as f64 {
        notes.push(format!("c = {c} is not small relative to m = {m}"));
    }
    notes.push("residual V: iterates reach a neighbourhood whose radius scales with R = max_B |grad f_B(w*)|^2".into());
    let c_f = to_f64(&value);
    Ok(RateReport {
        theorem,
        contraction: value < one,
        c_exact: value,
        c: c_f,
        params: *params,
        notes,
    })
}

/// Smallest `C` over a log grid of `points` values of beta in `[1.01, 1e4]`;
/// invalid regimes are skipped. `None` when no grid point is valid.
pub fn best_beta(
    theorem: Theorem,
    params: &RateParams,
    constants: &ProblemConstants,
    points: usize,
) -> Option<RateReport> {
    let (lo, hi) = (1.01f64.ln(), 1e4f64.ln());
    let points = points.max(2);
    (0..points)
        .filter_map(|k| {
            let beta = (lo + (hi - lo) * k as f64 / (points - 1) as f64).exp();
            theoretical_rate(theorem, &RateParams { beta, ..*params }, constants).ok()
        })
        .min_by(|a, b| a.c_exact.cmp(&b.c_exact))
}
