//! Exact quenched computations for the birth-death chain.
//!
//! Exit probabilities and exit-time moments are evaluated from the closed-form
//! difference-equation solutions, with every sum of Boltzmann weights
//! `F(j,l) = e^{S̃_j - S̃_l}` streamed through [`LogScalar`] so that potentials
//! with raw variation of hundreds of units stay finite. The general-start
//! expected-time formula subtracts two large positive quantities; when that
//! subtraction cancels more than six significant digits the tridiagonal solver
//! takes over as the production path.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{DerivedScales, PotentialView};
use crate::valleys::{RefinementChain, Side};

#[derive(Debug, Error)]
pub enum ExactError {
    #[error("bad interval: need a < x < b, got a={a}, x={x}, b={b}")]
    BadInterval { a: i64, x: i64, b: i64 },
    #[error("interval [{0}, {1}] not fully realized")]
    Unrealized(i64, i64),
    #[error("level {level} out of range (max {max})")]
    LevelOutOfRange { level: usize, max: usize },
    #[error("gamma too small for the {statement} statement: need gamma > {required}, got {got}")]
    GammaTooSmall { statement: &'static str, required: f64, got: f64 },
    #[error("q must be positive")]
    NonPositiveQ,
}

// ---------------------------------------------------------------------------
// Log-domain nonnegative reals
// ---------------------------------------------------------------------------

/// A nonnegative real stored as its natural logarithm.
///
/// `ZERO` is the additive identity and multiplicative absorber (log = -inf).
/// Addition factors out the larger exponent, so sums spanning hundreds of
/// orders of magnitude lose at most one ulp per operation.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogScalar(f64);

impl LogScalar {
    pub const ZERO: LogScalar = LogScalar(f64::NEG_INFINITY);
    pub const ONE: LogScalar = LogScalar(0.0);

    /// From a plain nonnegative value.
    pub fn from_value(v: f64) -> LogScalar {
        debug_assert!(v >= 0.0);
        LogScalar(v.ln())
    }

    /// From a logarithm directly.
    pub fn from_log(l: f64) -> LogScalar {
        LogScalar(l)
    }

    pub fn log(self) -> f64 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0.exp()
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    pub fn add(self, other: LogScalar) -> LogScalar {
        let (hi, lo) = if self.0 >= other.0 { (self.0, other.0) } else { (other.0, self.0) };
        if lo == f64::NEG_INFINITY {
            return LogScalar(hi);
        }
        LogScalar(hi + (lo - hi).exp().ln_1p())
    }

    pub fn mul(self, other: LogScalar) -> LogScalar {
        if self.is_zero() || other.is_zero() {
            return LogScalar::ZERO;
        }
        LogScalar(self.0 + other.0)
    }

    pub fn div(self, other: LogScalar) -> LogScalar {
        LogScalar(self.0 - other.0)
    }

    /// `self - other` for `self >= other`; returns ZERO on exact equality.
    pub fn sub(self, other: LogScalar) -> LogScalar {
        debug_assert!(self.0 >= other.0);
        if other.is_zero() {
            return self;
        }
        if self.0 == other.0 {
            return LogScalar::ZERO;
        }
        // a - b = e^la (1 - e^{lb-la}); the inner term is in (0,1).
        LogScalar(self.0 + (-(other.0 - self.0).exp_m1()).ln())
    }
}

impl std::ops::Add for LogScalar {
    type Output = LogScalar;
    fn add(self, rhs: LogScalar) -> LogScalar {
        LogScalar::add(self, rhs)
    }
}

impl std::ops::Mul for LogScalar {
    type Output = LogScalar;
    fn mul(self, rhs: LogScalar) -> LogScalar {
        LogScalar::mul(self, rhs)
    }
}

impl std::iter::Sum for LogScalar {
    fn sum<I: Iterator<Item = LogScalar>>(iter: I) -> LogScalar {
        iter.fold(LogScalar::ZERO, LogScalar::add)
    }
}

// ---------------------------------------------------------------------------
// Tridiagonal solvers (production fallback and test oracle)
// ---------------------------------------------------------------------------

/// Birth-death absorption systems on `{a..b}` solved by Thomas elimination.
/// Row `i` of the operator is `[-beta_i, 1, -alpha_i]`; the matrix is an
/// M-matrix, so elimination without pivoting is stable.
pub mod solver {
    use super::ExactError;
    use crate::env::PotentialView;

    fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
        let n = diag.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        c[0] = sup[0] / diag[0];
        d[0] = rhs[0] / diag[0];
        for i in 1..n {
            let m = diag[i] - sub[i] * c[i - 1];
            c[i] = if i + 1 < n { sup[i] / m } else { 0.0 };
            d[i] = (rhs[i] - sub[i] * d[i - 1]) / m;
        }
        let mut x = d;
        for i in (0..n - 1).rev() {
            let next = x[i + 1];
            x[i] -= c[i] * next;
        }
        x
    }

    fn check_interval(pot: &PotentialView, a: i64, x: i64, b: i64) -> Result<(), ExactError> {
        if !(a < x && x < b) {
            return Err(ExactError::BadInterval { a, x, b });
        }
        if !(pot.contains(a) && pot.contains(b)) {
            return Err(ExactError::Unrealized(a, b));
        }
        Ok(())
    }

    /// Probability of hitting `b` before `a` from every interior state:
    /// `h(i) = alpha_i h(i+1) + beta_i h(i-1)`, `h(a) = 0`, `h(b) = 1`.
    pub fn hit_top_probabilities(
        pot: &PotentialView,
        a: i64,
        b: i64,
    ) -> Result<Vec<f64>, ExactError> {
        check_interval(pot, a, a + 1, b)?;
        let m = (b - a - 1) as usize;
        let mut sub = vec![0.0; m];
        let mut diag = vec![1.0; m];
        let mut sup = vec![0.0; m];
        let mut rhs = vec![0.0; m];
        for (row, i) in (a + 1..b).enumerate() {
            let al = pot.alpha(i);
            let be = 1.0 - al;
            if row > 0 {
                sub[row] = -be;
            }
            if row + 1 < m {
                sup[row] = -al;
            } else {
                rhs[row] += al; // h(b) = 1
            }
            diag[row] = 1.0;
        }
        Ok(thomas(&sub, &diag, &sup, &rhs))
    }

    /// Expected two-sided exit times from every interior state:
    /// `u(i) = 1 + alpha_i u(i+1) + beta_i u(i-1)`, `u(a) = u(b) = 0`.
    pub fn expected_exit_times(
        pot: &PotentialView,
        a: i64,
        b: i64,
    ) -> Result<Vec<f64>, ExactError> {
        check_interval(pot, a, a + 1, b)?;
        let m = (b - a - 1) as usize;
        let mut sub = vec![0.0; m];
        let diag = vec![1.0; m];
        let mut sup = vec![0.0; m];
        let rhs = vec![1.0; m];
        for (row, i) in (a + 1..b).enumerate() {
            let al = pot.alpha(i);
            if row > 0 {
                sub[row] = -(1.0 - al);
            }
            if row + 1 < m {
                sup[row] = -al;
            }
        }
        Ok(thomas(&sub, &diag, &sup, &rhs))
    }

    /// Second moments of the two-sided exit time from every interior state.
    /// With `u` the expected times, `v(i) = (2u(i) - 1) + alpha v(i+1) + beta v(i-1)`.
    pub fn exit_time_second_moments(
        pot: &PotentialView,
        a: i64,
        b: i64,
    ) -> Result<Vec<f64>, ExactError> {
        let u = expected_exit_times(pot, a, b)?;
        let m = u.len();
        let mut sub = vec![0.0; m];
        let diag = vec![1.0; m];
        let mut sup = vec![0.0; m];
        let mut rhs = vec![0.0; m];
        for (row, i) in (a + 1..b).enumerate() {
            let al = pot.alpha(i);
            if row > 0 {
                sub[row] = -(1.0 - al);
            }
            if row + 1 < m {
                sup[row] = -al;
            }
            rhs[row] = 2.0 * u[row] - 1.0;
        }
        Ok(thomas(&sub, &diag, &sup, &rhs))
    }
}

// ---------------------------------------------------------------------------
// Closed-form exit computations
// ---------------------------------------------------------------------------

fn check_interior(pot: &PotentialView, a: i64, x: i64, b: i64) -> Result<(), ExactError> {
    if !(a < x && x < b) {
        return Err(ExactError::BadInterval { a, x, b });
    }
    if !(pot.contains(a) && pot.contains(b)) {
        return Err(ExactError::Unrealized(a, b));
    }
    Ok(())
}

/// Boltzmann weight `F(j, l) = e^{S_j - S_l}` as a log-domain value.
#[inline]
fn weight(pot: &PotentialView, j: i64, l: i64) -> LogScalar {
    LogScalar::from_log(pot.s_raw(j) - pot.s_raw(l))
}

/// Exit probabilities from `x` on `{a..b}`, each side computed independently
/// from its own closed form.
///
/// Returns `(p_hits_b_first, p_hits_a_first)`. The hit-`b` probability sums
/// weights anchored at the left absorber (`1 + sum_{i=a+1}^{..} F(i,a)`, the
/// leading 1 being the `i = a` term); the hit-`a` probability sums weights
/// anchored at the rightmost interior site. The two values are not derived
/// from one another — their sum is 1 only because both formulas are right.
pub fn exit_prob(
    pot: &PotentialView,
    a: i64,
    x: i64,
    b: i64,
) -> Result<(f64, f64), ExactError> {
    check_interior(pot, a, x, b)?;
    // P[T_a > T_b] = (sum_{i=a}^{x-1} F(i,a)) / (sum_{i=a}^{b-1} F(i,a)).
    let mut num_b = LogScalar::ONE;
    let mut den_b = LogScalar::ONE;
    for i in a + 1..b {
        let f = weight(pot, i, a);
        if i < x {
            num_b = num_b + f;
        }
        den_b = den_b + f;
    }
    let p_b = num_b.div(den_b).value();
    // P[T_a < T_b] = (sum_{i=x}^{b-1} F(i,b-1)) / (sum_{i=a}^{b-1} F(i,b-1)).
    let mut num_a = LogScalar::ONE;
    let mut den_a = LogScalar::ONE;
    for i in a..b - 1 {
        let f = weight(pot, i, b - 1);
        if i >= x {
            num_a = num_a + f;
        }
        den_a = den_a + f;
    }
    let p_a = num_a.div(den_a).value();
    Ok((p_b.clamp(0.0, 1.0), p_a.clamp(0.0, 1.0)))
}

/// Detailed result of an expected-exit-time evaluation.
#[derive(Debug, Clone, Copy)]
pub struct ExitTimeResult {
    pub value: f64,
    /// Decimal digits lost to cancellation in the general-start subtraction.
    pub canceled_digits: f64,
    /// True when the cancellation guard replaced the closed form with the
    /// occupation-time route.
    pub used_fallback: bool,
}

// The closed form carries ~13 significant digits before the subtraction
// (log-domain sums, not exact f64 inputs), so the guard fires once three
// digits cancel: what survives stays accurate to ~1e-9.
const CANCEL_DIGITS_LIMIT: f64 = 3.0;

struct FormulaTimes {
    /// `u_x` for `x = a+1 .. b-1`, in log domain.
    times: Vec<LogScalar>,
    /// Decimal digits canceled by the subtraction at each start.
    canceled: Vec<f64>,
}

/// Expected exit times `u_x = E_x[T_a ∧ T_b]` for all interior `x`, via the
/// closed forms, in log domain. One O(b-a) pass computes the base value at
/// `a+1` and extends it to every start with the product/remainder identity
/// `u_x = u_{a+1} (1 + sum_{j=a+1}^{x-1} F(j,a)) - sum_{j=a+1}^{x-1} G(j)`,
/// `G(j) = sum_{l=a+1}^{j} F(j,l)/alpha_l`.
fn exit_times_formula(pot: &PotentialView, a: i64, b: i64) -> FormulaTimes {
    // Base case: numerator sum_{l=a+1}^{b-1} sum_{j=l}^{b-1} F(j,l)/alpha_l
    //          = sum_j e^{S̃_j} * (prefix sum_{l<=j} e^{-S̃_l}/alpha_l),
    // denominator sum_{j=a+1}^{b-1} F(j,a) + 1.
    let mut h = LogScalar::ZERO; // running sum of e^{-S̃_l}/alpha_l
    let mut base_num = LogScalar::ZERO;
    let mut den = LogScalar::ONE;
    for j in a + 1..b {
        h = h + LogScalar::from_log(-pot.s_raw(j) - pot.alpha(j).ln());
        base_num = base_num + LogScalar::from_log(pot.s_raw(j)).mul(h);
        den = den + weight(pot, j, a);
    }
    let base = base_num.div(den); // E_{a+1}[T_a ∧ T_b]

    let cap = (b - a - 1) as usize;
    let mut times = Vec::with_capacity(cap);
    let mut canceled = Vec::with_capacity(cap);
    let mut grow = LogScalar::ONE; // 1 + prefix of F(j,a)
    let mut gsum = LogScalar::ZERO; // prefix of G(j)
    let mut hp = LogScalar::ZERO; // prefix of e^{-S̃_l}/alpha_l for G
    for x in a + 1..b {
        let big = base.mul(grow);
        // Total loss: rounding can push the subtrahend past the minuend.
        let (diff, lost) = if gsum.is_zero() {
            (big, 0.0)
        } else if big.log() <= gsum.log() {
            (LogScalar::from_log(f64::NAN), f64::INFINITY)
        } else {
            let d = big.sub(gsum);
            (d, (big.log() - d.log()) / std::f64::consts::LN_10)
        };
        canceled.push(lost);
        times.push(diff);
        // Advance prefixes to include j = x.
        grow = grow + weight(pot, x, a);
        hp = hp + LogScalar::from_log(-pot.s_raw(x) - pot.alpha(x).ln());
        gsum = gsum + LogScalar::from_log(pot.s_raw(x)).mul(hp);
    }
    FormulaTimes { times, canceled }
}

/// Expected exit times from every interior start via occupation times:
/// `u_x = sum_l E_x[visits to l before absorption]`, with
/// `E_x[visits to l] = P_x[hit l first] / P_l[escape before returning]`.
/// Every factor is a ratio of positive sums, so no cancellation occurs at
/// any start; this is the production path once the closed form degrades.
fn exit_times_occupation(pot: &PotentialView, a: i64, b: i64) -> Vec<LogScalar> {
    let m = (b - a - 1) as usize;
    let at = |p: i64| (p - a - 1) as usize;
    // A(p) = sum_{j=a}^{p-1} e^{S_j}, B(p) = sum_{j=p}^{b-1} e^{S_j}.
    let mut below = vec![LogScalar::ZERO; m];
    let mut acc = LogScalar::from_log(pot.s_raw(a));
    for p in a + 1..b {
        below[at(p)] = acc;
        acc = acc + LogScalar::from_log(pot.s_raw(p));
    }
    let mut above = vec![LogScalar::ZERO; m];
    let mut acc = LogScalar::from_log(pot.s_raw(b - 1));
    for p in (a + 1..b).rev() {
        above[at(p)] = acc;
        if p > a + 1 {
            acc = acc + LogScalar::from_log(pot.s_raw(p - 1));
        }
    }
    // Expected visits to l from l: inverse of the one-shot escape rate.
    let visits: Vec<LogScalar> = (a + 1..b)
        .map(|l| {
            let alpha = pot.alpha(l);
            let up = LogScalar::from_log(alpha.ln() + pot.s_raw(l)).div(above[at(l)]);
            let down =
                LogScalar::from_log((1.0 - alpha).ln() + pot.s_raw(l - 1)).div(below[at(l)]);
            LogScalar::ONE.div(up + down)
        })
        .collect();
    // u_x = B(x) sum_{l<x} visits_l/B(l) + visits_x + A(x) sum_{l>x} visits_l/A(l).
    let mut out = vec![LogScalar::ZERO; m];
    let mut pre = LogScalar::ZERO;
    for x in a + 1..b {
        out[at(x)] = above[at(x)].mul(pre) + visits[at(x)];
        pre = pre + visits[at(x)].div(above[at(x)]);
    }
    let mut post = LogScalar::ZERO;
    for x in (a + 1..b).rev() {
        out[at(x)] = out[at(x)] + below[at(x)].mul(post);
        post = post + visits[at(x)].div(below[at(x)]);
    }
    out
}

/// `E_x[T_a ∧ T_b]` evaluated as written, with automatic fallback to the
/// occupation-time route on catastrophic cancellation.
pub fn expected_exit_time_detailed(
    pot: &PotentialView,
    a: i64,
    x: i64,
    b: i64,
) -> Result<ExitTimeResult, ExactError> {
    check_interior(pot, a, x, b)?;
    let formula = exit_times_formula(pot, a, b);
    let idx = (x - a - 1) as usize;
    let u = formula.times[idx];
    let canceled = formula.canceled[idx];
    if u.log().is_nan() || canceled > CANCEL_DIGITS_LIMIT {
        let green = exit_times_occupation(pot, a, b);
        return Ok(ExitTimeResult {
            value: green[idx].value(),
            canceled_digits: canceled,
            used_fallback: true,
        });
    }
    Ok(ExitTimeResult { value: u.value(), canceled_digits: canceled, used_fallback: false })
}

/// Expected two-sided exit time from `x` on `{a..b}`.
pub fn expected_exit_time(pot: &PotentialView, a: i64, x: i64, b: i64) -> Result<f64, ExactError> {
    Ok(expected_exit_time_detailed(pot, a, x, b)?.value)
}

/// Second moment of the exit time started adjacent to `bottom`.
///
/// Right side: start `bottom+1`, absorb at `{bottom, top+1}`; left side is the
/// mirror image. The interior expected times `u_l` are evaluated exactly from
/// the closed forms (falling back to the solver under cancellation), never
/// from an upper bound.
pub fn second_moment_exit_adjacent(
    pot: &PotentialView,
    bottom: i64,
    top: i64,
    side: Side,
) -> Result<f64, ExactError> {
    match side {
        Side::Right => {
            if top < bottom + 1 {
                return Err(ExactError::BadInterval { a: bottom, x: bottom + 1, b: top + 1 });
            }
            second_moment_right(pot, bottom, top)
        }
        Side::Left => {
            if top > bottom - 1 {
                return Err(ExactError::BadInterval { a: top - 1, x: bottom - 1, b: bottom });
            }
            second_moment_left(pot, bottom, top)
        }
    }
}

fn interior_times(
    pot: &PotentialView,
    a: i64,
    b: i64,
) -> Result<Vec<LogScalar>, ExactError> {
    let formula = exit_times_formula(pot, a, b);
    let degraded = formula.canceled.iter().any(|c| *c > CANCEL_DIGITS_LIMIT)
        || formula.times.iter().any(|t| t.log().is_nan());
    if degraded {
        return Ok(exit_times_occupation(pot, a, b));
    }
    Ok(formula.times)
}

fn second_moment_right(pot: &PotentialView, bottom: i64, top: i64) -> Result<f64, ExactError> {
    if !(pot.contains(bottom) && pot.contains(top + 1)) {
        return Err(ExactError::Unrealized(bottom, top + 1));
    }
    let u = interior_times(pot, bottom, top + 1)?;
    // Green's-function form with source g_l = 2u_l - 1:
    //   numerator   sum_{l=bottom+1}^{top} (g_l/alpha_l) sum_{j=l}^{top} F(j,l),
    //   denominator sum_{j=bottom}^{top} F(j,bottom).
    let mut suffix = LogScalar::ZERO; // sum_{j=l}^{top} e^{S_j}
    let mut num = LogScalar::ZERO;
    let mut den = LogScalar::ONE;
    for l in (bottom + 1..=top).rev() {
        suffix = suffix + LogScalar::from_log(pot.s_raw(l));
        let ul = u[(l - bottom - 1) as usize];
        let two_u_minus_one = ul.mul(LogScalar::from_value(2.0)).sub(LogScalar::ONE);
        let coeff = two_u_minus_one.div(LogScalar::from_value(pot.alpha(l)));
        num = num + coeff.mul(suffix).mul(LogScalar::from_log(-pot.s_raw(l)));
        den = den + weight(pot, l, bottom);
    }
    Ok(num.div(den).value())
}

fn second_moment_left(pot: &PotentialView, bottom: i64, top: i64) -> Result<f64, ExactError> {
    if !(pot.contains(bottom) && pot.contains(top - 1)) {
        return Err(ExactError::Unrealized(top - 1, bottom));
    }
    let u = interior_times(pot, top - 1, bottom)?;
    // Reflection p -> -p maps this to the right-side form with alpha and beta
    // swapped; unwinding the reflected prefixes gives weights
    //   F'(j,l) = e^{S_{j-1} - S_{l-1}}, j from top up to l,
    //   denominator sum_{j=top}^{bottom} e^{S_{j-1} - S_{bottom-1}}.
    let mut prefix = LogScalar::ZERO; // sum_{j=top}^{l} e^{S_{j-1}}
    let mut num = LogScalar::ZERO;
    let mut den = LogScalar::ZERO;
    for l in top..=bottom - 1 {
        prefix = prefix + LogScalar::from_log(pot.s_raw(l - 1));
        let ul = u[(l - top) as usize];
        let two_u_minus_one = ul.mul(LogScalar::from_value(2.0)).sub(LogScalar::ONE);
        let beta = 1.0 - pot.alpha(l);
        let coeff = two_u_minus_one.div(LogScalar::from_value(beta));
        num = num + coeff.mul(prefix).mul(LogScalar::from_log(-pot.s_raw(l - 1)));
    }
    for j in top..=bottom {
        den = den + LogScalar::from_log(pot.s_raw(j - 1) - pot.s_raw(bottom - 1));
    }
    Ok(num.div(den).value())
}

// ---------------------------------------------------------------------------
// Computable bound evaluators
// ---------------------------------------------------------------------------

/// Inputs for the return-time tail bound at one refinement level.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TailBoundInputs {
    pub level: usize,
    pub side: Side,
    /// `|M_i - m_0|^5 (max 1/alpha)^2` (with beta on the left side).
    pub d_i: f64,
    /// Drop of the next nested refinement, `delta_{i+1,i+1}`.
    pub delta_next: f64,
    /// Crest gap `eta_{i,i+1}`.
    pub eta_gap: f64,
    /// `delta_{i,0}` — height of level-i crest above the bottom.
    pub delta_i0: f64,
}

impl TailBoundInputs {
    /// Extracts the level-`i` inputs from a refinement chain. Levels run from
    /// 0 (outermost) to `r` (innermost); at the innermost level the chain's
    /// one-past-the-end refinement supplies `delta_{r+1,r+1}` and `eta_{r,r+1}`.
    pub fn from_chain(
        pot: &PotentialView,
        chain: &RefinementChain,
        side: Side,
        level: usize,
    ) -> Result<Self, ExactError> {
        let r = chain.levels(side);
        if level > r {
            return Err(ExactError::LevelOutOfRange { level, max: r });
        }
        let bottom = chain.bottom();
        let crest = chain.crest(side, level);
        let inv_extreme = match side {
            Side::Right => {
                let mut m = 0.0f64;
                for l in bottom..=crest {
                    m = m.max(1.0 / pot.alpha(l));
                }
                m
            }
            Side::Left => {
                let mut m = 0.0f64;
                for l in crest..=bottom {
                    m = m.max(1.0 / (1.0 - pot.alpha(l)));
                }
                m
            }
        };
        let width = (crest - bottom).abs() as f64;
        let d_i = width.powi(5) * inv_extreme * inv_extreme;
        let (delta_next, eta_gap) = chain.next_level_gaps(pot, side, level);
        Ok(TailBoundInputs {
            level,
            side,
            d_i,
            delta_next,
            eta_gap,
            delta_i0: chain.delta(pot, side, level, 0),
        })
    }
}

/// Return-time tail bound at level `i`:
/// `D_i n^{(delta_{i+1,i+1} - eta_{i,i+1}) ∨ 0} q^{-2} + n^{-delta_{i,0}}`.
/// The value is a bound, not a probability; it may exceed 1.
pub fn return_tail_bound(inputs: &TailBoundInputs, log_n: f64, q: f64) -> Result<f64, ExactError> {
    if q <= 0.0 {
        return Err(ExactError::NonPositiveQ);
    }
    let exponent = (inputs.delta_next - inputs.eta_gap).max(0.0);
    let main = inputs.d_i * (exponent * log_n).exp() / (q * q);
    let floor = (-inputs.delta_i0 * log_n).exp();
    Ok(main + floor)
}

/// The three computable quantities from the two quantitative statements.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TheoremBounds {
    /// Bound on the probability of ever leaving the basic valley in `n` steps.
    pub containment_bound: f64,
    /// Bound on the probability of ending outside the localization window.
    pub localization_bound: f64,
    /// Half-width of the localization window in `X_n / log²n` units.
    pub neighborhood_half_width: f64,
}

/// `2 log₂n / (σ² (log n)^{γ-2})`, valid for γ > 2 (strict).
pub fn containment_bound(scales: &DerivedScales) -> Result<f64, ExactError> {
    if scales.gamma <= 2.0 {
        return Err(ExactError::GammaTooSmall {
            statement: "containment",
            required: 2.0,
            got: scales.gamma,
        });
    }
    Ok(2.0 * scales.log2_n / (scales.sigma2 * scales.log_n.powf(scales.gamma - 2.0)))
}

/// `(bound, half_width)` for the localization statement, valid for γ > γ₀.
pub fn localization_bound(scales: &DerivedScales) -> Result<(f64, f64), ExactError> {
    if scales.gamma <= scales.gamma0 {
        return Err(ExactError::GammaTooSmall {
            statement: "localization",
            required: scales.gamma0,
            got: scales.gamma,
        });
    }
    let sigma10 = scales.sigma2.powf(5.0);
    let bound = 4.0 * scales.log2_n.powf(4.5)
        / (sigma10 * (scales.gamma * scales.log_n).powf(scales.gamma - scales.gamma0));
    let half_width =
        scales.big_gamma * scales.gamma * scales.log2_n.powf(4.5) / scales.log_n.sqrt();
    Ok((bound, half_width))
}

/// Both statements' numbers at once; requires γ admissible for each.
pub fn theorem_bounds(scales: &DerivedScales) -> Result<TheoremBounds, ExactError> {
    let containment = containment_bound(scales)?;
    let (localization, half_width) = localization_bound(scales)?;
    Ok(TheoremBounds {
        containment_bound: containment,
        localization_bound: localization,
        neighborhood_half_width: half_width,
    })
}
