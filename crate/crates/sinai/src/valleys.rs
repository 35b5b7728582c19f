//! Valleys of the normalized potential: refinement, the basic valley around
//! the origin, ordered chopping, inner barriers, and level-crossing times.
//!
//! All extrema are taken over lattice points; the linear interpolation used to
//! state the definitions on the real line attains its extrema at integers, so
//! nothing is lost. Whenever a minimizer or a refinement pair is not unique,
//! the index with the smallest absolute value wins (minimizer first, then
//! maximizer), with the smaller index as the final tie-break.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{DerivedScales, PotentialView};

#[derive(Debug, Error)]
pub enum ValleyError {
    #[error("empty segment [{0}, {1}]")]
    EmptySegment(i64, i64),
    #[error("no qualifying valley in the realized window")]
    NotFound,
    #[error("window exhausted at {0}")]
    WindowExhausted(i64),
    #[error("valley too narrow for chopping: side width {width} < cutoff {cutoff}")]
    ValleyTooNarrow { width: f64, cutoff: f64 },
    #[error("level {level} out of range (max {max})")]
    LevelOutOfRange { level: usize, max: usize },
}

/// Which flank of a valley an operation applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Right,
    Left,
}

/// Outcome of a level-crossing scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reach {
    /// Crossed after `m` steps from the start.
    Crossed(i64),
    /// The realized window ran out before the level was crossed.
    NotReached,
}

/// Scan cap for unbounded (constant) environments, where the window itself
/// never runs out.
const UNBOUNDED_SCAN_CAP: i64 = 1 << 26;

/// First `m > 0` with `S^n(from + dir*m) - S^n(from) >= a`.
pub fn stopping_time_up(pot: &PotentialView, a: f64, from: i64, dir: i8) -> Reach {
    let base = pot.s_raw(from);
    let threshold = a * pot.log_n();
    let step = dir as i64;
    let mut pos = from;
    for m in 1..=UNBOUNDED_SCAN_CAP {
        pos += step;
        if !pot.contains(pos) {
            return Reach::NotReached;
        }
        if pot.s_raw(pos) - base >= threshold {
            return Reach::Crossed(m);
        }
    }
    Reach::NotReached
}

/// First `m > 0` with `S^n(from + dir*m) - S^n(from) <= -a`.
pub fn stopping_time_down(pot: &PotentialView, a: f64, from: i64, dir: i8) -> Reach {
    let base = pot.s_raw(from);
    let threshold = -a * pot.log_n();
    let step = dir as i64;
    let mut pos = from;
    for m in 1..=UNBOUNDED_SCAN_CAP {
        pos += step;
        if !pot.contains(pos) {
            return Reach::NotReached;
        }
        if pot.s_raw(pos) - base <= threshold {
            return Reach::Crossed(m);
        }
    }
    Reach::NotReached
}

// ---------------------------------------------------------------------------
// Refinement
// ---------------------------------------------------------------------------

/// The ordered pair of maximal potential drop inside a segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinementPair {
    pub maximizer: i64,
    pub minimizer: i64,
    /// Normalized drop `S^n(maximizer) - S^n(minimizer)`, always >= 0.
    pub drop: f64,
}

/// Tie-break key: smallest |index| first, then the smaller index.
#[inline]
fn abs_key(i: i64) -> (i64, i64) {
    (i.abs(), i)
}

/// Right refinement maximizes `S(t') - S(t'')` over `lo <= t' <= t'' <= hi`
/// (maximizer before minimizer); left refinement mirrors it, maximizing the
/// rise with the minimizer first. Ties prefer the smallest |minimizer|, then
/// the smallest |maximizer|, then the smaller index.
///
/// Ties are decided on the rounded drop values, exactly as an exhaustive
/// pair enumeration would see them: for a fixed minimizer the best rounded
/// drop is attained by the running extremum, but maximizers one ulp below it
/// can round to the same drop, so a second pass re-scans the winning
/// minimizer's side for the tie-minimal maximizer.
pub fn refine(
    pot: &PotentialView,
    lo: i64,
    hi: i64,
    side: Side,
) -> Result<RefinementPair, ValleyError> {
    if lo >= hi {
        return Err(ValleyError::EmptySegment(lo, hi));
    }
    let (best_drop, minimizer) = match side {
        Side::Right => {
            let mut running = f64::NEG_INFINITY;
            let mut best: Option<(f64, i64)> = None;
            for t in lo..=hi {
                let s = pot.s_raw(t);
                running = running.max(s);
                let drop = running - s;
                let better = match &best {
                    None => true,
                    Some((d, mi)) => drop > *d || (drop == *d && abs_key(t) < abs_key(*mi)),
                };
                if better {
                    best = Some((drop, t));
                }
            }
            best.unwrap()
        }
        Side::Left => {
            let mut running = f64::NEG_INFINITY;
            let mut best: Option<(f64, i64)> = None;
            for t in (lo..=hi).rev() {
                let s = pot.s_raw(t);
                running = running.max(s);
                let rise = running - s;
                let better = match &best {
                    None => true,
                    Some((d, mi)) => rise > *d || (rise == *d && abs_key(t) < abs_key(*mi)),
                };
                if better {
                    best = Some((rise, t));
                }
            }
            best.unwrap()
        }
    };
    let s_min = pot.s_raw(minimizer);
    let range = match side {
        Side::Right => lo..=minimizer,
        Side::Left => minimizer..=hi,
    };
    let mut maximizer = None;
    for j in range {
        if pot.s_raw(j) - s_min == best_drop {
            let better = match maximizer {
                None => true,
                Some(m) => abs_key(j) < abs_key(m),
            };
            if better {
                maximizer = Some(j);
            }
        }
    }
    let maximizer = maximizer.expect("the running extremum attains the winning drop");
    Ok(RefinementPair { maximizer, minimizer, drop: best_drop / pot.log_n() })
}

// ---------------------------------------------------------------------------
// Valleys
// ---------------------------------------------------------------------------

/// A valley `{m_left, bottom, m_right}` of the normalized potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Valley {
    pub m_left: i64,
    pub bottom: i64,
    pub m_right: i64,
    /// `min` of the two flank heights above the bottom, normalized.
    pub depth: f64,
}

/// Argmin of the raw potential over `[lo, hi]`, smallest |index| on ties.
fn argmin_abs(pot: &PotentialView, lo: i64, hi: i64) -> i64 {
    let mut best = lo;
    let mut best_val = pot.s_raw(lo);
    for k in lo + 1..=hi {
        let s = pot.s_raw(k);
        if s < best_val || (s == best_val && abs_key(k) < abs_key(best)) {
            best = k;
            best_val = s;
        }
    }
    best
}

fn max_over(pot: &PotentialView, lo: i64, hi: i64) -> f64 {
    let mut m = f64::NEG_INFINITY;
    for k in lo..=hi {
        m = m.max(pot.s_raw(k));
    }
    m
}

/// Depth of `{lo, m, hi}` in normalized units.
pub fn valley_depth(pot: &PotentialView, lo: i64, m: i64, hi: i64) -> f64 {
    let bottom = pot.s_raw(m);
    ((pot.s_raw(lo) - bottom) / pot.log_n()).min((pot.s_raw(hi) - bottom) / pot.log_n())
}

/// Margin of the side-dominance condition for a valley containing 0:
/// for `m > 0` the left edge must top the running maximum on `[0, m]` by
/// `gamma(n)`, for `m < 0` the right edge must top the maximum on `[m, 0]`.
/// `None` when `m == 0` (no condition). Both endpoints are included in the
/// inner maximum.
pub fn side_dominance_margin(pot: &PotentialView, lo: i64, m: i64, hi: i64) -> Option<f64> {
    if m == 0 {
        return None;
    }
    let margin = if m > 0 {
        (pot.s_raw(lo) - max_over(pot, 0, m)) / pot.log_n()
    } else {
        (pot.s_raw(hi) - max_over(pot, m, 0)) / pot.log_n()
    };
    Some(margin)
}

/// Checks the three defining clauses of a "valley containing 0 of depth
/// larger than 1 + gamma(n)".
fn qualifies(pot: &PotentialView, scales: &DerivedScales, lo: i64, m: i64, hi: i64) -> bool {
    if !(lo <= 0 && 0 <= hi) {
        return false;
    }
    if valley_depth(pot, lo, m, hi) < 1.0 + scales.gamma_n {
        return false;
    }
    match side_dominance_margin(pot, lo, m, hi) {
        Some(margin) => margin >= scales.gamma_n,
        None => true,
    }
}

/// Checks that the triplet is a valley: both edges attain the flank maxima
/// and the bottom attains the minimum.
fn is_valley(pot: &PotentialView, lo: i64, m: i64, hi: i64) -> bool {
    if !(lo <= m && m <= hi) {
        return false;
    }
    let s_lo = pot.s_raw(lo);
    let s_hi = pot.s_raw(hi);
    let s_m = pot.s_raw(m);
    for k in lo..=m {
        if pot.s_raw(k) > s_lo {
            return false;
        }
    }
    for k in m..=hi {
        if pot.s_raw(k) > s_hi {
            return false;
        }
    }
    for k in lo..=hi {
        if pot.s_raw(k) < s_m {
            return false;
        }
    }
    true
}

/// Locates the basic valley around the origin at horizon `n`.
///
/// The search crosses level `1 + gamma(n)` on each side of 0, takes the
/// enclosed minimizer, shrinks by refinement while a strictly smaller
/// sub-valley still satisfies all three qualifying clauses, and finally
/// recomputes the edges from the bottom by the one-sided first-crossing
/// rules (with the extra dominance condition on the side containing 0).
pub fn find_basic_valley(
    pot: &PotentialView,
    scales: &DerivedScales,
) -> Result<Valley, ValleyError> {
    let level = 1.0 + scales.gamma_n;
    let hi = match stopping_time_up(pot, level, 0, 1) {
        Reach::Crossed(m) => m,
        Reach::NotReached => return Err(ValleyError::WindowExhausted(pot.window().1)),
    };
    let lo = match stopping_time_up(pot, level, 0, -1) {
        Reach::Crossed(m) => -m,
        Reach::NotReached => return Err(ValleyError::WindowExhausted(pot.window().0)),
    };
    let mut cur = (lo, argmin_abs(pot, lo, hi), hi);
    if !qualifies(pot, scales, cur.0, cur.1, cur.2) {
        // The natural candidate fails the dominance clause; no basic valley.
        return Err(ValleyError::NotFound);
    }

    // Shrink toward the smallest qualifying valley.
    loop {
        let (c_lo, c_m, c_hi) = cur;
        let mut candidates: Vec<(i64, i64)> = Vec::with_capacity(4);
        if let Ok(rp) = refine(pot, c_m, c_hi, Side::Right) {
            candidates.push((c_lo, rp.maximizer));
            candidates.push((rp.maximizer, c_hi));
        }
        if let Ok(lp) = refine(pot, c_lo, c_m, Side::Left) {
            candidates.push((c_lo, lp.maximizer));
            candidates.push((lp.maximizer, c_hi));
        }
        let mut next: Option<(f64, (i64, i64, i64))> = None;
        for (s_lo, s_hi) in candidates {
            if s_lo < c_lo || s_hi > c_hi || (s_lo == c_lo && s_hi == c_hi) || s_lo >= s_hi {
                continue;
            }
            let m = argmin_abs(pot, s_lo, s_hi);
            if !is_valley(pot, s_lo, m, s_hi) || !qualifies(pot, scales, s_lo, m, s_hi) {
                continue;
            }
            let depth = valley_depth(pot, s_lo, m, s_hi);
            if next.as_ref().map_or(true, |(d, _)| depth > *d) {
                next = Some((depth, (s_lo, m, s_hi)));
            }
        }
        match next {
            Some((_, triple)) => cur = triple,
            None => break,
        }
    }
    let bottom = cur.1;

    // Edges from the bottom by the one-sided crossing rules.
    let s_bottom = pot.s_raw(bottom);
    let need = level * pot.log_n();
    let gamma_raw = scales.gamma_n * pot.log_n();
    let (win_lo, win_hi) = pot.window();

    let m_right = if bottom >= 0 {
        // No extra condition on the right when the bottom is nonnegative
        // (the m=0 case has none on either side).
        let mut found = None;
        for l in bottom + 1..=win_hi {
            if pot.s_raw(l) - s_bottom >= need {
                found = Some(l);
                break;
            }
        }
        found.ok_or(ValleyError::WindowExhausted(win_hi))?
    } else {
        let inner_max = max_over(pot, bottom, 0);
        let mut found = None;
        for l in 0..=win_hi {
            if l <= bottom {
                continue;
            }
            if pot.s_raw(l) - s_bottom >= need && pot.s_raw(l) - inner_max >= gamma_raw {
                found = Some(l);
                break;
            }
        }
        found.ok_or(ValleyError::WindowExhausted(win_hi))?
    };

    let m_left = if bottom <= 0 {
        let start = bottom.min(0) - 1;
        let mut found = None;
        let mut l = start;
        while l >= win_lo {
            if pot.s_raw(l) - s_bottom >= need {
                found = Some(l);
                break;
            }
            l -= 1;
        }
        found.ok_or(ValleyError::WindowExhausted(win_lo))?
    } else {
        let inner_max = max_over(pot, 0, bottom);
        let mut found = None;
        let mut l = 0;
        while l >= win_lo {
            if pot.s_raw(l) - s_bottom >= need && pot.s_raw(l) - inner_max >= gamma_raw {
                found = Some(l);
                break;
            }
            l -= 1;
        }
        found.ok_or(ValleyError::WindowExhausted(win_lo))?
    };

    Ok(Valley {
        m_left,
        bottom,
        m_right,
        depth: valley_depth(pot, m_left, bottom, m_right),
    })
}

/// Valley search with geometric window growth (x2 per retry, up to `cap`
/// sites per side). Returns the environment that finally contained the
/// valley together with the valley itself. Non-extendable environments get a
/// single attempt on their own window.
pub fn find_basic_valley_auto(
    env: &crate::env::Environment,
    scales: &DerivedScales,
    cap: i64,
) -> Result<(crate::env::Environment, Valley), ValleyError> {
    let extendable = env.spec().is_some();
    let mut current = env.clone();
    let mut half = {
        let (lo, hi) = env.window();
        if env.is_unbounded() { 1024 } else { hi.max(-lo).max(1024) }
    };
    loop {
        let pot = PotentialView::new(&current, scales.n)
            .map_err(|_| ValleyError::WindowExhausted(half))?;
        match find_basic_valley(&pot, scales) {
            Ok(v) => return Ok((current, v)),
            Err(ValleyError::WindowExhausted(_)) => {
                if !extendable || half >= cap {
                    return Err(ValleyError::WindowExhausted(half));
                }
                half = (half * 2).min(cap);
                current =
                    env.extended(-half, half).map_err(|_| ValleyError::WindowExhausted(half))?;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Default window-growth cap for valley searches.
pub const DEFAULT_WINDOW_CAP: i64 = 1 << 26;

// ---------------------------------------------------------------------------
// Ordered chopping
// ---------------------------------------------------------------------------

/// Maximizer/minimizer sets from iterated refinements of a basic valley.
///
/// On the right, `crest[0]` is the valley edge and each further crest comes
/// from a right refinement of the segment between the bottom and the previous
/// crest, until a crest lands within the cutoff distance of the bottom.
/// The left side mirrors this. `pit[0]` is the bottom itself on both sides.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefinementChain {
    bottom: i64,
    right_crests: Vec<i64>,
    right_pits: Vec<i64>,
    left_crests: Vec<i64>,
    left_pits: Vec<i64>,
    /// One refinement past the last level, when the segment still admits one.
    extra_right: Option<(i64, i64)>,
    extra_left: Option<(i64, i64)>,
    /// Set when the loop stopped because refinement could no longer make
    /// progress before reaching the cutoff.
    pub truncated_right: bool,
    pub truncated_left: bool,
}

impl RefinementChain {
    pub fn bottom(&self) -> i64 {
        self.bottom
    }

    /// Number of refinement levels `r` (right) or `r'` (left).
    pub fn levels(&self, side: Side) -> usize {
        match side {
            Side::Right => self.right_crests.len() - 1,
            Side::Left => self.left_crests.len() - 1,
        }
    }

    pub fn crest(&self, side: Side, i: usize) -> i64 {
        match side {
            Side::Right => self.right_crests[i],
            Side::Left => self.left_crests[i],
        }
    }

    pub fn pit(&self, side: Side, j: usize) -> i64 {
        match side {
            Side::Right => self.right_pits[j],
            Side::Left => self.left_pits[j],
        }
    }

    /// `delta_{i,j} = S^n(crest_i) - S^n(pit_j)`.
    pub fn delta(&self, pot: &PotentialView, side: Side, i: usize, j: usize) -> f64 {
        pot.sn_drop(self.crest(side, i), self.pit(side, j))
    }

    /// `eta_{i,j} = S^n(crest_i) - S^n(crest_j)`.
    pub fn eta(&self, pot: &PotentialView, side: Side, i: usize, j: usize) -> f64 {
        pot.sn_drop(self.crest(side, i), self.crest(side, j))
    }

    /// `mu_{i,j} = S^n(pit_i) - S^n(pit_j)`.
    pub fn mu(&self, pot: &PotentialView, side: Side, i: usize, j: usize) -> f64 {
        pot.sn_drop(self.pit(side, i), self.pit(side, j))
    }

    /// `(delta_{i+1,i+1}, eta_{i,i+1})`, drawing on the one-past-the-end
    /// refinement at the innermost level; both 0 when no refinement exists.
    pub fn next_level_gaps(&self, pot: &PotentialView, side: Side, i: usize) -> (f64, f64) {
        let r = self.levels(side);
        if i < r {
            (self.delta(pot, side, i + 1, i + 1), self.eta(pot, side, i, i + 1))
        } else {
            let extra = match side {
                Side::Right => self.extra_right,
                Side::Left => self.extra_left,
            };
            match extra {
                Some((ma, mi)) => (
                    pot.sn_drop(ma, mi),
                    pot.sn_drop(self.crest(side, r), ma),
                ),
                None => (0.0, 0.0),
            }
        }
    }
}

/// JSON-facing dump of one chain flank: index lists plus the full gap
/// matrices `delta[i][j]`, `eta[i][j]`, `mu[i][j]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainSideReport {
    pub levels: usize,
    pub crests: Vec<i64>,
    pub pits: Vec<i64>,
    pub truncated: bool,
    pub delta: Vec<Vec<f64>>,
    pub eta: Vec<Vec<f64>>,
    pub mu: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainReport {
    pub bottom: i64,
    pub right: ChainSideReport,
    pub left: ChainSideReport,
}

impl ChainReport {
    pub fn build(pot: &PotentialView, chain: &RefinementChain) -> ChainReport {
        let side_report = |side: Side| {
            let r = chain.levels(side);
            let square = |f: &dyn Fn(usize, usize) -> f64| -> Vec<Vec<f64>> {
                (0..=r).map(|i| (0..=r).map(|j| f(i, j)).collect()).collect()
            };
            ChainSideReport {
                levels: r,
                crests: (0..=r).map(|i| chain.crest(side, i)).collect(),
                pits: (0..=r).map(|j| chain.pit(side, j)).collect(),
                truncated: match side {
                    Side::Right => chain.truncated_right,
                    Side::Left => chain.truncated_left,
                },
                delta: square(&|i, j| chain.delta(pot, side, i, j)),
                eta: square(&|i, j| chain.eta(pot, side, i, j)),
                mu: square(&|i, j| chain.mu(pot, side, i, j)),
            }
        };
        ChainReport {
            bottom: chain.bottom(),
            right: side_report(Side::Right),
            left: side_report(Side::Left),
        }
    }
}

fn chop_side(
    pot: &PotentialView,
    bottom: i64,
    edge: i64,
    side: Side,
    cutoff: f64,
) -> (Vec<i64>, Vec<i64>, Option<(i64, i64)>, bool) {
    let mut crests = vec![edge];
    let mut pits = vec![bottom];
    let mut truncated = false;
    let dist = |crest: i64| (crest - bottom).abs() as f64;
    while dist(*crests.last().unwrap()) > cutoff {
        match next_refinement(pot, bottom, *crests.last().unwrap(), side) {
            Some((ma, mi)) => {
                crests.push(ma);
                pits.push(mi);
            }
            None => {
                truncated = true;
                break;
            }
        }
    }
    let extra = next_refinement(pot, bottom, *crests.last().unwrap(), side);
    (crests, pits, extra, truncated)
}

/// One refinement of the segment between the bottom and the current crest,
/// requiring strict progress and a positive drop.
fn next_refinement(
    pot: &PotentialView,
    bottom: i64,
    crest: i64,
    side: Side,
) -> Option<(i64, i64)> {
    let (lo, hi) = match side {
        Side::Right => (bottom, crest),
        Side::Left => (crest, bottom),
    };
    if lo >= hi {
        return None;
    }
    let rp = refine(pot, lo, hi, side).ok()?;
    if rp.drop <= 0.0 {
        return None;
    }
    match side {
        Side::Right => {
            if rp.maximizer <= bottom || rp.maximizer >= crest {
                return None;
            }
        }
        Side::Left => {
            if rp.maximizer >= bottom || rp.maximizer <= crest {
                return None;
            }
        }
    }
    Some((rp.maximizer, rp.minimizer))
}

/// Ordered chopping with an explicit cutoff distance (in sites). Levels are
/// added while the innermost crest is farther than `cutoff` from the bottom;
/// a side whose edge is already within the cutoff keeps zero levels.
pub fn chop_with_cutoff(
    pot: &PotentialView,
    valley: &Valley,
    cutoff: f64,
) -> RefinementChain {
    let (rc, rp, re, rt) = chop_side(pot, valley.bottom, valley.m_right, Side::Right, cutoff);
    let (lc, lp, le, lt) = chop_side(pot, valley.bottom, valley.m_left, Side::Left, cutoff);
    let chain = RefinementChain {
        bottom: valley.bottom,
        right_crests: rc,
        right_pits: rp,
        left_crests: lc,
        left_pits: lp,
        extra_right: re,
        extra_left: le,
        truncated_right: rt,
        truncated_left: lt,
    };
    debug_assert!(chain_invariants_hold(pot, &chain));
    chain
}

// Descent is non-strict and gaps are checked to roundoff only: on
// lattice-valued increments, nested drops can tie bitwise (the outer winner
// lost on the |index| rule alone), and a tie at the rounded-drop level can
// crown a maximizer sitting one ulp under the running maximum. Continuous
// site laws stay strict in practice.
fn chain_invariants_hold(pot: &PotentialView, chain: &RefinementChain) -> bool {
    let slack = 1e-12;
    for side in [Side::Right, Side::Left] {
        let r = chain.levels(side);
        for i in 0..r {
            if chain.delta(pot, side, i, i) < chain.delta(pot, side, i + 1, i + 1) - slack {
                return false;
            }
            if chain.eta(pot, side, i, i + 1) < -slack {
                return false;
            }
        }
        if r > 0 && chain.delta(pot, side, r, r) < -slack {
            return false;
        }
    }
    true
}

/// Ordered chopping at the canonical cutoff `l_n b_n`. Errors when either
/// flank is narrower than the cutoff, which is the expected outcome for any
/// simulatable horizon; `chop_with_cutoff` serves explicit-cutoff studies
/// and zero-level chains.
pub fn ordered_chopping(
    pot: &PotentialView,
    valley: &Valley,
    scales: &DerivedScales,
) -> Result<RefinementChain, ValleyError> {
    let cutoff = scales.chop_cutoff();
    let right_width = (valley.m_right - valley.bottom) as f64;
    let left_width = (valley.bottom - valley.m_left) as f64;
    if right_width < cutoff || left_width < cutoff {
        return Err(ValleyError::ValleyTooNarrow {
            width: right_width.min(left_width),
            cutoff,
        });
    }
    Ok(chop_with_cutoff(pot, valley, cutoff))
}

// ---------------------------------------------------------------------------
// Inner barriers
// ---------------------------------------------------------------------------

/// First sites on each side of the bottom whose potential tops the bottom by
/// the barrier threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnerBarrier {
    pub m_less: i64,
    pub m_greater: i64,
}

/// Barrier points at an explicit normalized threshold.
pub fn inner_barrier_at(
    pot: &PotentialView,
    bottom: i64,
    threshold: f64,
) -> Result<InnerBarrier, ValleyError> {
    let base = pot.s_raw(bottom);
    let need = threshold * pot.log_n();
    let (win_lo, win_hi) = pot.window();
    let mut m_less = None;
    let mut l = bottom - 1;
    while l >= win_lo {
        if pot.s_raw(l) - base >= need {
            m_less = Some(l);
            break;
        }
        l -= 1;
    }
    let m_less = m_less.ok_or(ValleyError::WindowExhausted(win_lo))?;
    let mut m_greater = None;
    for l in bottom + 1..=win_hi {
        if pot.s_raw(l) - base >= need {
            m_greater = Some(l);
            break;
        }
    }
    let m_greater = m_greater.ok_or(ValleyError::WindowExhausted(win_hi))?;
    Ok(InnerBarrier { m_less, m_greater })
}

/// Barrier points at the canonical threshold `log(q_n (log n)^gamma) / log n`.
pub fn inner_barrier(
    pot: &PotentialView,
    bottom: i64,
    scales: &DerivedScales,
) -> Result<InnerBarrier, ValleyError> {
    inner_barrier_at(pot, bottom, scales.barrier_threshold())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{derived_scales, DistSpec, Environment, PotentialView};
    use crate::rng::SplitMix64;

    /// Environment whose normalized potential takes the given values at
    /// `lo..=hi` (value at the origin must be 0). Increments are uniform:
    /// `eps_i = (h_i - h_{i-1}) log n`; the increment at `lo` is unused by
    /// the potential and set to 0.
    fn env_from_heights(lo: i64, heights: &[f64], log_n: f64) -> Environment {
        let hi = lo + heights.len() as i64 - 1;
        assert!(lo <= 0 && hi >= 0);
        let h = |k: i64| heights[(k - lo) as usize] * log_n;
        let alphas: Vec<f64> = (lo..=hi)
            .map(|i| {
                let e = if i == lo { 0.0 } else { h(i) - h(i - 1) };
                1.0 / (1.0 + e.exp())
            })
            .collect();
        Environment::from_profile(lo, alphas).unwrap()
    }

    #[test]
    fn heights_round_trip() {
        let heights = vec![1.0, 0.4, 0.0, 0.3, 0.9, 0.2];
        let env = env_from_heights(-2, &heights, (1e6f64).ln());
        let pot = PotentialView::new(&env, 1e6).unwrap();
        for (k, h) in (-2i64..=3).zip(&heights) {
            assert!((pot.sn(k) - h).abs() < 1e-9, "site {k}: {} vs {h}", pot.sn(k));
        }
    }

    #[test]
    fn stopping_time_on_flat_and_ramp() {
        let flat = Environment::constant(0.5).unwrap();
        let pot = PotentialView::new(&flat, 1e6).unwrap();
        // Unbounded flat window never crosses; bound the scan with a finite
        // profile instead.
        let finite = Environment::from_profile(-50, vec![0.5; 101]).unwrap();
        let fpot = PotentialView::new(&finite, 1e6).unwrap();
        assert_eq!(stopping_time_up(&fpot, 0.1, 0, 1), Reach::NotReached);
        drop(pot);

        // Deterministic ramp: eps = +c everywhere.
        let c = 0.5f64;
        let alphas = vec![1.0 / (1.0 + c.exp()); 41];
        let ramp = Environment::from_profile(-20, alphas).unwrap();
        let rpot = PotentialView::new(&ramp, 1e6).unwrap();
        let a = 3.0 * c / rpot.log_n();
        assert_eq!(stopping_time_up(&rpot, a, 0, 1), Reach::Crossed(3));
    }

    #[test]
    fn stopping_time_linear_scan_oracle() {
        let spec = DistSpec::TwoPoint { p: 0.3 };
        for seed in 0..20u64 {
            let env = Environment::sample(&spec, seed, -400, 400).unwrap();
            let pot = PotentialView::new(&env, 1e4).unwrap();
            let a = 0.35;
            if let Reach::Crossed(m) = stopping_time_up(&pot, a, 0, 1) {
                assert!(pot.sn(m) >= a);
                for j in 1..m {
                    assert!(pot.sn(j) < a);
                }
            }
            if let Reach::Crossed(m) = stopping_time_down(&pot, a, 0, 1) {
                assert!(pot.sn(m) <= -a);
                for j in 1..m {
                    assert!(pot.sn(j) > -a);
                }
            }
        }
    }

    /// O(len^2) reference refinement with the documented tie rule.
    fn brute_refine(pot: &PotentialView, lo: i64, hi: i64, side: Side) -> RefinementPair {
        let mut best: Option<(f64, i64, i64)> = None; // (drop, minimizer, maximizer)
        for t1 in lo..=hi {
            for t2 in t1..=hi {
                let (ma, mi, drop) = match side {
                    Side::Right => (t1, t2, pot.s_raw(t1) - pot.s_raw(t2)),
                    Side::Left => (t2, t1, pot.s_raw(t2) - pot.s_raw(t1)),
                };
                let better = match &best {
                    None => true,
                    Some((d, bmi, bma)) => {
                        drop > *d
                            || (drop == *d
                                && (abs_key(mi), abs_key(ma)) < (abs_key(*bmi), abs_key(*bma)))
                    }
                };
                if better {
                    best = Some((drop, mi, ma));
                }
            }
        }
        let (drop, minimizer, maximizer) = best.unwrap();
        RefinementPair { maximizer, minimizer, drop: drop / pot.log_n() }
    }

    #[test]
    fn refine_known_segment() {
        // Heights on [0..6]: right refinement drops from index 3 (S = 3) to
        // index 6 (S = 0). Modest horizon keeps the site probabilities away
        // from saturation so the heights are hit exactly.
        let n = 100.0f64;
        let heights = vec![0.0, 2.0, 1.0, 3.0, 0.5, 2.5, 0.0];
        let env = env_from_heights(0, &heights, n.ln());
        let pot = PotentialView::new(&env, n).unwrap();
        let rp = refine(&pot, 0, 6, Side::Right).unwrap();
        assert_eq!((rp.maximizer, rp.minimizer), (3, 6));
        assert!((rp.drop - 3.0).abs() < 1e-9, "drop {}", rp.drop);
    }

    #[test]
    fn refine_monotone_and_single_step() {
        let log_n = (1e6f64).ln();
        // Monotone increasing: no descent; zero-drop pair under the tie rule.
        let env = env_from_heights(0, &[0.0, 0.5, 1.0, 1.5], log_n);
        let pot = PotentialView::new(&env, 1e6).unwrap();
        let rp = refine(&pot, 0, 3, Side::Right).unwrap();
        assert_eq!(rp.drop, 0.0);
        assert_eq!(rp, brute_refine(&pot, 0, 3, Side::Right));

        // Single-step segment with a negative increment.
        let env2 = env_from_heights(0, &[0.0, -0.7], log_n);
        let pot2 = PotentialView::new(&env2, 1e6).unwrap();
        let rp2 = refine(&pot2, 0, 1, Side::Right).unwrap();
        assert_eq!((rp2.maximizer, rp2.minimizer), (0, 1));
        assert!((rp2.drop - 0.7).abs() < 1e-9);
    }

    #[test]
    fn refine_matches_brute_force() {
        let spec = DistSpec::TwoPoint { p: 0.3 };
        let mut rng = SplitMix64::new(7);
        for seed in 0..300u64 {
            let env = Environment::sample(&spec, seed, -250, 250).unwrap();
            let pot = PotentialView::new(&env, 1e6).unwrap();
            let len = 2 + (rng.next_u64() % 199) as i64;
            let lo = -200 + (rng.next_u64() % 200) as i64;
            let hi = lo + len;
            for side in [Side::Right, Side::Left] {
                let fast = refine(&pot, lo, hi, side).unwrap();
                let slow = brute_refine(&pot, lo, hi, side);
                assert_eq!(
                    (fast.maximizer, fast.minimizer),
                    (slow.maximizer, slow.minimizer),
                    "seed {seed} [{lo},{hi}] {side:?}"
                );
            }
        }
    }

    #[test]
    fn refine_rejects_empty_segment() {
        let env = Environment::constant(0.4).unwrap();
        let pot = PotentialView::new(&env, 1e6).unwrap();
        assert!(matches!(refine(&pot, 5, 5, Side::Right), Err(ValleyError::EmptySegment(_, _))));
    }

    #[test]
    fn basic_valley_on_deterministic_w_shape() {
        let n = 1e6f64;
        let scales = derived_scales(n, 3.0, 1.0, 0.5).unwrap();
        let g = scales.gamma_n;
        let d = 1.0 + 2.0 * g;
        // Down-ramp to -(1+2g) at k = -5, steep left wall beyond, up-ramp to
        // +(1+2g) at k = +7 and flat after.
        let mut heights = Vec::new();
        for k in -12i64..=8 {
            let h = if k <= -6 {
                -d + 0.8 * (-5 - k) as f64
            } else if k <= 0 {
                -d * (-k) as f64 / 5.0
            } else if k <= 7 {
                d * k as f64 / 7.0
            } else {
                d
            };
            heights.push(h);
        }
        let env = env_from_heights(-12, &heights, n.ln());
        let pot = PotentialView::new(&env, n).unwrap();
        let v = find_basic_valley(&pot, &scales).unwrap();
        assert_eq!(v.bottom, -5);
        assert!(v.m_left <= 0 && v.m_right >= 0);
        assert!(v.depth >= 1.0 + g);
        // Dominance clause on the side containing 0.
        let margin = side_dominance_margin(&pot, v.m_left, v.bottom, v.m_right).unwrap();
        assert!(margin >= g);
        // Independent first-crossing scans for the edges.
        let s_b = pot.s_raw(-5);
        let need = (1.0 + g) * pot.log_n();
        let mut expect_left = None;
        for l in (-12..=-6i64).rev() {
            if pot.s_raw(l) - s_b >= need {
                expect_left = Some(l);
                break;
            }
        }
        let mut expect_right = None;
        let inner_max = (v.bottom..=0).map(|k| pot.s_raw(k)).fold(f64::MIN, f64::max);
        for l in 0..=8i64 {
            if pot.s_raw(l) - s_b >= need && pot.s_raw(l) - inner_max >= g * pot.log_n() {
                expect_right = Some(l);
                break;
            }
        }
        assert_eq!(Some(v.m_left), expect_left);
        assert_eq!(Some(v.m_right), expect_right);
    }

    #[test]
    fn flat_potential_has_no_valley() {
        let env = Environment::from_profile(-100, vec![0.5; 201]).unwrap();
        let pot = PotentialView::new(&env, 1e6).unwrap();
        let scales = derived_scales(1e6, 3.0, 1.0, 0.5).unwrap();
        assert!(matches!(
            find_basic_valley(&pot, &scales),
            Err(ValleyError::WindowExhausted(_))
        ));
    }

    #[test]
    fn sampled_valleys_satisfy_all_clauses() {
        let spec = DistSpec::TwoPoint { p: 0.3 };
        let scales = derived_scales(1e6, 3.0, 1.0, spec.sigma2()).unwrap();
        let mut found = 0;
        for seed in 0..40u64 {
            let env = Environment::sample(&spec, seed, -1024, 1024).unwrap();
            let (env, v) = match find_basic_valley_auto(&env, &scales, 1 << 20) {
                Ok(out) => out,
                Err(_) => continue,
            };
            let pot = PotentialView::new(&env, 1e6).unwrap();
            found += 1;
            assert!(v.m_left <= 0 && 0 <= v.m_right);
            assert!(valley_depth(&pot, v.m_left, v.bottom, v.m_right) >= 1.0 + scales.gamma_n);
            if let Some(m) = side_dominance_margin(&pot, v.m_left, v.bottom, v.m_right) {
                assert!(m >= scales.gamma_n);
            }
            assert!(is_valley(&pot, v.m_left, v.bottom, v.m_right));
        }
        assert!(found > 20, "only {found} basic valleys found");
    }

    #[test]
    fn chopping_nested_wells() {
        let n = 1e6f64;
        let log_n = n.ln();
        // Right flank with nested wells of drops 1.5, 1.0, 0.5; short left wall.
        let mut heights = vec![1.6, 1.2, 0.8, 0.4]; // k = -4..-1
        heights.push(0.0); // k = 0 (bottom)
        heights.extend([0.225, 0.45, 0.675, 0.9]); // climb to 0.9 at k = 4
        heights.push(0.4); // k = 5, drop 0.5
        heights.extend([0.6, 0.8, 1.0, 1.2, 1.4]); // climb to 1.4 at k = 10
        heights.push(0.4); // k = 11, drop 1.0
        heights.extend([0.62, 0.84, 1.06, 1.28, 1.5]); // climb to 1.5 at k = 16
        let env = env_from_heights(-4, &heights, log_n);
        let pot = PotentialView::new(&env, n).unwrap();
        let valley = Valley { m_left: -4, bottom: 0, m_right: 16, depth: 1.5 };
        let chain = chop_with_cutoff(&pot, &valley, 5.0);
        assert_eq!(chain.levels(Side::Right), 2);
        assert_eq!(chain.levels(Side::Left), 0);
        assert!(!chain.truncated_right && !chain.truncated_left);
        let d: Vec<f64> =
            (0..=2).map(|i| chain.delta(&pot, Side::Right, i, i)).collect();
        assert!((d[0] - 1.5).abs() < 1e-9);
        assert!((d[1] - 1.0).abs() < 1e-9);
        assert!((d[2] - 0.5).abs() < 1e-9);
        assert_eq!(chain.crest(Side::Right, 1), 10);
        assert_eq!(chain.pit(Side::Right, 1), 11);
        assert_eq!(chain.crest(Side::Right, 2), 4);
        // Wide cutoff: zero levels on both sides.
        let trivial = chop_with_cutoff(&pot, &valley, 20.0);
        assert_eq!(trivial.levels(Side::Right), 0);
        assert_eq!(trivial.levels(Side::Left), 0);
    }

    #[test]
    fn chopping_invariants_on_sampled_environments() {
        // Continuous site law: bitwise drop ties have measure zero, so the
        // descent must be strict.
        let spec = DistSpec::SymmetricUniform { c: 0.1 };
        let scales = derived_scales(1e6, 3.0, 1.0, spec.sigma2()).unwrap();
        let mut nontrivial = 0;
        for seed in 100..160u64 {
            let env = Environment::sample(&spec, seed, -4096, 4096).unwrap();
            let pot = PotentialView::new(&env, 1e6).unwrap();
            let v = match find_basic_valley(&pot, &scales) {
                Ok(v) => v,
                Err(_) => continue,
            };
            // Desk-scale cutoff: a quarter of the narrower flank width.
            let w = ((v.m_right - v.bottom).min(v.bottom - v.m_left)).max(2) as f64;
            let chain = chop_with_cutoff(&pot, &v, (w / 4.0).max(2.0));
            for side in [Side::Right, Side::Left] {
                let r = chain.levels(side);
                if r > 0 {
                    nontrivial += 1;
                }
                for i in 0..r {
                    assert!(
                        chain.delta(&pot, side, i, i) > chain.delta(&pot, side, i + 1, i + 1),
                        "descent fails at level {i} (seed {seed})"
                    );
                    assert!(chain.eta(&pot, side, i, i + 1) >= 0.0);
                    assert!(chain.mu(&pot, side, i + 1, 0) >= 0.0);
                    // mu identity at floating tolerance.
                    let lhs = chain.delta(&pot, side, i, 0) - chain.delta(&pot, side, i, i);
                    let rhs = chain.mu(&pot, side, i, 0);
                    assert!((lhs - rhs).abs() < 1e-12);
                    // Nesting.
                    let c_next = chain.crest(side, i + 1);
                    let c_cur = chain.crest(side, i);
                    match side {
                        Side::Right => assert!(chain.bottom() < c_next && c_next < c_cur),
                        Side::Left => assert!(c_cur < c_next && c_next < chain.bottom()),
                    }
                }
            }
        }
        assert!(nontrivial > 20, "only {nontrivial} nontrivial chains");
    }

    #[test]
    fn canonical_chopping_is_infeasible_at_desk_scale() {
        let spec = DistSpec::TwoPoint { p: 0.3 };
        let scales = derived_scales(1e6, 3.0, 1.0, spec.sigma2()).unwrap();
        let env = Environment::sample(&spec, 4, -4096, 4096).unwrap();
        let pot = PotentialView::new(&env, 1e6).unwrap();
        if let Ok(v) = find_basic_valley(&pot, &scales) {
            assert!(matches!(
                ordered_chopping(&pot, &v, &scales),
                Err(ValleyError::ValleyTooNarrow { .. })
            ));
        }
    }

    #[test]
    fn inner_barrier_symmetric_ramp() {
        let n = 1e6f64;
        // Symmetric V: climbs by 0.2 per site away from 0.
        let heights: Vec<f64> = (-20i64..=20).map(|k| 0.2 * k.abs() as f64).collect();
        let env = env_from_heights(-20, &heights, n.ln());
        let pot = PotentialView::new(&env, n).unwrap();
        let b = inner_barrier_at(&pot, 0, 1.0).unwrap();
        assert_eq!(b.m_less, -5);
        assert_eq!(b.m_greater, 5);
        // Threshold beyond the available height: exhausted.
        assert!(matches!(
            inner_barrier_at(&pot, 0, 5.0),
            Err(ValleyError::WindowExhausted(_))
        ));
    }

    #[test]
    fn inner_barrier_scan_oracle() {
        let spec = DistSpec::SymmetricUniform { c: 0.1 };
        for seed in 0..20u64 {
            let env = Environment::sample(&spec, seed, -2000, 2000).unwrap();
            let pot = PotentialView::new(&env, 1e4).unwrap();
            let threshold = 0.4;
            if let Ok(b) = inner_barrier_at(&pot, 0, threshold) {
                assert!(pot.sn(b.m_greater) - pot.sn(0) >= threshold);
                for j in 1..b.m_greater {
                    assert!(pot.sn(j) - pot.sn(0) < threshold);
                }
                assert!(pot.sn(b.m_less) - pot.sn(0) >= threshold);
                for j in b.m_less + 1..0 {
                    assert!(pot.sn(j) - pot.sn(0) < threshold);
                }
            }
        }
    }
}
