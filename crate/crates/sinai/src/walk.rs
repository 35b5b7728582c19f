//! Seeded Monte Carlo simulation of the quenched walk.
//!
//! At site `i` the walk steps to `i+1` with probability `alpha_i` and to
//! `i-1` otherwise. Each replica owns a private stream seeded from
//! `(master_seed, replica_index)`, and replica results are always merged in
//! index order, so aggregates do not depend on how many workers ran them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{AlphaAccess, Environment};
use crate::rng::{mix2, SplitMix64};

#[derive(Debug, Error)]
pub enum WalkError {
    #[error("walk left the realized window at {0}")]
    WindowExhausted(i64),
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

/// What a single replica records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordMode {
    FullTrajectory,
    EndpointOnly,
    HittingTimesOnly,
}

/// Trajectory recording is refused past this many steps.
pub const FULL_TRAJECTORY_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WalkerConfig {
    pub start: i64,
    pub max_steps: u64,
    pub seed: u64,
    pub record: RecordMode,
    /// Sites whose first hitting times are recorded in `HittingTimesOnly`.
    pub targets: Vec<i64>,
}

impl WalkerConfig {
    pub fn endpoint(start: i64, max_steps: u64, seed: u64) -> Self {
        WalkerConfig { start, max_steps, seed, record: RecordMode::EndpointOnly, targets: Vec::new() }
    }
}

/// Per-replica outcome. Hitting times are `None` when censored at
/// `max_steps`; censoring is always explicit, never dropped.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HitStats {
    pub endpoint: i64,
    pub steps: u64,
    pub min_pos: i64,
    pub max_pos: i64,
    pub hits: Vec<(i64, Option<u64>)>,
    pub trajectory: Option<Vec<i64>>,
}

/// Runs one walk. Deterministic in `(env, cfg.seed)`.
pub fn simulate(env: &Environment, cfg: &WalkerConfig) -> Result<HitStats, WalkError> {
    if cfg.max_steps == 0 {
        return Err(WalkError::InvalidConfig("max_steps must be at least 1".into()));
    }
    if cfg.record == RecordMode::FullTrajectory && cfg.max_steps > FULL_TRAJECTORY_CAP {
        return Err(WalkError::BudgetExceeded(format!(
            "trajectory recording capped at {FULL_TRAJECTORY_CAP} steps"
        )));
    }
    let mut rng = SplitMix64::new(cfg.seed);
    let mut pos = cfg.start;
    let mut min_pos = pos;
    let mut max_pos = pos;
    let mut hits: Vec<(i64, Option<u64>)> = cfg.targets.iter().map(|t| (*t, None)).collect();
    let mut trajectory = match cfg.record {
        RecordMode::FullTrajectory => {
            let mut v = Vec::with_capacity(cfg.max_steps as usize + 1);
            v.push(pos);
            Some(v)
        }
        _ => None,
    };
    let track_hits = cfg.record == RecordMode::HittingTimesOnly && !hits.is_empty();

    macro_rules! run {
        ($alpha:expr) => {
            for step in 1..=cfg.max_steps {
                let a = $alpha(pos)?;
                pos += if rng.next_f64() < a { 1 } else { -1 };
                if pos < min_pos {
                    min_pos = pos;
                }
                if pos > max_pos {
                    max_pos = pos;
                }
                if track_hits {
                    for h in hits.iter_mut() {
                        if h.1.is_none() && h.0 == pos {
                            h.1 = Some(step);
                        }
                    }
                }
                if let Some(t) = trajectory.as_mut() {
                    t.push(pos);
                }
            }
        };
    }

    match env.access() {
        AlphaAccess::Constant(a) => {
            let get = |_p: i64| -> Result<f64, WalkError> { Ok(a) };
            run!(get);
        }
        AlphaAccess::Table { lo, hi, alphas } => {
            let get = |p: i64| -> Result<f64, WalkError> {
                if p < lo || p > hi {
                    return Err(WalkError::WindowExhausted(p));
                }
                Ok(alphas[(p - lo) as usize])
            };
            run!(get);
        }
    }

    Ok(HitStats { endpoint: pos, steps: cfg.max_steps, min_pos, max_pos, hits, trajectory })
}

/// Exit of a single replica from `(a, b)` started at `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExitOutcome {
    HitA(u64),
    HitB(u64),
    Censored,
}

/// Walks from `x` until it first hits `a` or `b` (or `max_steps` elapses).
pub fn exit_sample(
    env: &Environment,
    a: i64,
    x: i64,
    b: i64,
    seed: u64,
    max_steps: u64,
) -> Result<ExitOutcome, WalkError> {
    if !(a < x && x < b) {
        return Err(WalkError::InvalidConfig(format!("need a < x < b, got {a}, {x}, {b}")));
    }
    let mut rng = SplitMix64::new(seed);
    let mut pos = x;
    match env.access() {
        AlphaAccess::Constant(al) => {
            for step in 1..=max_steps {
                pos += if rng.next_f64() < al { 1 } else { -1 };
                if pos == a {
                    return Ok(ExitOutcome::HitA(step));
                }
                if pos == b {
                    return Ok(ExitOutcome::HitB(step));
                }
            }
        }
        AlphaAccess::Table { lo, hi, alphas } => {
            if a < lo || b > hi {
                return Err(WalkError::WindowExhausted(if a < lo { a } else { b }));
            }
            for step in 1..=max_steps {
                let al = alphas[(pos - lo) as usize];
                pos += if rng.next_f64() < al { 1 } else { -1 };
                if pos == a {
                    return Ok(ExitOutcome::HitA(step));
                }
                if pos == b {
                    return Ok(ExitOutcome::HitB(step));
                }
            }
        }
    }
    Ok(ExitOutcome::Censored)
}

/// Deterministic parallel replica map: seeds derive from
/// `(master_seed, index)` and results come back in index order.
pub fn par_map_replicas<T, F>(replicas: u64, master_seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, u64) -> T + Sync,
{
    (0..replicas)
        .into_par_iter()
        .map(|idx| f(idx, mix2(master_seed, idx)))
        .collect()
}

/// Empirical tail of the return time to `bottom`, conditioned on the first
/// step going to `bottom + side`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReturnTail {
    pub bottom: i64,
    pub side: i8,
    pub replicas: u64,
    /// `(q, empirical P[T > q], standard error)` per grid point.
    pub points: Vec<(u64, f64, f64)>,
}

/// Estimates `P[T_bottom > q]` for each `q` in the grid, starting replicas at
/// `bottom + side`. Returns an error if a replica leaves the window before
/// either returning or outliving the largest `q`.
pub fn estimate_return_tail(
    env: &Environment,
    bottom: i64,
    side: i8,
    q_grid: &[u64],
    replicas: u64,
    master_seed: u64,
) -> Result<ReturnTail, WalkError> {
    if q_grid.is_empty() {
        return Err(WalkError::InvalidConfig("empty q grid".into()));
    }
    if side != 1 && side != -1 {
        return Err(WalkError::InvalidConfig("side must be +1 or -1".into()));
    }
    let q_max = *q_grid.iter().max().unwrap();
    let start = bottom + side as i64;
    // Return time of each replica, censored at q_max + 1.
    let times: Vec<Result<u64, WalkError>> =
        par_map_replicas(replicas, master_seed, |_, seed| {
            let mut rng = SplitMix64::new(seed);
            let mut pos = start;
            match env.access() {
                AlphaAccess::Constant(al) => {
                    for step in 1..=q_max {
                        pos += if rng.next_f64() < al { 1 } else { -1 };
                        if pos == bottom {
                            // The first step from bottom costs one unit.
                            return Ok(step + 1);
                        }
                    }
                }
                AlphaAccess::Table { lo, hi, alphas } => {
                    for step in 1..=q_max {
                        if pos < lo || pos > hi {
                            return Err(WalkError::WindowExhausted(pos));
                        }
                        let al = alphas[(pos - lo) as usize];
                        pos += if rng.next_f64() < al { 1 } else { -1 };
                        if pos == bottom {
                            return Ok(step + 1);
                        }
                    }
                }
            }
            Ok(q_max + 1)
        });
    let mut resolved = Vec::with_capacity(times.len());
    for t in times {
        resolved.push(t?);
    }
    let points = q_grid
        .iter()
        .map(|&q| {
            let count = resolved.iter().filter(|&&t| t > q).count() as f64;
            let p = count / replicas as f64;
            let se = (p * (1.0 - p) / replicas as f64).sqrt();
            (q, p, se)
        })
        .collect();
    Ok(ReturnTail { bottom, side, replicas, points })
}

/// Empirical probability of never visiting `bottom` during the last `q`
/// steps of an `n`-step walk started at the origin.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LastReturnEstimate {
    pub n: u64,
    pub q: u64,
    pub bottom: i64,
    pub replicas: u64,
    pub p_no_visit: f64,
    pub std_error: f64,
}

/// Per-replica step budget for the last-return experiment.
pub const LAST_RETURN_BUDGET: u64 = 1_000_000_000;

pub fn last_return_event(
    env: &Environment,
    n: u64,
    q: u64,
    bottom: i64,
    replicas: u64,
    master_seed: u64,
) -> Result<LastReturnEstimate, WalkError> {
    if q == 0 || q > n {
        return Err(WalkError::InvalidConfig(format!("need 1 <= q <= n, got q={q}, n={n}")));
    }
    if n > LAST_RETURN_BUDGET {
        return Err(WalkError::BudgetExceeded(format!(
            "n = {n} exceeds the per-replica budget {LAST_RETURN_BUDGET}"
        )));
    }
    let window_start = n - q;
    let flags: Vec<Result<bool, WalkError>> =
        par_map_replicas(replicas, master_seed, |_, seed| {
            let mut rng = SplitMix64::new(seed);
            let mut pos = 0i64;
            let mut visited = window_start == 0 && pos == bottom;
            match env.access() {
                AlphaAccess::Constant(al) => {
                    for step in 1..=n {
                        pos += if rng.next_f64() < al { 1 } else { -1 };
                        if step >= window_start && pos == bottom {
                            visited = true;
                        }
                    }
                }
                AlphaAccess::Table { lo, hi, alphas } => {
                    for step in 1..=n {
                        if pos < lo || pos > hi {
                            return Err(WalkError::WindowExhausted(pos));
                        }
                        let al = alphas[(pos - lo) as usize];
                        pos += if rng.next_f64() < al { 1 } else { -1 };
                        if step >= window_start && pos == bottom {
                            visited = true;
                        }
                    }
                }
            }
            Ok(!visited)
        });
    let mut misses = 0u64;
    for f in flags {
        if f? {
            misses += 1;
        }
    }
    let p = misses as f64 / replicas as f64;
    let se = (p * (1.0 - p) / replicas as f64).sqrt();
    Ok(LastReturnEstimate { n, q, bottom, replicas, p_no_visit: p, std_error: se })
}
