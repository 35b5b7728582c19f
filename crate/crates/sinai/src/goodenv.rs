//! Clause-by-clause verification that an environment is "good" at horizon
//! `n`, and Monte Carlo estimation of the probability of that event.
//!
//! A good environment is one whose basic valley exists with the right depth
//! and dominance margins, whose transition probabilities are not too extreme,
//! whose valley and barrier extents are within the deterministic bounds, and
//! whose ordered chopping is short with well-separated levels. Checking never
//! simulates a walk, so horizons far beyond anything simulatable (n up to
//! 1e18) stay cheap: only a potential window of a few thousand sites is
//! touched.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{derived_scales, DerivedScales, DistSpec, EnvError, Environment, PotentialView};
use crate::rng::mix2;
use crate::valleys::{
    chop_with_cutoff, find_basic_valley_auto, inner_barrier_at, side_dominance_margin, Side,
    Valley, ValleyError, DEFAULT_WINDOW_CAP,
};

/// Verdict for one clause group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClauseStatus {
    /// Measured and satisfied.
    Holds,
    /// Measured and violated.
    Fails,
    /// The clause quantifies over an empty range.
    Vacuous,
    /// Not evaluated because the basic valley does not exist.
    Prerequisite,
    /// Cannot be decided within any tractable window (the barrier distance
    /// bound at desk scale); counted as non-failing.
    Undetermined,
}

impl ClauseStatus {
    pub fn token(self) -> &'static str {
        match self {
            ClauseStatus::Holds => "holds",
            ClauseStatus::Fails => "fails",
            ClauseStatus::Vacuous => "vacuous",
            ClauseStatus::Prerequisite => "prereq",
            ClauseStatus::Undetermined => "undet",
        }
    }

    fn failing(self) -> bool {
        matches!(self, ClauseStatus::Fails | ClauseStatus::Prerequisite)
    }
}

/// One clause verdict with its witness value and the threshold it was
/// compared against, both reproducible from the environment alone.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Clause {
    pub status: ClauseStatus,
    pub witness: Option<f64>,
    pub threshold: Option<f64>,
}

impl Clause {
    fn prereq() -> Clause {
        Clause { status: ClauseStatus::Prerequisite, witness: None, threshold: None }
    }

    fn measured(holds: bool, witness: f64, threshold: f64) -> Clause {
        Clause {
            status: if holds { ClauseStatus::Holds } else { ClauseStatus::Fails },
            witness: Some(witness),
            threshold: Some(threshold),
        }
    }

    fn vacuous() -> Clause {
        Clause { status: ClauseStatus::Vacuous, witness: None, threshold: None }
    }
}

/// Clause-group names in report order (also the CSV column order).
pub const CLAUSE_NAMES: [&str; 10] = [
    "existence",
    "depth",
    "side_dominance",
    "transition_bounds",
    "extent",
    "barriers",
    "refinement_counts",
    "level_gaps",
    "first_refinement_cap",
    "last_refinement_cap",
];

/// Full per-environment verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GoodEnvReport {
    pub n: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub sigma2: f64,
    /// Basic valley exists and contains the origin.
    pub existence: Clause,
    /// Both one-sided depths at least `1 + gamma(n)`.
    pub depth: Clause,
    /// Dominance margin on the side containing the origin.
    pub side_dominance: Clause,
    /// `max 1/alpha` and `max 1/beta` over the valley at most `(log n)^{6/kappa}`.
    pub transition_bounds: Clause,
    /// Valley edges within `(sigma^{-1} log n)^2 log2 n` of the origin.
    pub extent: Clause,
    /// Barrier points within `L_n` of the bottom.
    pub barriers: Clause,
    /// Refinement counts `r`, `r'` within the deterministic cap.
    pub refinement_counts: Clause,
    /// Per-level eta/delta/mu gaps at least `gamma(n)`.
    pub level_gaps: Clause,
    /// First refinement drop at most `1 - gamma(n)`.
    pub first_refinement_cap: Clause,
    /// Innermost refinement drop at most `log q_n / log n`.
    pub last_refinement_cap: Clause,
    pub overall: bool,
    pub bottom: Option<i64>,
    pub m_left: Option<i64>,
    pub m_right: Option<i64>,
    pub r: Option<usize>,
    pub r_prime: Option<usize>,
}

impl GoodEnvReport {
    pub fn clauses(&self) -> [(&'static str, &Clause); 10] {
        [
            ("existence", &self.existence),
            ("depth", &self.depth),
            ("side_dominance", &self.side_dominance),
            ("transition_bounds", &self.transition_bounds),
            ("extent", &self.extent),
            ("barriers", &self.barriers),
            ("refinement_counts", &self.refinement_counts),
            ("level_gaps", &self.level_gaps),
            ("first_refinement_cap", &self.first_refinement_cap),
            ("last_refinement_cap", &self.last_refinement_cap),
        ]
    }
}

/// Knobs for the checker.
#[derive(Debug, Clone, Copy)]
pub struct CheckOptions {
    /// Read both sides of the dominance clause in normalized units (the
    /// default). When false, the edge value is taken raw against the
    /// normalized inner maximum, which is the literal mixed reading.
    pub strict_normalization: bool,
    /// Window-growth cap (sites per side) for the valley search.
    pub window_cap: i64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { strict_normalization: true, window_cap: DEFAULT_WINDOW_CAP }
    }
}

fn failed_report(scales: &DerivedScales) -> GoodEnvReport {
    GoodEnvReport {
        n: scales.n,
        gamma: scales.gamma,
        kappa: scales.kappa,
        sigma2: scales.sigma2,
        existence: Clause { status: ClauseStatus::Fails, witness: None, threshold: None },
        depth: Clause::prereq(),
        side_dominance: Clause::prereq(),
        transition_bounds: Clause::prereq(),
        extent: Clause::prereq(),
        barriers: Clause::prereq(),
        refinement_counts: Clause::prereq(),
        level_gaps: Clause::prereq(),
        first_refinement_cap: Clause::prereq(),
        last_refinement_cap: Clause::prereq(),
        overall: false,
        bottom: None,
        m_left: None,
        m_right: None,
        r: None,
        r_prime: None,
    }
}

/// Evaluates every clause on `env` at horizon `n`.
pub fn check_good_environment(
    env: &Environment,
    n: f64,
    gamma: f64,
    kappa: f64,
) -> Result<GoodEnvReport, EnvError> {
    check_good_environment_opts(env, n, gamma, kappa, CheckOptions::default())
}

pub fn check_good_environment_opts(
    env: &Environment,
    n: f64,
    gamma: f64,
    kappa: f64,
    opts: CheckOptions,
) -> Result<GoodEnvReport, EnvError> {
    let sigma2 = env.moments().sigma2;
    let scales = derived_scales(n, gamma, kappa, sigma2)?;
    let (env, valley) = match find_basic_valley_auto(env, &scales, opts.window_cap) {
        Ok(found) => found,
        Err(ValleyError::NotFound) | Err(ValleyError::WindowExhausted(_)) => {
            return Ok(failed_report(&scales));
        }
        Err(_) => return Ok(failed_report(&scales)),
    };
    let pot = PotentialView::new(&env, n)?;
    Ok(evaluate_clauses(&pot, &valley, &scales, opts))
}

fn evaluate_clauses(
    pot: &PotentialView,
    valley: &Valley,
    scales: &DerivedScales,
    opts: CheckOptions,
) -> GoodEnvReport {
    let gamma_n = scales.gamma_n;
    let (lo, hi) = (valley.m_left, valley.m_right);
    let bottom = valley.bottom;

    let existence = Clause {
        status: if lo <= 0 && 0 <= hi { ClauseStatus::Holds } else { ClauseStatus::Fails },
        witness: None,
        threshold: None,
    };

    let depth_right = pot.sn_drop(hi, bottom);
    let depth_left = pot.sn_drop(lo, bottom);
    let depth = Clause::measured(
        depth_right >= 1.0 + gamma_n && depth_left >= 1.0 + gamma_n,
        depth_right.min(depth_left),
        1.0 + gamma_n,
    );

    let side_dominance = if bottom == 0 {
        Clause::vacuous()
    } else if opts.strict_normalization {
        match side_dominance_margin(pot, lo, bottom, hi) {
            Some(margin) => Clause::measured(margin >= gamma_n, margin, gamma_n),
            None => Clause::vacuous(),
        }
    } else {
        // Literal mixed reading: raw edge value against the normalized inner
        // maximum.
        let edge = if bottom > 0 { lo } else { hi };
        let inner = if bottom > 0 {
            (0..=bottom).map(|k| pot.sn(k)).fold(f64::MIN, f64::max)
        } else {
            (bottom..=0).map(|k| pot.sn(k)).fold(f64::MIN, f64::max)
        };
        let margin = pot.s_raw(edge) - inner;
        Clause::measured(margin >= gamma_n, margin, gamma_n)
    };

    let trans_cap = ((6.0 / scales.kappa) * scales.log2_n).exp(); // (log n)^{6/kappa}
    let mut worst_inv = 0.0f64;
    for l in lo..=hi {
        let a = pot.alpha(l);
        worst_inv = worst_inv.max(1.0 / a).max(1.0 / (1.0 - a));
    }
    let transition_bounds = Clause::measured(worst_inv <= trans_cap, worst_inv, trans_cap);

    let extent_bound = scales.extent_bound();
    let extent_witness = (hi as f64).max(-(lo as f64));
    let extent = Clause::measured(extent_witness <= extent_bound, extent_witness, extent_bound);

    // Barrier clause: scan within the realized window. Finding both points
    // settles it; otherwise it is decidable only if the search covered L_n.
    let barriers = {
        let threshold = scales.barrier_threshold();
        match inner_barrier_at(pot, bottom, threshold) {
            Ok(b) => {
                let dist = ((bottom - b.m_less) as f64).max((b.m_greater - bottom) as f64);
                Clause::measured(dist <= scales.l_cap, dist, scales.l_cap)
            }
            Err(_) => {
                let (wlo, whi) = pot.window();
                let searched = ((bottom - wlo) as f64).min((whi - bottom) as f64);
                if searched >= scales.l_cap {
                    Clause::measured(false, searched, scales.l_cap)
                } else {
                    Clause {
                        status: ClauseStatus::Undetermined,
                        witness: Some(searched),
                        threshold: Some(scales.l_cap),
                    }
                }
            }
        }
    };

    // Chopping at the canonical cutoff; flanks narrower than the cutoff keep
    // zero levels, which leaves the per-level clauses vacuous.
    let chain = chop_with_cutoff(pot, valley, scales.chop_cutoff());
    let r = chain.levels(Side::Right);
    let rp = chain.levels(Side::Left);

    let count_cap = 2.0 * scales.log_n.sqrt() / (scales.gamma * scales.log2_n).sqrt();
    let refinement_counts =
        Clause::measured((r as f64) <= count_cap && (rp as f64) <= count_cap, r.max(rp) as f64, count_cap);

    let level_gaps = {
        let mut worst = f64::INFINITY;
        for (side, levels) in [(Side::Right, r), (Side::Left, rp)] {
            for i in 0..levels {
                worst = worst
                    .min(chain.eta(pot, side, i, i + 1))
                    .min(chain.delta(pot, side, i + 1, i + 1))
                    .min(chain.mu(pot, side, i + 1, 0));
            }
        }
        if worst == f64::INFINITY {
            Clause::vacuous()
        } else {
            Clause::measured(worst >= gamma_n, worst, gamma_n)
        }
    };

    let first_refinement_cap = {
        let mut worst = f64::MIN;
        if r >= 1 {
            worst = worst.max(chain.delta(pot, Side::Right, 1, 1));
        }
        if rp >= 1 {
            worst = worst.max(chain.delta(pot, Side::Left, 1, 1));
        }
        if worst == f64::MIN {
            Clause::vacuous()
        } else {
            Clause::measured(worst <= 1.0 - gamma_n, worst, 1.0 - gamma_n)
        }
    };

    let last_cap = scales.log_qn / scales.log_n;
    let last_worst = chain
        .delta(pot, Side::Right, r, r)
        .max(chain.delta(pot, Side::Left, rp, rp));
    let last_refinement_cap = Clause::measured(last_worst <= last_cap, last_worst, last_cap);

    let clauses = [
        &existence,
        &depth,
        &side_dominance,
        &transition_bounds,
        &extent,
        &barriers,
        &refinement_counts,
        &level_gaps,
        &first_refinement_cap,
        &last_refinement_cap,
    ];
    let overall = clauses.iter().all(|c| !c.status.failing());

    GoodEnvReport {
        n: scales.n,
        gamma: scales.gamma,
        kappa: scales.kappa,
        sigma2: scales.sigma2,
        existence,
        depth,
        side_dominance,
        transition_bounds,
        extent,
        barriers,
        refinement_counts,
        level_gaps,
        first_refinement_cap,
        last_refinement_cap,
        overall,
        bottom: Some(valley.bottom),
        m_left: Some(valley.m_left),
        m_right: Some(valley.m_right),
        r: Some(r),
        r_prime: Some(rp),
    }
}

/// One replica of the good-environment scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicaReport {
    pub replica: u64,
    pub seed: u64,
    pub report: GoodEnvReport,
}

/// Estimate of `Q[G_n]` with per-clause failure accounting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GoodEnvEstimate {
    pub n: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub replicas: u64,
    pub successes: u64,
    pub p_hat: f64,
    pub std_error: f64,
    /// Failure counts per clause group, in `CLAUSE_NAMES` order. A replica
    /// can fail several clauses at once, so the counts may sum past the
    /// number of failing replicas.
    pub clause_failures: [u64; 10],
    pub rows: Vec<ReplicaReport>,
}

/// Samples `replicas` environments (seed derived from `(master_seed, index)`)
/// and reports the empirical frequency of the good-environment event with its
/// binomial standard error. Aggregation is in replica order, so the result is
/// independent of worker scheduling.
pub fn estimate_good_probability(
    spec: &DistSpec,
    n: f64,
    gamma: f64,
    kappa: f64,
    replicas: u64,
    master_seed: u64,
) -> Result<GoodEnvEstimate, EnvError> {
    if replicas < 100 {
        return Err(EnvError::InvalidSpec(format!(
            "need at least 100 replicas, got {replicas}"
        )));
    }
    spec.validate()?;
    let sigma2 = spec.sigma2();
    // Fail fast on a bad horizon before spawning work.
    derived_scales(n, gamma, kappa, sigma2)?;
    // Analysis windows stay near the typical valley extent; the growth cap
    // below is ~100x that scale, far past anything the search needs.
    let extent = derived_scales(n, gamma, kappa, sigma2)?.extent_bound();
    let cap = ((extent * 128.0) as i64).max(1 << 16);
    let opts = CheckOptions { strict_normalization: true, window_cap: cap };

    let rows: Vec<ReplicaReport> = (0..replicas)
        .into_par_iter()
        .map(|idx| {
            let seed = mix2(master_seed, idx);
            let env = Environment::sample(spec, seed, -1024, 1024)
                .expect("validated spec cannot fail to sample");
            let report = check_good_environment_opts(&env, n, gamma, kappa, opts)
                .expect("horizon validated above");
            ReplicaReport { replica: idx, seed, report }
        })
        .collect();

    let mut successes = 0u64;
    let mut clause_failures = [0u64; 10];
    for row in &rows {
        if row.report.overall {
            successes += 1;
        }
        for (slot, (_, clause)) in clause_failures.iter_mut().zip(row.report.clauses()) {
            if clause.status.failing() {
                *slot += 1;
            }
        }
    }
    let p_hat = successes as f64 / replicas as f64;
    let std_error = (p_hat * (1.0 - p_hat) / replicas as f64).sqrt();
    Ok(GoodEnvEstimate {
        n,
        gamma,
        kappa,
        replicas,
        successes,
        p_hat,
        std_error,
        clause_failures,
        rows,
    })
}
