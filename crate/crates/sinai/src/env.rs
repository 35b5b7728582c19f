//! Random environments, the random potential, and derived scale quantities.
//!
//! An environment is a two-sided sequence `α_i ∈ (0,1)`; the site variables
//! `ε_i = log((1-α_i)/α_i)` must be centered (`E ε = 0`), non-degenerate
//! (`σ² > 0`), and have finite two-sided exponential moments. All built-in
//! families keep `α` bounded away from 0 and 1 so the exponential moments are
//! finite for every κ > 0.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{mix2, to_unit, zigzag};

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("invalid distribution spec: {0}")]
    InvalidSpec(String),
    #[error("index {0} outside realized window")]
    OutOfWindow(i64),
    #[error("window must contain 0, got [{0}, {1}]")]
    WindowExcludesOrigin(i64, i64),
    #[error("horizon too small: need n > e^e, got {0}")]
    HorizonTooSmall(f64),
}

/// Law of a single site variable `α_0`.
///
/// Centering of `ε_0` is structural for `TwoPoint` and `SymmetricUniform`
/// (both are symmetric under `α ↔ 1-α`) and is validated numerically for
/// `DiscreteTable`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum DistSpec {
    /// `α ∈ {p, 1-p}` with probability 1/2 each.
    TwoPoint { p: f64 },
    /// `α` uniform on `(c, 1-c)`, `0 < c < 1/2`.
    SymmetricUniform { c: f64 },
    /// Finite table of `α` values with positive weights summing to 1.
    DiscreteTable { values: Vec<f64>, weights: Vec<f64> },
}

fn eps_of_alpha(alpha: f64) -> f64 {
    ((1.0 - alpha) / alpha).ln()
}

/// Composite Simpson quadrature on [a, b]. The integrands used here are
/// smooth and bounded on the closed interval, so 2^14 panels reach machine
/// precision.
fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let panels = 1usize << 14;
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for k in 1..panels {
        let x = a + h * k as f64;
        acc += f(x) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

impl DistSpec {
    pub fn validate(&self) -> Result<(), EnvError> {
        match self {
            DistSpec::TwoPoint { p } => {
                if !(p.is_finite() && *p > 0.0 && *p < 1.0) {
                    return Err(EnvError::InvalidSpec(format!("p must be in (0,1), got {p}")));
                }
                if (*p - 0.5).abs() < 1e-15 {
                    return Err(EnvError::InvalidSpec(
                        "p = 1/2 gives sigma^2 = 0 (degenerate simple walk)".into(),
                    ));
                }
                Ok(())
            }
            DistSpec::SymmetricUniform { c } => {
                if !(c.is_finite() && *c > 0.0 && *c < 0.5) {
                    return Err(EnvError::InvalidSpec(format!("c must be in (0,1/2), got {c}")));
                }
                Ok(())
            }
            DistSpec::DiscreteTable { values, weights } => {
                if values.is_empty() || values.len() != weights.len() {
                    return Err(EnvError::InvalidSpec(
                        "values and weights must be non-empty and of equal length".into(),
                    ));
                }
                if values.iter().any(|v| !(v.is_finite() && *v > 0.0 && *v < 1.0)) {
                    return Err(EnvError::InvalidSpec("alpha values must lie in (0,1)".into()));
                }
                if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                    return Err(EnvError::InvalidSpec("weights must be positive".into()));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(EnvError::InvalidSpec(format!(
                        "weights must sum to 1 (got {total})"
                    )));
                }
                let mean: f64 = values
                    .iter()
                    .zip(weights)
                    .map(|(v, w)| w * eps_of_alpha(*v))
                    .sum::<f64>()
                    / total;
                if mean.abs() > 1e-12 {
                    return Err(EnvError::InvalidSpec(format!(
                        "E[eps] must vanish, got {mean:e}"
                    )));
                }
                let sigma2 = values
                    .iter()
                    .zip(weights)
                    .map(|(v, w)| w * eps_of_alpha(*v).powi(2))
                    .sum::<f64>()
                    / total;
                if sigma2 <= 0.0 {
                    return Err(EnvError::InvalidSpec("sigma^2 must be positive".into()));
                }
                Ok(())
            }
        }
    }

    /// E[|eps|^k] weighted moment for the supported families; exact for
    /// `TwoPoint` and `DiscreteTable`, quadrature-exact for `SymmetricUniform`.
    fn abs_moment(&self, k: i32) -> f64 {
        match self {
            DistSpec::TwoPoint { p } => eps_of_alpha(*p).abs().powi(k),
            DistSpec::SymmetricUniform { c } => {
                let lo = *c;
                let hi = 1.0 - *c;
                simpson(|a| eps_of_alpha(a).abs().powi(k), lo, hi) / (hi - lo)
            }
            DistSpec::DiscreteTable { values, weights } => {
                let total: f64 = weights.iter().sum();
                values
                    .iter()
                    .zip(weights)
                    .map(|(v, w)| w * eps_of_alpha(*v).abs().powi(k))
                    .sum::<f64>()
                    / total
            }
        }
    }

    pub fn sigma2(&self) -> f64 {
        self.abs_moment(2)
    }

    /// `C(κ) = E[e^{κ ε}] ∨ E[e^{-κ ε}]`.
    pub fn c_kappa(&self, kappa: f64) -> f64 {
        let exp_moment = |s: f64| -> f64 {
            match self {
                DistSpec::TwoPoint { p } => {
                    let l = eps_of_alpha(*p);
                    ((s * l).exp() + (-s * l).exp()) / 2.0
                }
                DistSpec::SymmetricUniform { c } => {
                    let lo = *c;
                    let hi = 1.0 - *c;
                    simpson(|a| (s * eps_of_alpha(a)).exp(), lo, hi) / (hi - lo)
                }
                DistSpec::DiscreteTable { values, weights } => {
                    let total: f64 = weights.iter().sum();
                    values
                        .iter()
                        .zip(weights)
                        .map(|(v, w)| w * (s * eps_of_alpha(*v)).exp())
                        .sum::<f64>()
                        / total
                }
            }
        };
        exp_moment(kappa).max(exp_moment(-kappa))
    }

    /// Draws `α` from a uniform variate by inverse CDF.
    fn alpha_from_unit(&self, u: f64) -> f64 {
        match self {
            DistSpec::TwoPoint { p } => {
                if u < 0.5 {
                    *p
                } else {
                    1.0 - *p
                }
            }
            DistSpec::SymmetricUniform { c } => c + u * (1.0 - 2.0 * c),
            DistSpec::DiscreteTable { values, weights } => {
                let total: f64 = weights.iter().sum();
                let mut acc = 0.0;
                for (v, w) in values.iter().zip(weights) {
                    acc += w / total;
                    if u < acc {
                        return *v;
                    }
                }
                *values.last().unwrap()
            }
        }
    }
}

/// Distribution moments carried by an environment.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MomentReport {
    pub sigma2: f64,
    pub abs_eps3: f64,
    pub eps4: f64,
}

#[derive(Debug, Clone)]
enum Realization {
    Sampled { spec: DistSpec, seed: u64 },
    Explicit,
    Constant { alpha: f64 },
}

/// A realized random environment on an integer window containing 0.
///
/// For sampled environments the value at site `i` is a pure function of
/// `(seed, i)`, so re-realization over any window yields bit-identical values
/// on the overlap. Immutable after construction; safe to share across workers.
#[derive(Debug, Clone)]
pub struct Environment {
    realization: Realization,
    lo: i64,
    hi: i64,
    alphas: Vec<f64>,
    moments: MomentReport,
}

impl Environment {
    /// Realizes a sampled environment on `[lo, hi]`.
    pub fn sample(spec: &DistSpec, seed: u64, lo: i64, hi: i64) -> Result<Self, EnvError> {
        spec.validate()?;
        if lo > 0 || hi < 0 {
            return Err(EnvError::WindowExcludesOrigin(lo, hi));
        }
        let alphas = (lo..=hi)
            .map(|i| spec.alpha_from_unit(to_unit(mix2(seed, zigzag(i)))))
            .collect();
        let moments = MomentReport {
            sigma2: spec.sigma2(),
            abs_eps3: spec.abs_moment(3),
            eps4: spec.abs_moment(4),
        };
        Ok(Environment {
            realization: Realization::Sampled { spec: spec.clone(), seed },
            lo,
            hi,
            alphas,
            moments,
        })
    }

    /// Wraps explicit per-site values (controls and crafted test landscapes).
    /// Moments are the empirical site moments.
    pub fn from_profile(lo: i64, alphas: Vec<f64>) -> Result<Self, EnvError> {
        if alphas.is_empty() {
            return Err(EnvError::InvalidSpec("empty profile".into()));
        }
        let hi = lo + alphas.len() as i64 - 1;
        if lo > 0 || hi < 0 {
            return Err(EnvError::WindowExcludesOrigin(lo, hi));
        }
        if alphas.iter().any(|a| !(a.is_finite() && *a > 0.0 && *a < 1.0)) {
            return Err(EnvError::InvalidSpec("alpha values must lie in (0,1)".into()));
        }
        let n = alphas.len() as f64;
        let eps: Vec<f64> = alphas.iter().map(|a| eps_of_alpha(*a)).collect();
        let moments = MomentReport {
            sigma2: eps.iter().map(|e| e * e).sum::<f64>() / n,
            abs_eps3: eps.iter().map(|e| e.abs().powi(3)).sum::<f64>() / n,
            eps4: eps.iter().map(|e| e.powi(4)).sum::<f64>() / n,
        };
        Ok(Environment { realization: Realization::Explicit, lo, hi, alphas, moments })
    }

    /// Site-independent environment with unbounded window.
    pub fn constant(alpha: f64) -> Result<Self, EnvError> {
        if !(alpha.is_finite() && alpha > 0.0 && alpha < 1.0) {
            return Err(EnvError::InvalidSpec("alpha must lie in (0,1)".into()));
        }
        let e = eps_of_alpha(alpha);
        let moments =
            MomentReport { sigma2: e * e, abs_eps3: e.abs().powi(3), eps4: e.powi(4) };
        Ok(Environment {
            realization: Realization::Constant { alpha },
            lo: i64::MIN,
            hi: i64::MAX,
            alphas: Vec::new(),
            moments,
        })
    }

    /// Same environment realized on a larger window (sampled only).
    pub fn extended(&self, lo: i64, hi: i64) -> Result<Self, EnvError> {
        match &self.realization {
            Realization::Sampled { spec, seed } => Environment::sample(spec, *seed, lo, hi),
            Realization::Constant { .. } => Ok(self.clone()),
            Realization::Explicit => Err(EnvError::InvalidSpec(
                "explicit profile cannot be extended".into(),
            )),
        }
    }

    pub fn window(&self) -> (i64, i64) {
        (self.lo, self.hi)
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(self.realization, Realization::Constant { .. })
    }

    pub fn contains(&self, i: i64) -> bool {
        i >= self.lo && i <= self.hi
    }

    pub fn spec(&self) -> Option<&DistSpec> {
        match &self.realization {
            Realization::Sampled { spec, .. } => Some(spec),
            _ => None,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match &self.realization {
            Realization::Sampled { seed, .. } => Some(*seed),
            _ => None,
        }
    }

    pub fn moments(&self) -> MomentReport {
        self.moments
    }

    #[inline]
    pub fn alpha(&self, i: i64) -> Result<f64, EnvError> {
        match &self.realization {
            Realization::Constant { alpha } => Ok(*alpha),
            _ => {
                if !self.contains(i) {
                    return Err(EnvError::OutOfWindow(i));
                }
                Ok(self.alphas[(i - self.lo) as usize])
            }
        }
    }

    /// Unchecked fast path for simulation loops; caller guarantees `i` is in
    /// the window (or the environment is constant).
    #[inline]
    pub fn alpha_unchecked(&self, i: i64) -> f64 {
        match &self.realization {
            Realization::Constant { alpha } => *alpha,
            _ => self.alphas[(i - self.lo) as usize],
        }
    }

    /// Borrowed view for tight simulation loops.
    pub fn access(&self) -> AlphaAccess<'_> {
        match &self.realization {
            Realization::Constant { alpha } => AlphaAccess::Constant(*alpha),
            _ => AlphaAccess::Table { lo: self.lo, hi: self.hi, alphas: &self.alphas },
        }
    }

    #[inline]
    pub fn beta(&self, i: i64) -> Result<f64, EnvError> {
        Ok(1.0 - self.alpha(i)?)
    }

    #[inline]
    pub fn eps(&self, i: i64) -> Result<f64, EnvError> {
        Ok(eps_of_alpha(self.alpha(i)?))
    }
}

/// Site-probability view used by simulation inner loops.
pub enum AlphaAccess<'a> {
    Table { lo: i64, hi: i64, alphas: &'a [f64] },
    Constant(f64),
}

/// Builds an environment per the public operation contract.
pub fn build_environment(
    spec: &DistSpec,
    seed: u64,
    window: (i64, i64),
) -> Result<Environment, EnvError> {
    Environment::sample(spec, seed, window.0, window.1)
}

/// Two-sided display sum at site `k`: the sum of `ε_i` over `1 ≤ i ≤ k` for
/// positive `k`, over `k ≤ i ≤ -1` for negative `k`, and 0 at the origin.
///
/// This is the literal textbook display of the random potential. Note that
/// its left branch is not the landscape the walk dynamics obey (that one is
/// [`PotentialView::s_raw`], whose increments are `ε_k` at every step); on the
/// left half-line the two differ by a sign and an index shift.
pub fn potential(env: &Environment, k: i64) -> Result<f64, EnvError> {
    if k == 0 {
        return Ok(0.0);
    }
    if !env.contains(k) {
        return Err(EnvError::OutOfWindow(k));
    }
    let mut s = 0.0;
    if k > 0 {
        for i in 1..=k {
            s += env.eps(i)?;
        }
    } else {
        for i in k..=-1 {
            s += env.eps(i)?;
        }
    }
    Ok(s)
}

/// Potential of an environment at a fixed horizon `n`.
///
/// The stored values are the uniform-step prefix sums
/// `S_k - S_{k-1} = ε_k` for every `k ∈ ℤ`, with `S_0 = 0`. This is the
/// landscape the walk rolls downhill in and the convention the birth-death
/// difference-equation solutions require; every valley, barrier and exit
/// computation in the crate runs on it.
pub struct PotentialView<'a> {
    env: &'a Environment,
    n: f64,
    log_n: f64,
    lo: i64,
    hi: i64,
    vals: Vec<f64>,
    const_eps: Option<f64>,
}

impl<'a> PotentialView<'a> {
    pub fn new(env: &'a Environment, n: f64) -> Result<Self, EnvError> {
        if !(n.is_finite() && n > 3.0) {
            return Err(EnvError::HorizonTooSmall(n));
        }
        let log_n = n.ln();
        if env.is_unbounded() {
            let alpha = env.alpha_unchecked(0);
            return Ok(PotentialView {
                env,
                n,
                log_n,
                lo: i64::MIN,
                hi: i64::MAX,
                vals: Vec::new(),
                const_eps: Some(eps_of_alpha(alpha)),
            });
        }
        let (lo, hi) = env.window();
        let len = (hi - lo + 1) as usize;
        let mut vals = vec![0.0f64; len];
        let at = |i: i64| (i - lo) as usize;
        // Outward from the origin in both directions, so values over a larger
        // window agree bit-exactly with those over a smaller one.
        let mut s = 0.0;
        for i in 1..=hi {
            s += env.eps(i)?;
            vals[at(i)] = s;
        }
        let mut w = 0.0;
        for k in (lo..=-1).rev() {
            w -= env.eps(k + 1)?;
            vals[at(k)] = w;
        }
        Ok(PotentialView { env, n, log_n, lo, hi, vals, const_eps: None })
    }

    pub fn env(&self) -> &Environment {
        self.env
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn log_n(&self) -> f64 {
        self.log_n
    }

    pub fn window(&self) -> (i64, i64) {
        (self.lo, self.hi)
    }

    pub fn contains(&self, k: i64) -> bool {
        k >= self.lo && k <= self.hi
    }

    /// Raw potential `S_k` (uniform-step prefix).
    #[inline]
    pub fn s_raw(&self, k: i64) -> f64 {
        if let Some(e) = self.const_eps {
            return k as f64 * e;
        }
        debug_assert!(self.contains(k));
        self.vals[(k - self.lo) as usize]
    }

    /// Normalized potential `S_k / log n`.
    #[inline]
    pub fn sn(&self, k: i64) -> f64 {
        self.s_raw(k) / self.log_n
    }

    /// Normalized drop between two sites, computed once from raw sums.
    #[inline]
    pub fn sn_drop(&self, from: i64, to: i64) -> f64 {
        (self.s_raw(from) - self.s_raw(to)) / self.log_n
    }

    #[inline]
    pub fn alpha(&self, i: i64) -> f64 {
        self.env.alpha_unchecked(i)
    }
}

/// Deterministic scale quantities derived from `(n, γ, κ, σ²)`.
///
/// All logarithms are natural; `log2_n` and `log3_n` are the twice- and
/// thrice-iterated logarithms of `n`, never base-2 or base-3.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DerivedScales {
    pub n: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub sigma2: f64,
    pub log_n: f64,
    pub log2_n: f64,
    pub log3_n: f64,
    /// γ log₂n / log n — the depth margin.
    pub gamma_n: f64,
    /// Block length for the deterministic chopping grid.
    pub b_n: i64,
    /// Number of blocks covering the typical valley extent.
    pub k_n: f64,
    /// `D σ² log k_n` with `D = 1000`.
    pub l_n: f64,
    /// Natural log of `q_n` (the value itself overflows f64 long before the
    /// asymptotic regime).
    pub log_qn: f64,
    /// Barrier-distance bound `L_n`.
    pub l_cap: f64,
    /// `12/κ + 21/2` — admissibility threshold for the localization statement.
    pub gamma0: f64,
    /// `1600²`.
    pub big_gamma: f64,
}

pub const CHOP_D: f64 = 1000.0;
pub const BIG_GAMMA: f64 = 1600.0 * 1600.0;

impl DerivedScales {
    /// Chopping cutoff `l_n b_n` in lattice sites.
    pub fn chop_cutoff(&self) -> f64 {
        self.l_n * self.b_n as f64
    }

    /// `q_n` itself; +inf when past f64 range.
    pub fn q_n(&self) -> f64 {
        self.log_qn.exp()
    }

    /// Normalized inner-barrier threshold `log(q_n (log n)^γ) / log n`.
    pub fn barrier_threshold(&self) -> f64 {
        (self.log_qn + self.gamma * self.log2_n) / self.log_n
    }

    /// Same threshold with the time scale clamped to `q`, for desk-scale runs
    /// where `q_n` exceeds every simulatable horizon.
    pub fn barrier_threshold_clamped(&self, q: f64) -> f64 {
        (self.log_qn.min(q.ln()) + self.gamma * self.log2_n) / self.log_n
    }

    /// Typical valley extent `(σ^{-1} log n)² log₂ n` in sites.
    pub fn extent_bound(&self) -> f64 {
        (self.log_n / self.sigma2.sqrt()).powi(2) * self.log2_n
    }
}

/// Computes every derived scale; requires `n > e^e` so that the iterated
/// logarithms are positive.
pub fn derived_scales(
    n: f64,
    gamma: f64,
    kappa: f64,
    sigma2: f64,
) -> Result<DerivedScales, EnvError> {
    if !(gamma > 0.0 && kappa > 0.0 && sigma2 > 0.0) {
        return Err(EnvError::InvalidSpec(
            "gamma, kappa and sigma^2 must be positive".into(),
        ));
    }
    if !(n.is_finite() && n > std::f64::consts::E.exp()) {
        return Err(EnvError::HorizonTooSmall(n));
    }
    let log_n = n.ln();
    let log2_n = log_n.ln();
    let log3_n = log2_n.ln();
    let sigma = sigma2.sqrt();
    let gamma_n = gamma * log2_n / log_n;
    let b_n = (gamma.sqrt() * (log_n * log2_n).powf(1.5)).floor();
    let k_n = (log_n / sigma).powi(2) * log2_n / b_n;
    let l_n = CHOP_D * sigma2 * k_n.ln();
    let log_qn = ((200.0 * sigma).powi(2) * gamma * log2_n.powf(3.5) * log_n.powf(1.5)).sqrt();
    let l_cap = (8.0 * (gamma * log2_n + log_qn) / sigma).powi(2) * log2_n;
    Ok(DerivedScales {
        n,
        gamma,
        kappa,
        sigma2,
        log_n,
        log2_n,
        log3_n,
        gamma_n,
        b_n: b_n as i64,
        k_n,
        l_n,
        log_qn,
        l_cap,
        gamma0: 12.0 / kappa + 10.5,
        big_gamma: BIG_GAMMA,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn twopoint(p: f64) -> DistSpec {
        DistSpec::TwoPoint { p }
    }

    #[test]
    fn degenerate_two_point_is_rejected() {
        assert!(matches!(
            Environment::sample(&twopoint(0.5), 1, -10, 10),
            Err(EnvError::InvalidSpec(_))
        ));
    }

    #[test]
    fn two_point_moments() {
        let spec = twopoint(0.3);
        let env = Environment::sample(&spec, 1, -10, 10).unwrap();
        let l = (0.7f64 / 0.3).ln();
        assert!((env.moments().sigma2 - l * l).abs() < 1e-15);
        for i in -10..=10 {
            let e = env.eps(i).unwrap();
            assert!((e.abs() - l).abs() < 1e-15);
        }
    }

    #[test]
    fn realization_is_deterministic_across_windows() {
        let spec = twopoint(0.3);
        let small = Environment::sample(&spec, 1, -10, 10).unwrap();
        let big = Environment::sample(&spec, 1, -100, 100).unwrap();
        for i in -10..=10 {
            assert_eq!(small.alpha(i).unwrap().to_bits(), big.alpha(i).unwrap().to_bits());
        }
    }

    #[test]
    fn potential_prefix_relations() {
        let spec = DistSpec::SymmetricUniform { c: 0.1 };
        let env = Environment::sample(&spec, 7, -50, 50).unwrap();
        assert_eq!(potential(&env, 0).unwrap(), 0.0);
        for k in 1..=50 {
            let lhs = potential(&env, k).unwrap() - potential(&env, k - 1).unwrap();
            assert!((lhs - env.eps(k).unwrap()).abs() < 1e-12);
        }
        // Mirrored relation on the left branch: S_k - S_{k+1} = eps_k.
        for k in -50..=-1 {
            let lhs = potential(&env, k).unwrap()
                - if k + 1 == 0 { 0.0 } else { potential(&env, k + 1).unwrap() };
            assert!((lhs - env.eps(k).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn potential_two_sided_examples() {
        // eps_1 = a, eps_2 = b  =>  S_2 = a + b; eps_{-1} = a => S_{-1} = a.
        let spec = twopoint(0.3);
        let env = Environment::sample(&spec, 3, -5, 5).unwrap();
        let a = env.eps(1).unwrap();
        let b = env.eps(2).unwrap();
        assert!((potential(&env, 2).unwrap() - (a + b)).abs() < 1e-15);
        let am = env.eps(-1).unwrap();
        assert!((potential(&env, -1).unwrap() - am).abs() < 1e-15);
    }

    #[test]
    fn view_is_uniform_step_and_matches_display_on_the_right() {
        let spec = twopoint(0.3);
        let env = Environment::sample(&spec, 11, -50, 50).unwrap();
        let pot = PotentialView::new(&env, 1e6).unwrap();
        for k in 0..=50 {
            assert!((pot.s_raw(k) - potential(&env, k).unwrap()).abs() < 1e-12);
        }
        // S_k - S_{k-1} = eps_k at every site, including the left half-line.
        for k in -49..=50i64 {
            let step = pot.s_raw(k) - pot.s_raw(k - 1);
            assert!((step - env.eps(k).unwrap()).abs() < 1e-12, "site {k}");
        }
    }

    #[test]
    fn empirical_sigma2_matches_analytic_within_five_se() {
        let spec = DistSpec::SymmetricUniform { c: 0.1 };
        let n = 1_000_000usize;
        let env = Environment::sample(&spec, 99, -(n as i64) / 2, n as i64 / 2).unwrap();
        let mut sum2 = 0.0;
        let (lo, hi) = env.window();
        for i in lo..=hi {
            let e = env.eps(i).unwrap();
            sum2 += e * e;
        }
        let count = (hi - lo + 1) as f64;
        let emp = sum2 / count;
        let m = env.moments();
        let se = ((m.eps4 - m.sigma2 * m.sigma2) / count).sqrt();
        assert!(
            (emp - m.sigma2).abs() <= 5.0 * se,
            "empirical {emp} vs analytic {} (se {se})",
            m.sigma2
        );
    }

    #[test]
    fn discrete_table_mean_zero_validation() {
        // Asymmetric alphas with weights chosen to center eps.
        let a1 = 0.2f64;
        let a2 = 0.6f64;
        let e1 = ((1.0 - a1) / a1).ln();
        let e2 = ((1.0 - a2) / a2).ln();
        // w1 e1 + w2 e2 = 0, w1 + w2 = 1.
        let w1 = -e2 / (e1 - e2);
        let w2 = 1.0 - w1;
        let ok = DistSpec::DiscreteTable { values: vec![a1, a2], weights: vec![w1, w2] };
        assert!(ok.validate().is_ok());
        let bad = DistSpec::DiscreteTable { values: vec![a1, a2], weights: vec![0.5, 0.5] };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn scales_match_direct_substitution() {
        // log n = e^e so that log2 n = e and log3 n = 1.
        let n = std::f64::consts::E.exp().exp();
        let s = derived_scales(n, 4.0, 1.0, 0.5).unwrap();
        let ee = std::f64::consts::E.exp();
        let expected_bn = (2.0 * (ee * std::f64::consts::E).powf(1.5)).floor() as i64;
        assert_eq!(s.b_n, expected_bn);
        assert!((s.gamma_n - 4.0 * std::f64::consts::E / ee).abs() < 1e-12);
        assert_eq!(s.big_gamma, 2_560_000.0);
        assert!((s.gamma0 - (12.0 + 10.5)).abs() < 1e-15);
        assert!(s.l_n > 0.0 && s.k_n > 0.0 && s.log_qn > 0.0 && s.l_cap > 0.0);
    }

    #[test]
    fn horizon_guard() {
        assert!(matches!(
            derived_scales(10.0, 3.0, 1.0, 0.5),
            Err(EnvError::HorizonTooSmall(_))
        ));
        assert!(derived_scales(20.0, 3.0, 1.0, 0.5).is_ok());
    }

    #[test]
    fn chop_d_is_one_thousand() {
        assert_eq!(CHOP_D, 1000.0);
    }
}
