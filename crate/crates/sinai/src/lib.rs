//! Quenched analysis and Monte Carlo toolkit for one-dimensional nearest-neighbor
//! random walks in random environment (Sinai's regime).
//!
//! The crate is organized around the objects that drive the localization
//! phenomenology of the recurrent regime:
//!
//! - [`env`] — random environments `α_i ∈ (0,1)`, the random potential, and the
//!   derived scale quantities used everywhere else.
//! - [`valleys`] — valleys of the potential, refinement, the basic valley that
//!   contains the origin, ordered chopping, and inner barrier points.
//! - [`goodenv`] — clause-by-clause verification that an environment is "good",
//!   plus Monte Carlo estimation of the probability of that event.
//! - [`exact`] — exact quenched birth-death computations (exit probabilities,
//!   expected exit times, second moments) in log-domain arithmetic, together
//!   with computable bound evaluators.
//! - [`walk`] — seeded simulation of the walk itself: trajectories, hitting
//!   times, return-time tails, last-return events.
//! - [`harness`] — end-to-end experiments, configuration, and CSV/JSON output.
//!
//! Every random quantity is a pure function of explicit seeds, so all results
//! are bit-reproducible regardless of worker count or evaluation order.

pub mod env;
pub mod exact;
pub mod goodenv;
pub mod harness;
pub mod rng;
pub mod valleys;
pub mod walk;

pub use env::{potential, DerivedScales, DistSpec, Environment, PotentialView};
pub use exact::{
    exit_prob, expected_exit_time, return_tail_bound, second_moment_exit_adjacent,
    theorem_bounds, LogScalar,
};
pub use goodenv::{check_good_environment, estimate_good_probability, GoodEnvReport};
pub use valleys::{
    find_basic_valley, inner_barrier, ordered_chopping, refine, stopping_time_down,
    stopping_time_up, RefinementChain, Side, Valley,
};
pub use walk::{simulate, HitStats, RecordMode, WalkerConfig};
