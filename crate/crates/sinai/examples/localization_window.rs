//! Localization at desk scale: the literal theorem event is empty (its
//! half-width dwarfs the walk's range), while the barrier window at the
//! horizon-clamped time scale captures the endpoints.
//!
//! Run with: cargo run --release --example localization_window

use sinai::env::DistSpec;
use sinai::harness::{run_experiment, ExperimentConfig, ExperimentKind};

fn main() {
    let cfg = ExperimentConfig {
        experiment: Some(ExperimentKind::Localization),
        dist: DistSpec::TwoPoint { p: 0.3 },
        n_grid: vec![1e5],
        gamma: 23.5, // admissible for the localization statement (kappa = 1)
        kappa: 1.0,
        env_replicas: 3,
        walk_replicas: 200,
        master_seed: 6,
        workers: None,
        // At this gamma no simulatable environment passes the extent clause,
        // so the run covers all environments with a basic valley.
        all_envs: true,
        q_grid: vec![],
        max_env_draws: 500,
        plot: false,
    };
    let out = run_experiment(ExperimentKind::Localization, &cfg).unwrap();
    print!("{}", out.csv);
    println!("\ntheorem_exceed_freq is identically 0: the event needs ~1e11 sites of range.");
    println!("At this gamma even the valley bottom sits thousands of sites out while the");
    println!("walk ranges ~(log n)^2, so the barrier column is 0 too; localization at");
    println!("reachable horizons is what the containment experiment shows at gamma = 3.");
}
