//! Containment experiment: the frequency of ever leaving the basic valley
//! within n steps, against the computable bound.
//!
//! Run with: cargo run --release --example containment

use sinai::env::DistSpec;
use sinai::harness::{run_experiment, ExperimentConfig, ExperimentKind};

fn main() {
    let cfg = ExperimentConfig {
        experiment: Some(ExperimentKind::Containment),
        dist: DistSpec::TwoPoint { p: 0.3 },
        n_grid: vec![1e4, 1e5, 1e6],
        gamma: 3.0,
        kappa: 1.0,
        env_replicas: 4,
        walk_replicas: 200,
        master_seed: 2,
        workers: None,
        all_envs: false,
        q_grid: vec![],
        max_env_draws: 0,
        plot: false,
    };
    let out = run_experiment(ExperimentKind::Containment, &cfg).unwrap();
    print!("{}", out.csv);
    println!("\nbound violations: {}", out.violations);
}
