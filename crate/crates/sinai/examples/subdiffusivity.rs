//! Sub-diffusive scaling: median |X_n| against sqrt(n) and (log n)^2, with a
//! flat-environment control.
//!
//! Run with: cargo run --release --example subdiffusivity

use sinai::env::DistSpec;
use sinai::harness::{run_experiment, ExperimentConfig, ExperimentKind};

fn main() {
    let cfg = ExperimentConfig {
        experiment: Some(ExperimentKind::Subdiffusivity),
        dist: DistSpec::TwoPoint { p: 0.3 },
        n_grid: vec![1e3, 1e4, 1e5, 1e6],
        gamma: 3.0,
        kappa: 1.0,
        env_replicas: 50,
        walk_replicas: 20,
        master_seed: 4,
        workers: None,
        all_envs: false,
        q_grid: vec![],
        max_env_draws: 0,
        plot: false,
    };
    let out = run_experiment(ExperimentKind::Subdiffusivity, &cfg).unwrap();
    print!("{}", out.csv);
    println!("\nmedian/sqrt(n) falls for the disordered walk and stays flat for the control");
}
