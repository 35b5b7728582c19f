//! Simulate walks in a quenched environment and watch localization happen.
//!
//! On a good environment the walk finds the valley bottom quickly and ends
//! near it; on arbitrary environments it may sit in a shallower side trap,
//! which is exactly what the good-environment clauses rule out.
//!
//! Run with: cargo run --release --example walk_trajectories

use sinai::env::{derived_scales, DistSpec, Environment};
use sinai::goodenv::check_good_environment;
use sinai::valleys::{find_basic_valley_auto, DEFAULT_WINDOW_CAP};
use sinai::walk::{simulate, RecordMode, WalkerConfig};

fn main() {
    let n = 1e6;
    let spec = DistSpec::TwoPoint { p: 0.3 };
    let scales = derived_scales(n, 3.0, 1.0, spec.sigma2()).unwrap();

    for seed in 0..50u64 {
        let env = Environment::sample(&spec, seed, -1024, 1024).unwrap();
        let Ok((env, valley)) = find_basic_valley_auto(&env, &scales, DEFAULT_WINDOW_CAP) else {
            continue;
        };
        let report = check_good_environment(&env, n, 3.0, 1.0).unwrap();
        if !report.overall {
            continue;
        }
        println!(
            "good environment (seed {seed}): valley [{}, {}] bottom {}",
            valley.m_left, valley.m_right, valley.bottom
        );
        for walk_seed in 0..5u64 {
            let cfg = WalkerConfig {
                start: 0,
                max_steps: n as u64,
                seed: walk_seed,
                record: RecordMode::HittingTimesOnly,
                targets: vec![valley.bottom],
            };
            let stats = simulate(&env, &cfg).unwrap();
            let hit = match stats.hits[0].1 {
                Some(t) => format!("hit bottom at step {t}"),
                None => "never hit bottom".into(),
            };
            println!(
                "  walk {walk_seed}: X_n = {:>5} (|X_n - bottom| = {:>3})  range [{}, {}]  {hit}",
                stats.endpoint,
                (stats.endpoint - valley.bottom).abs(),
                stats.min_pos,
                stats.max_pos
            );
        }
        return;
    }
}
