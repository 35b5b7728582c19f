//! Locate the basic valley around the origin, chop it into nested
//! refinements, and find the inner barrier points.
//!
//! Run with: cargo run --release --example basic_valley

use sinai::env::{derived_scales, DistSpec, Environment, PotentialView};
use sinai::harness::chop_desk_scale;
use sinai::valleys::{find_basic_valley_auto, inner_barrier_at, Side, DEFAULT_WINDOW_CAP};

fn main() {
    let n = 1e6;
    let gamma = 3.0;
    let spec = DistSpec::TwoPoint { p: 0.3 };
    let scales = derived_scales(n, gamma, 1.0, spec.sigma2()).unwrap();
    println!(
        "n = {n:.0e}: gamma(n) = {:.4}, depth threshold = {:.4}",
        scales.gamma_n,
        1.0 + scales.gamma_n
    );

    for seed in 0..20u64 {
        let env = Environment::sample(&spec, seed, -1024, 1024).unwrap();
        let (env, valley) = match find_basic_valley_auto(&env, &scales, DEFAULT_WINDOW_CAP) {
            Ok(found) => found,
            Err(e) => {
                println!("seed {seed}: {e}");
                continue;
            }
        };
        let pot = PotentialView::new(&env, n).unwrap();
        println!(
            "seed {seed}: valley [{}, {}] bottom {} depth {:.3}",
            valley.m_left, valley.m_right, valley.bottom, valley.depth
        );
        let chain = chop_desk_scale(&pot, &valley, &scales);
        let drops: Vec<String> = (0..=chain.levels(Side::Right))
            .map(|i| format!("{:.3}", chain.delta(&pot, Side::Right, i, i)))
            .collect();
        println!(
            "  right chain: {} level(s), nested drops [{}]",
            chain.levels(Side::Right),
            drops.join(", ")
        );
        // Barrier points at the horizon-clamped threshold.
        let threshold = scales.barrier_threshold_clamped(n);
        if let Ok(b) = inner_barrier_at(&pot, valley.bottom, threshold) {
            println!("  barrier window [{}, {}] at threshold {:.3}", b.m_less, b.m_greater, threshold);
        }
        return;
    }
}
