//! Empirical return-time tails to the valley bottom against the per-level
//! computable bounds.
//!
//! Run with: cargo run --release --example return_time_tails

use sinai::env::{derived_scales, DistSpec, Environment, PotentialView};
use sinai::exact::{return_tail_bound, TailBoundInputs};
use sinai::harness::chop_desk_scale;
use sinai::valleys::{find_basic_valley_auto, Side, DEFAULT_WINDOW_CAP};
use sinai::walk::estimate_return_tail;

fn main() {
    let n = 1e6;
    let spec = DistSpec::TwoPoint { p: 0.3 };
    let scales = derived_scales(n, 3.0, 1.0, spec.sigma2()).unwrap();
    let env = Environment::sample(&spec, 11, -1024, 1024).unwrap();
    let (env, valley) = find_basic_valley_auto(&env, &scales, DEFAULT_WINDOW_CAP).unwrap();
    let env = {
        // Roomy window so escaping replicas can overshoot the crest.
        let extent = valley.m_right.max(-valley.m_left);
        env.extended(-4 * extent - 4096, 4 * extent + 4096).unwrap()
    };
    let pot = PotentialView::new(&env, n).unwrap();
    let chain = chop_desk_scale(&pot, &valley, &scales);
    println!(
        "valley [{}, {}] bottom {}, right chain levels: {}",
        valley.m_left,
        valley.m_right,
        valley.bottom,
        chain.levels(Side::Right)
    );

    let grid: Vec<u64> = (0..14).map(|k| 1u64 << k).collect();
    let tail = estimate_return_tail(&env, valley.bottom, 1, &grid, 4000, 23).unwrap();

    println!("\n      q   empirical     level-0 bound   innermost bound");
    let r = chain.levels(Side::Right);
    let outer = TailBoundInputs::from_chain(&pot, &chain, Side::Right, 0).unwrap();
    let inner = TailBoundInputs::from_chain(&pot, &chain, Side::Right, r).unwrap();
    for &(q, emp, _se) in &tail.points {
        let b0 = return_tail_bound(&outer, scales.log_n, q.max(1) as f64).unwrap();
        let br = return_tail_bound(&inner, scales.log_n, q.max(1) as f64).unwrap();
        println!("{q:>7}   {emp:>9.5}   {b0:>13.3e}   {br:>13.3e}");
    }
    println!("\nthe bound is a bound, not a probability: it may exceed 1 at small q");
}
