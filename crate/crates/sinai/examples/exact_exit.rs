//! Exact quenched exit computations against a Monte Carlo cross-check.
//!
//! Run with: cargo run --release --example exact_exit

use sinai::env::{DistSpec, Environment, PotentialView};
use sinai::exact::{exit_prob, expected_exit_time_detailed, second_moment_exit_adjacent};
use sinai::harness::empirical_exit_freq;
use sinai::valleys::Side;

fn main() {
    let spec = DistSpec::TwoPoint { p: 0.3 };
    let env = Environment::sample(&spec, 7, -60, 60).unwrap();
    let pot = PotentialView::new(&env, 1e6).unwrap();
    let (a, x, b) = (-25i64, 0i64, 35i64);

    let (p_b, p_a) = exit_prob(&pot, a, x, b).unwrap();
    println!("P[hit {b} first] = {p_b:.12}");
    println!("P[hit {a} first] = {p_a:.12}");
    println!("independent complementarity defect: {:.3e}", (p_b + p_a - 1.0).abs());

    let et = expected_exit_time_detailed(&pot, a, x, b).unwrap();
    println!(
        "E[T] = {:.6e}  ({} digits canceled{})",
        et.value,
        et.canceled_digits.round(),
        if et.used_fallback { ", occupation-time fallback" } else { "" }
    );
    let m2 = second_moment_exit_adjacent(&pot, a, b - 1, Side::Right).unwrap();
    println!("E[T^2] from {} = {:.6e}", a + 1, m2);

    let (freq, se) = empirical_exit_freq(&env, a, x, b, 50_000, 99).unwrap();
    println!("Monte Carlo hit-{b} frequency: {freq:.5} +- {se:.5} (exact {p_b:.5})");

    // Flat landscape: the classical ruin values.
    let flat = Environment::constant(0.5).unwrap();
    let fpot = PotentialView::new(&flat, 1e4).unwrap();
    let (p, _) = exit_prob(&fpot, 0, 3, 10).unwrap();
    let t = expected_exit_time_detailed(&fpot, 0, 3, 10).unwrap().value;
    println!("\nflat control: P = {p:.3} (expect 0.3), E[T] = {t:.3} (expect 21)");
}
