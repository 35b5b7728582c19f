//! Sample a random environment, inspect its moments, and walk the potential.
//!
//! Run with: cargo run --release --example environment_basics

use sinai::env::{potential, DistSpec, Environment, PotentialView};

fn main() {
    let spec = DistSpec::TwoPoint { p: 0.3 };
    let env = Environment::sample(&spec, 1, -20, 20).unwrap();
    let m = env.moments();
    println!("sigma^2 = {:.6}, E|eps|^3 = {:.6}, E eps^4 = {:.6}", m.sigma2, m.abs_eps3, m.eps4);
    println!("C(kappa = 1) = {:.6}", spec.c_kappa(1.0));

    // Same seed, larger window: identical values on the overlap.
    let wider = env.extended(-100, 100).unwrap();
    assert_eq!(env.alpha(-20).unwrap(), wider.alpha(-20).unwrap());

    let pot = PotentialView::new(&env, 1e6).unwrap();
    println!("\n  k   alpha_k    S_k      S_k/log n   two-sided display sum");
    for k in -6i64..=6 {
        println!(
            "{k:>3}   {:.4}   {:>8.4}   {:>8.4}   {:>8.4}",
            env.alpha(k).unwrap(),
            pot.s_raw(k),
            pot.sn(k),
            potential(&env, k).unwrap(),
        );
    }
    println!("\nthe display sum differs from the dynamical potential on the left half-line");
}
