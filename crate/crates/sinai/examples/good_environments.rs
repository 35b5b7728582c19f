//! Clause-by-clause verdicts on one environment and a small scan of the
//! good-environment probability across horizons.
//!
//! Run with: cargo run --release --example good_environments

use sinai::env::DistSpec;
use sinai::env::Environment;
use sinai::goodenv::{check_good_environment, estimate_good_probability};

fn main() {
    let spec = DistSpec::TwoPoint { p: 0.3 };

    let env = Environment::sample(&spec, 5, -1024, 1024).unwrap();
    let report = check_good_environment(&env, 1e6, 3.0, 1.0).unwrap();
    println!("one environment at n = 1e6:");
    for (name, clause) in report.clauses() {
        let detail = match (clause.witness, clause.threshold) {
            (Some(w), Some(t)) => format!("  (witness {w:.4}, threshold {t:.4})"),
            _ => String::new(),
        };
        println!("  {name:<22} {}{detail}", clause.status.token());
    }
    println!("  overall: {}\n", report.overall);

    // Checking never simulates a walk, so very large horizons stay cheap.
    println!("good-environment probability across horizons (400 environments each):");
    for n in [1e4, 1e6, 1e8, 1e12] {
        let est = estimate_good_probability(&spec, n, 3.0, 1.0, 400, 17).unwrap();
        println!("  n = {n:>6.0e}: {:.3} +- {:.3}", est.p_hat, est.std_error);
    }
}
