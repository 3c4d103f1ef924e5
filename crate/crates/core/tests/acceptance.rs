//! Runs every acceptance criterion and prints one line each.
//!
//! `AFFINE_ACCEPT_BUDGET=full` selects the larger budget and
//! `AFFINE_ACCEPT_ONLY=3,4` a subset.

use affine_dim::acceptance::{run_acceptance, AcceptanceOptions, SuiteBudget};

fn main() {
    let budget: SuiteBudget = std::env::var("AFFINE_ACCEPT_BUDGET")
        .ok()
        .map(|b| b.parse().expect("AFFINE_ACCEPT_BUDGET"))
        .unwrap_or_default();
    let only = std::env::var("AFFINE_ACCEPT_ONLY")
        .map(|s| s.split(',').map(|x| x.trim().parse().expect("criterion number")).collect())
        .unwrap_or_default();
    // `cargo test -- --list` and filters aimed at other targets
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    if let Some(filter) = args.iter().find(|a| !a.starts_with('-')) {
        if !"acceptance".contains(filter.as_str()) {
            return;
        }
    }
    let report = run_acceptance(&AcceptanceOptions { budget, tolerance: None, only });
    println!("\nacceptance ({budget:?} budget)");
    println!("{report}");
    if !report.passed() {
        std::process::exit(1);
    }
}
