//! Runs the quick acceptance criteria, or the ones named on the command line.
//!
//!     cargo run --release --example acceptance -- 3 4

use affine_dim::acceptance::{run_acceptance, AcceptanceOptions};

fn main() {
    let mut only: Vec<u8> = std::env::args().skip(1).map(|a| a.parse().expect("criterion number")).collect();
    if only.is_empty() {
        only = vec![1, 2, 3, 8];
    }
    let report = run_acceptance(&AcceptanceOptions { only, ..Default::default() });
    println!("{report}");
    std::process::exit(if report.passed() { 0 } else { 4 });
}
