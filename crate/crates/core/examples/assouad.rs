//! Assouad estimate from the scale-pair matrix of the six-map system and a
//! Cantor product, with the matrix written as CSV.
//!
//!     cargo run --release --example assouad -- [matrix.csv]

use affine_dim::estimate::{assouad_estimate, AssouadRule, EstimatorConfig};
use affine_dim::gallery::gallery_get;

fn main() -> affine_dim::Result<()> {
    let cfg = EstimatorConfig::default();
    let ms: Vec<u32> = (0..=8).collect();
    let gaps: Vec<u32> = (1..=8).collect();
    for name in ["six-map-quarter", "cantor-product"] {
        let g = gallery_get(name)?;
        let (est, matrix) = assouad_estimate(&*g.source()?, &ms, &gaps, AssouadRule::GapSlope, &cfg)?;
        println!("{name}: {:.4} over {} pairs", est.value, matrix.entries.len());
        for (gap, l) in &est.diagnostics.trend {
            println!("    gap {gap}: max log2 N = {l:.3}");
        }
        if let (Some(path), "six-map-quarter") = (std::env::args().nth(1), name) {
            std::fs::write(&path, matrix.to_csv())?;
        }
    }
    Ok(())
}
