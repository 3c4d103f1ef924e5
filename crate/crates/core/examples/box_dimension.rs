//! Box-counting regression on a few linear and planar sets.

use affine_dim::estimate::{box_dimension_estimate, EstimatorConfig};
use affine_dim::gallery::gallery_get;

fn main() -> affine_dim::Result<()> {
    let cfg = EstimatorConfig::default();
    for (name, lo, hi) in [("cantor-third", 6, 16), ("phi-quarter", 8, 16), ("gatzouras-lalley", 4, 12), ("six-map-quarter", 4, 10)] {
        let g = gallery_get(name)?;
        let est = box_dimension_estimate(&*g.source()?, lo, hi, &cfg)?;
        let target = g.known("dimB").map(|k| format!("{:.4}", k.value)).unwrap_or_else(|| "-".into());
        println!("{name:<18} {:.4}  (reference {target})", est.value);
        for (n, log_n) in &est.diagnostics.trend {
            println!("    n = {n:>2}  log2 N = {log_n:.3}");
        }
    }
    Ok(())
}
