//! Projection-plus-fibre formulas and the fibre maximum behind them.

use affine_dim::estimate::{formula_dim_a, formula_dim_as, max_fibre_dimension, EstimatorConfig, FibreKind, FormulaOptions};
use affine_dim::gallery::gallery_get;

fn main() -> affine_dim::Result<()> {
    let cfg = EstimatorConfig::default();
    let opts = FormulaOptions::default();
    for name in ["six-map-quarter", "six-map-mixed", "gatzouras-lalley", "pu-surrogate", "ss-esc-N9"] {
        let sys = gallery_get(name)?.system().expect("planar");
        let (fibre, prefix) = max_fibre_dimension(&sys, FibreKind::Assouad, &opts.fibre, &cfg)?;
        let a = formula_dim_a(&sys, &opts, &cfg)?;
        println!("{name}: fibre {:.4} at {}, dimA {:.4} ({:?})", fibre.value, prefix.indices(), a.value, a.tag);
        for t in [0.8, 0.9, 0.95] {
            match formula_dim_as(&sys, t, &opts, &cfg) {
                Ok(s) => println!("    θ = {t}: {:.4} ({:?})", s.value, s.tag),
                Err(e) => println!("    θ = {t}: {e}"),
            }
        }
    }
    Ok(())
}
