//! Separation diagnostics for the projection of a few gallery systems:
//! bracketed `t_r`, the verdict, exact overlaps and `Δ_n`.

use affine_dim::gallery::gallery_get;
use affine_dim::rational::to_f64;
use affine_dim::separation::{esc_delta, exact_overlap_exists, similarity_dimension, wsc_diagnostic};

fn main() -> affine_dim::Result<()> {
    for name in ["phi-quarter", "phi-mixed-surrogate", "pu-surrogate", "ss-esc-N9"] {
        let proj = gallery_get(name)?.projection();
        let ratios: Vec<_> = proj.iter().map(|s| s.ratio.clone()).collect();
        println!("{name}: similarity dimension {:.4}", similarity_dimension(&ratios)?);
        let report = wsc_diagnostic(&proj, &[1, 2, 3, 4, 5, 6])?;
        for s in &report.samples {
            println!("    r = {:.3e}  t_r in [{}, {}]", to_f64(&s.r), s.t_r_lower, s.t_r);
        }
        println!("    verdict: {} ({})", report.verdict, report.caveat);
        match exact_overlap_exists(&proj, 4)? {
            Some((n, (a, b))) => println!("    exact overlap at level {n}: {a} = {b}"),
            None => println!("    no exact overlap up to level 4"),
        }
        for n in 1..=5 {
            if let Some((d, _)) = esc_delta(&proj, n)? {
                println!("    Δ_{n} = {:.3e}", to_f64(&d));
            }
        }
    }
    Ok(())
}
