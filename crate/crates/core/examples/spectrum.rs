//! Assouad spectrum on a θ grid and the quasi-Assouad extrapolation for the
//! self-similar carpet with a nearly overlapping projection.
//!
//!     cargo run --release --example spectrum

use affine_dim::estimate::{
    default_thetas, quasi_assouad_estimate, spectrum_estimate, spectrum_levels, EstimatorConfig, SpectrumRule,
};
use affine_dim::gallery::gallery_get;

fn main() -> affine_dim::Result<()> {
    let cfg = EstimatorConfig::default();
    let g = gallery_get("ss-esc-N9")?;
    let sys = g.system().expect("planar");
    let src = g.source()?;
    let gaps: Vec<u32> = (1..=6).collect();
    let thetas = default_thetas(sys.theta0());
    for &t in &thetas {
        let ms = spectrum_levels(t, &gaps, 2, 120);
        let est = spectrum_estimate(&*src, t, &ms, SpectrumRule::Slope, &cfg)?;
        println!("θ = {t:.2}: {:.4} from levels {ms:?}", est.value);
    }
    let qa = quasi_assouad_estimate(&*src, &thetas, &gaps, 4, 120, SpectrumRule::Slope, &cfg)?;
    println!("quasi-Assouad {:.4}", qa.value);
    Ok(())
}
