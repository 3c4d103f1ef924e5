//! Lists the gallery with its reference values, then writes one entry as
//! a system file.
//!
//!     cargo run --example gallery -- [out.json]

use affine_dim::gallery::gallery_list;

fn main() -> affine_dim::Result<()> {
    for g in gallery_list() {
        let kind = if g.is_planar() { "planar" } else { "linear" };
        println!("{:<22} {kind}", g.name);
        for k in &g.known_values {
            println!("    {:<14} {:<22} {:.4}", k.quantity, k.expression, k.value);
        }
        if !g.caveats.is_empty() {
            println!("    caveat: {}", g.caveats);
        }
    }
    if let Some(path) = std::env::args().nth(1) {
        let six = affine_dim::gallery::gallery_get("six-map-quarter")?;
        std::fs::write(&path, six.system().expect("planar").to_json())?;
        println!("wrote {path}");
    }
    Ok(())
}
