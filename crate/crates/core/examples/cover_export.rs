//! Rasterizes an attractor and writes CSV, run-length and PGM files.
//!
//!     cargo run --example cover_export -- [system] [level] [dir]

use std::fs::File;
use std::path::PathBuf;

use affine_dim::cover::{attractor_cover, rasterize, GridCover};
use affine_dim::gallery::gallery_get;
use affine_dim::rational::dyadic;

fn main() -> affine_dim::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "six-map-quarter".into());
    let level: u32 = args.next().map(|s| s.parse().expect("level")).unwrap_or(8);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| std::env::temp_dir().display().to_string()));
    let sys = gallery_get(&name)?.system().expect("planar system");
    let grid = rasterize(&attractor_cover(&sys, &dyadic(level))?, level)?;
    println!("{name} at 2^-{level}: {} cells", grid.len());
    for m in (0..level).rev().step_by(2) {
        println!("    coarsened to 2^-{m}: {}", grid.coarsen(m)?.len());
    }
    std::fs::write(dir.join(format!("{name}.csv")), grid.to_csv())?;
    grid.write_rle(File::create(dir.join(format!("{name}.rle")))?)?;
    grid.write_pgm(File::create(dir.join(format!("{name}.pgm")))?)?;
    let back = GridCover::read_rle(File::open(dir.join(format!("{name}.rle")))?)?;
    assert_eq!(back, grid);
    println!("wrote {name}.{{csv,rle,pgm}} to {}", dir.display());
    Ok(())
}
