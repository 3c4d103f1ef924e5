use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use affine_dim::acceptance::{run_acceptance, AcceptanceOptions, SuiteBudget};
use affine_dim::cover::{attractor_cover, rasterize, GridCover, Window};
use affine_dim::error::{default_cap, Budget};
use affine_dim::estimate::{
    assouad_estimate, box_dimension_estimate, default_thetas, formula_dim_a, formula_dim_as, quasi_assouad_estimate,
    spectrum_estimate, spectrum_levels, AssouadRule, DimensionEstimate, EstimatorConfig, FibreOptions, FormulaOptions,
    SpectrumRule,
};
use affine_dim::fibres::{fibre_approximant, FibreExport, OmegaPrefix};
use affine_dim::gallery::{gallery_get, gallery_list, GallerySet, GallerySystem};
use affine_dim::rational::{dyadic, format_rational, rat};
use affine_dim::separation::{delta_csv, esc_delta, wsc_diagnostic, DIAGNOSTIC_CAVEAT};
use affine_dim::{Error, IFSSystem, IntervalUnion, Result, Word};

#[derive(Parser)]
#[command(name = "affine-dim", version, about = "Dimensions of dominated rectangular self-affine sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List gallery systems, or print one as JSON.
    Gallery {
        name: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Estimate one dimension.
    Dim {
        /// Gallery name or path to a system JSON file.
        #[arg(long)]
        system: String,
        #[arg(long, value_enum, default_value_t = MethodArg::Box)]
        method: MethodArg,
        #[arg(long, default_value_t = 0.9)]
        theta: f64,
        /// Deepest window level.
        #[arg(long, default_value_t = 8)]
        depth_m: u32,
        /// Deepest cell level.
        #[arg(long, default_value_t = 16)]
        depth_n: u32,
        #[arg(long, default_value_t = 2)]
        prefix_depth: usize,
        /// Finest dyadic level of fibre approximants.
        #[arg(long, default_value_t = 12)]
        fibre_depth: u32,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Assouad spectrum over a list of θ, with the quasi-Assouad extrapolation.
    Spectrum {
        #[arg(long)]
        system: String,
        /// Comma-separated θ values; defaults to 0.80,0.85,0.90,0.95 clipped by θ0.
        #[arg(long, value_delimiter = ',')]
        thetas: Vec<f64>,
        /// Largest gap n - m.
        #[arg(long, default_value_t = 6)]
        max_gap: u32,
        #[arg(long, default_value_t = 4)]
        per_gap: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Separation diagnostics of the projected system.
    Separation {
        #[arg(long)]
        system: String,
        /// Largest exponent e of the scales r = α_max^e.
        #[arg(long, default_value_t = 8)]
        exponents: u32,
        /// Also compute Δ_n for n = 1..=N.
        #[arg(long)]
        delta: Option<usize>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Export a symbolic fibre approximant.
    Fibre {
        #[arg(long)]
        system: String,
        /// Comma-separated map indices of the prefix.
        #[arg(long, value_delimiter = ',', required = true)]
        prefix: Vec<usize>,
        /// Extend the prefix periodically to this length.
        #[arg(long)]
        depth: Option<usize>,
        /// Seed with the point {0} instead of [0, 1].
        #[arg(long)]
        point_seed: bool,
    },
    /// Rasterize the attractor at level n.
    Cover {
        #[arg(long)]
        system: String,
        #[arg(long)]
        level: u32,
        #[arg(long, value_enum, default_value_t = CoverFormat::Csv)]
        format: CoverFormat,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance suite.
    Accept {
        #[arg(long, default_value = "small")]
        budget: SuiteBudget,
        /// Replace every numeric tolerance.
        #[arg(long)]
        tolerance: Option<f64>,
        /// Comma-separated criterion numbers.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(clap::Args)]
struct OutputArgs {
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    #[arg(long)]
    csv: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Box,
    Assouad,
    Spectrum,
    Qa,
    FormulaA,
    FormulaAs,
}

#[derive(Clone, Copy, ValueEnum)]
enum CoverFormat {
    Csv,
    Rle,
    Pgm,
}

fn load(spec: &str) -> Result<GallerySystem> {
    if let Ok(g) = gallery_get(spec) {
        return Ok(g);
    }
    if !std::path::Path::new(spec).exists() {
        return Err(Error::Validation(format!("{spec:?} is neither a gallery name nor a system file")));
    }
    let sys = IFSSystem::from_path(spec)?;
    Ok(GallerySystem {
        name: spec.to_string(),
        set: GallerySet::Planar { maps: sys.maps().to_vec() },
        known_values: Vec::new(),
        caveats: String::new(),
    })
}

fn planar(g: &GallerySystem) -> Result<IFSSystem> {
    match &g.set {
        GallerySet::Planar { maps } => IFSSystem::new(maps.clone()),
        _ => Err(Error::Validation(format!("{} is not a dominated planar system", g.name))),
    }
}

fn print_estimate(e: &DimensionEstimate, out: &OutputArgs) -> Result<()> {
    if out.json {
        println!("{}", serde_json::to_string_pretty(e)?);
    } else if out.csv {
        let m = affine_dim::estimate::ScalePairMatrix { entries: e.diagnostics.entries.clone() };
        print!("{}", m.to_csv());
    } else {
        println!("{:<12} {:.4}", "value", e.value);
        println!("{:<12} {}", "method", e.method);
        println!("{:<12} {:?}", "tag", e.tag);
        println!("{:<12} {}..{}", "scales", e.scale_range.0, e.scale_range.1);
        if let Some((a, b)) = e.bracket {
            println!("{:<12} [{a:.4}, {b:.4}]", "bracket");
        }
        for (x, y) in &e.diagnostics.trend {
            println!("{:<12} {x:>8.3} {y:.4}", "trend");
        }
        for n in &e.diagnostics.notes {
            println!("{:<12} {n}", "note");
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    let cfg = EstimatorConfig::default();
    match cli.command {
        Command::Gallery { name, json } => match name {
            Some(n) => println!("{}", gallery_get(&n)?.to_json()),
            None if json => println!("{}", serde_json::to_string_pretty(&gallery_list())?),
            None => {
                for g in gallery_list() {
                    println!("{}", g.name);
                    for k in &g.known_values {
                        println!("    {:<14} {:<30} {:.4}  {}", k.quantity, k.expression, k.value, k.note);
                    }
                    if !g.caveats.is_empty() {
                        println!("    caveat: {}", g.caveats);
                    }
                }
            }
        },
        Command::Dim { system, method, theta, depth_m, depth_n, prefix_depth, fibre_depth, out } => {
            let g = load(&system)?;
            if depth_n <= depth_m {
                return Err(Error::ScaleOrder(format!("--depth-n {depth_n} must exceed --depth-m {depth_m}")));
            }
            let src = g.source()?;
            let fopts = FormulaOptions {
                fibre: FibreOptions { prefix_depth, fibre_level: fibre_depth, ..FibreOptions::default() },
                ..FormulaOptions::default()
            };
            let gaps: Vec<u32> = (1..=depth_n - depth_m).collect();
            let est = match method {
                MethodArg::Box => box_dimension_estimate(&*src, depth_n.saturating_sub(8).max(1), depth_n, &cfg)?,
                MethodArg::Assouad => {
                    let ms: Vec<u32> = (0..=depth_m).collect();
                    assouad_estimate(&*src, &ms, &gaps, AssouadRule::GapSlope, &cfg)?.0
                }
                MethodArg::Spectrum => {
                    let ms = spectrum_levels(theta, &gaps, 4, 120);
                    spectrum_estimate(&*src, theta, &ms, SpectrumRule::Slope, &cfg)?
                }
                MethodArg::Qa => {
                    let t0 = g.system().map_or(0.0, |s| s.theta0());
                    quasi_assouad_estimate(&*src, &default_thetas(t0), &gaps, 4, 120, SpectrumRule::Slope, &cfg)?
                }
                MethodArg::FormulaA => formula_dim_a(&planar(&g)?, &fopts, &cfg)?,
                MethodArg::FormulaAs => formula_dim_as(&planar(&g)?, theta, &fopts, &cfg)?,
            };
            print_estimate(&est, &out)?;
        }
        Command::Spectrum { system, thetas, max_gap, per_gap, out } => {
            let g = load(&system)?;
            let src = g.source()?;
            let thetas = if thetas.is_empty() { default_thetas(g.system().map_or(0.0, |s| s.theta0())) } else { thetas };
            let gaps: Vec<u32> = (1..=max_gap).collect();
            if thetas.len() < 3 {
                // too few θ to extrapolate; report the spectrum alone
                let mut rows = Vec::new();
                for &t in &thetas {
                    let ms = spectrum_levels(t, &gaps, per_gap, 120);
                    rows.push(spectrum_estimate(&*src, t, &ms, SpectrumRule::Slope, &cfg)?);
                }
                if out.json {
                    println!("{}", serde_json::to_string_pretty(&rows)?);
                } else {
                    println!("{:>6} {:>8}", "theta", "spectrum");
                    for (t, e) in thetas.iter().zip(&rows) {
                        println!("{t:>6.3} {:>8.4}", e.value);
                    }
                }
                return Ok(ExitCode::SUCCESS);
            }
            let est = quasi_assouad_estimate(&*src, &thetas, &gaps, per_gap, 120, SpectrumRule::Slope, &cfg)?;
            if out.json || out.csv {
                print_estimate(&est, &out)?;
            } else {
                println!("{:>6} {:>8}", "theta", "spectrum");
                for (t, v) in &est.diagnostics.trend {
                    println!("{t:>6.3} {v:>8.4}");
                }
                println!("{:>6} {:>8.4}  (linear extrapolation to θ = 1)", "qA", est.value);
            }
        }
        Command::Separation { system, exponents, delta, out } => {
            let g = load(&system)?;
            let proj = g.projection();
            let exps: Vec<u32> = (1..=exponents).collect();
            let report = wsc_diagnostic(&proj, &exps)?;
            let deltas = match delta {
                Some(n) => (1..=n).map(|k| Ok((k, esc_delta(&proj, k)?.map(|d| d.0)))).collect::<Result<Vec<_>>>()?,
                None => Vec::new(),
            };
            if out.json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else if out.csv {
                print!("{}", report.to_csv());
                if !deltas.is_empty() {
                    print!("{}", delta_csv(&deltas));
                }
            } else {
                println!("verdict: {}", report.verdict);
                println!("{:>4} {:>24} {:>8} {:>8}", "e", "r", "t_r", "lower");
                for s in &report.samples {
                    println!("{:>4} {:>24} {:>8} {:>8}", s.exponent, format_rational(&s.r), s.t_r, s.t_r_lower);
                }
                for (n, d) in &deltas {
                    println!("Δ_{n} = {}", d.as_ref().map_or("none".into(), format_rational));
                }
                eprintln!("{DIAGNOSTIC_CAVEAT}");
            }
        }
        Command::Fibre { system, prefix, depth, point_seed } => {
            let sys = planar(&load(&system)?)?;
            let word = Word(prefix);
            let p = match depth {
                Some(k) => OmegaPrefix::periodic(&sys, &word, k)?,
                None => OmegaPrefix::new(&sys, word)?,
            };
            let seed = if point_seed { IntervalUnion::point(rat(0, 1)) } else { IntervalUnion::unit() };
            let e = fibre_approximant(&sys, &p, &seed)?;
            println!("{}", serde_json::to_string(&FibreExport::new(&p, e))?);
        }
        Command::Cover { system, level, format, out } => {
            let g = load(&system)?;
            let grid = match &g.set {
                GallerySet::Planar { .. } => rasterize(&attractor_cover(&planar(&g)?, &dyadic(level))?, level)?,
                _ => {
                    let mut b = Budget::new("cover", default_cap());
                    GridCover::new(level, g.source()?.local_cells(&Window::unit(), level, &mut b)?)
                }
            };
            let mut w: Box<dyn Write> = match out {
                Some(p) => Box::new(BufWriter::new(File::create(p)?)),
                None => Box::new(BufWriter::new(io::stdout().lock())),
            };
            match format {
                CoverFormat::Csv => w.write_all(grid.to_csv().as_bytes())?,
                CoverFormat::Rle => grid.write_rle(&mut w)?,
                CoverFormat::Pgm => grid.write_pgm(&mut w)?,
            }
            w.flush()?;
        }
        Command::Accept { budget, tolerance, only, json } => {
            let report = run_acceptance(&AcceptanceOptions { budget, tolerance, only });
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                println!("{report}");
            }
            if !report.passed() {
                return Ok(ExitCode::from(4));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
