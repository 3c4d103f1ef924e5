//! The acceptance suite: ten numbered checks against gallery values.
//!
//! Numeric targets come from [`crate::gallery`] known values; tolerances
//! and scale choices live here.

use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{
    assouad_estimate, box_dimension_estimate, deepest_level, default_thetas, formula_dim_a, formula_dim_as, quasi_assouad_estimate,
    spectrum_estimate, spectrum_levels, AssouadRule, EstimatorConfig, FormulaOptions, SpectrumRule, Tag,
};
use crate::fibres::{check_shift_embedding, enumerate_prefixes, fibre_approximant, fibre_classes, fibre_limit_bound, OmegaPrefix};
use crate::gallery::{gallery_get, gallery_list, phi_lambda, GallerySystem};
use crate::ifs::{AffineMap2D, IFSSystem, Word};
use crate::interval::{pseudo_distance, IntervalUnion};
use crate::oracle;
use crate::rational::{int, rat, to_f64, Rational};
use crate::separation::{esc_delta, exact_overlap_exists, similarity_dimension, t_r_count, projected_cover, wsc_diagnostic, Verdict};
use crate::source::{CoverSource, LinearSource};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteBudget {
    #[default]
    Small,
    Full,
}

impl std::str::FromStr for SuiteBudget {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small" => Ok(SuiteBudget::Small),
            "full" => Ok(SuiteBudget::Full),
            _ => Err(Error::Parse(format!("budget must be small or full, got {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct AcceptanceOptions {
    pub budget: SuiteBudget,
    /// Replaces every numeric tolerance.
    pub tolerance: Option<f64>,
    /// Criterion numbers to run; empty runs all.
    pub only: Vec<u8>,
}

/// One measured value against its target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub label: String,
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub measurements: Vec<Measurement>,
    pub notes: Vec<String>,
    pub seconds: f64,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} criterion {:>2} {:<28} {:>8.2}s", if self.passed { "PASS" } else { "FAIL" }, self.id, self.name, self.seconds)?;
        for m in &self.measurements {
            write!(f, "  {}={:.4} (target {:.4} ±{}){}", m.label, m.value, m.target, m.tolerance, if m.ok { "" } else { " !" })?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceReport {
    pub budget: SuiteBudget,
    pub criteria: Vec<CriterionResult>,
}

impl AcceptanceReport {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> Vec<&CriterionResult> {
        self.criteria.iter().filter(|c| !c.passed).collect()
    }
}

impl fmt::Display for AcceptanceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.criteria {
            writeln!(f, "{c}")?;
            for n in &c.notes {
                writeln!(f, "      {n}")?;
            }
        }
        let failed = self.failed();
        write!(f, "{} of {} criteria passed", self.criteria.len() - failed.len(), self.criteria.len())
    }
}

/// Collects measurements for one criterion.
struct Check {
    id: u8,
    name: &'static str,
    tol_override: Option<f64>,
    measurements: Vec<Measurement>,
    flags: Vec<(String, bool)>,
    notes: Vec<String>,
    start: Instant,
}

impl Check {
    fn new(id: u8, name: &'static str, opts: &AcceptanceOptions) -> Self {
        Check {
            id,
            name,
            tol_override: opts.tolerance,
            measurements: Vec::new(),
            flags: Vec::new(),
            notes: Vec::new(),
            start: Instant::now(),
        }
    }

    fn near(&mut self, label: impl Into<String>, value: f64, target: f64, tolerance: f64) {
        let tolerance = self.tol_override.unwrap_or(tolerance);
        let ok = (value - target).abs() <= tolerance;
        self.measurements.push(Measurement { label: label.into(), value, target, tolerance, ok });
    }

    /// `value ≤ bound + tolerance`.
    fn at_most(&mut self, label: impl Into<String>, value: f64, bound: f64, tolerance: f64) {
        let tolerance = self.tol_override.unwrap_or(tolerance);
        let ok = value <= bound + tolerance;
        self.measurements.push(Measurement { label: label.into(), value, target: bound, tolerance, ok });
    }

    fn flag(&mut self, what: impl Into<String>, ok: bool) {
        let what = what.into();
        if !ok {
            self.notes.push(format!("failed: {what}"));
        }
        self.flags.push((what, ok));
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    fn runtime_below(&mut self, seconds: f64) {
        let t = self.start.elapsed().as_secs_f64();
        self.flag(format!("runtime {t:.3}s below {seconds}s"), t < seconds);
    }

    fn finish(self, outcome: Result<()>) -> CriterionResult {
        let mut notes = self.notes;
        let mut passed = self.measurements.iter().all(|m| m.ok) && self.flags.iter().all(|f| f.1);
        if let Err(e) = outcome {
            passed = false;
            notes.push(format!("error: {e}"));
        }
        CriterionResult {
            id: self.id,
            name: self.name.into(),
            passed,
            measurements: self.measurements,
            notes,
            seconds: self.start.elapsed().as_secs_f64(),
        }
    }
}

fn target(g: &GallerySystem, quantity: &str) -> Result<f64> {
    g.known(quantity)
        .map(|k| k.value)
        .ok_or_else(|| Error::Validation(format!("{} has no known {quantity}", g.name)))
}

type CriterionFn = fn(&mut Check, SuiteBudget) -> Result<()>;

const CRITERIA: [(u8, &str, CriterionFn); 10] = [
    (1, "similarity-dimension", similarity_dimensions),
    (2, "exact-overlap-phi", exact_overlaps),
    (3, "box-phi-quarter", box_phi),
    (4, "theorem-a-six-map", theorem_a),
    (5, "product-law", product_law),
    (6, "quasi-vs-assouad-ss", quasi_vs_assouad),
    (7, "wsc-failure-tag", wsc_tag),
    (8, "symbolic-fibre-invariants", fibre_invariants),
    (9, "estimator-ordering", ordering),
    (10, "oracle-equivalence", oracles),
];

/// Runs the selected criteria in order.
pub fn run_acceptance(opts: &AcceptanceOptions) -> AcceptanceReport {
    let mut criteria = Vec::new();
    for (id, name, f) in CRITERIA {
        if !opts.only.is_empty() && !opts.only.contains(&id) {
            continue;
        }
        let mut c = Check::new(id, name, opts);
        let outcome = f(&mut c, opts.budget);
        criteria.push(c.finish(outcome));
    }
    AcceptanceReport { budget: opts.budget, criteria }
}

pub fn criterion_names() -> Vec<(u8, &'static str)> {
    CRITERIA.iter().map(|(i, n, _)| (*i, *n)).collect()
}

fn similarity_dimensions(c: &mut Check, _: SuiteBudget) -> Result<()> {
    for (name, tol) in [("unit-interval", 1e-12), ("cantor-third", 1e-10)] {
        let g = gallery_get(name)?;
        let ratios: Vec<Rational> = g.projection().iter().map(|s| s.ratio.clone()).collect();
        let t = Instant::now();
        let d = similarity_dimension(&ratios)?;
        let el = t.elapsed().as_secs_f64();
        c.near(name, d, target(&g, "dimB")?, tol);
        c.flag(format!("{name} solve took {:.1}µs, below 1 ms", el * 1e6), el < 1e-3);
    }
    Ok(())
}

fn exact_overlaps(c: &mut Check, _: SuiteBudget) -> Result<()> {
    let witness = (Word::from([0, 2]), Word::from([1, 0]));
    for l in [rat(1, 10), rat(1, 5), rat(1, 4), rat(3, 10), rat(19, 50)] {
        let found = exact_overlap_exists(&phi_lambda(&l), 2)?;
        let ok = found.as_ref() == Some(&(2, witness.clone()));
        c.flag(format!("λ = {l}: witness {found:?}"), ok);
    }
    c.runtime_below(1.0);
    Ok(())
}

fn box_phi(c: &mut Check, _: SuiteBudget) -> Result<()> {
    let g = gallery_get("phi-quarter")?;
    let e = box_dimension_estimate(&*g.source()?, 8, 16, &EstimatorConfig::default())?;
    c.near("box", e.value, target(&g, "dimB")?, 0.05);
    c.runtime_below(30.0);
    Ok(())
}

fn theorem_a(c: &mut Check, _: SuiteBudget) -> Result<()> {
    let g = gallery_get("six-map-quarter")?;
    let sys = g.system().expect("planar");
    let cfg = EstimatorConfig::default();
    let f = formula_dim_a(&sys, &FormulaOptions::default(), &cfg)?;
    c.near("formula", f.value, target(&g, "dimA")?, 0.02);
    c.flag(format!("formula tagged {:?}", f.tag), f.tag == Tag::Equality);
    let ms: Vec<u32> = (0..=8).collect();
    let gaps: Vec<u32> = (1..=8).collect();
    let (a, _) = assouad_estimate(&*g.source()?, &ms, &gaps, AssouadRule::GapSlope, &cfg)?;
    c.near("assouad", a.value, f.value, 0.15);
    c.runtime_below(120.0);
    Ok(())
}

fn product_law(c: &mut Check, budget: SuiteBudget) -> Result<()> {
    let g = gallery_get("cantor-product")?;
    let ms: Vec<u32> = (0..=8).collect();
    let gmax = if budget == SuiteBudget::Full { 14 } else { 12 };
    let gaps: Vec<u32> = (1..=gmax).collect();
    let (a, _) = assouad_estimate(&*g.source()?, &ms, &gaps, AssouadRule::GapSlope, &EstimatorConfig::default())?;
    c.near("assouad", a.value, target(&g, "dimA")?, 0.15);
    c.runtime_below(60.0);
    Ok(())
}

fn quasi_vs_assouad(c: &mut Check, budget: SuiteBudget) -> Result<()> {
    let g = gallery_get("ss-esc-N9")?;
    let sys = g.system().expect("planar");
    let cfg = EstimatorConfig::default();
    let per_gap = if budget == SuiteBudget::Full { 6 } else { 4 };
    let gaps: Vec<u32> = (1..=6).collect();
    let thetas = default_thetas(sys.theta0());
    let q = quasi_assouad_estimate(&*g.source()?, &thetas, &gaps, per_gap, 120, SpectrumRule::Slope, &cfg)?;
    c.near("quasi-assouad", q.value, target(&g, "dimqA")?, 0.15);
    c.note(format!("spectrum by θ: {:?}", q.diagnostics.trend));

    let proj = sys.projected();
    let inv = 1.0 / to_f64(sys.alpha_max());
    let mut scaled = Vec::new();
    for n in 1..=8 {
        let d = esc_delta(&proj, n)?.map(|(d, _)| d);
        let ok = d.as_ref().is_some_and(|d| d > &int(0));
        c.flag(format!("Δ_{n} > 0"), ok);
        scaled.push(d.map_or(0.0, |d| to_f64(&d)) * inv.powi(n as i32));
    }
    let decays = scaled.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)) && scaled[7] < scaled[0];
    let shown: Vec<String> = scaled.iter().map(|x| format!("{x:.3e}")).collect();
    c.flag(format!("Δ_n·9^n non-increasing and decaying: [{}]", shown.join(", ")), decays);

    let f = formula_dim_as(&sys, 0.9, &FormulaOptions::default(), &cfg)?;
    c.near("formula-dimAs(0.9)", f.value, target(&g, "formula-dimAs")?, 0.02);
    c.note("dimA >= 1 for this system rests on near-overlaps at unbounded depth and is not reproduced at finite scales; the Δ_n decay stands in for it");
    Ok(())
}

fn wsc_tag(c: &mut Check, _: SuiteBudget) -> Result<()> {
    let cfg = EstimatorConfig::default();
    let opts = FormulaOptions::default();
    for name in ["pu-surrogate", "six-map-quarter"] {
        let g = gallery_get(name)?;
        let sys = g.system().expect("planar");
        let verdict = wsc_diagnostic(&sys.projected(), &opts.wsc_exponents)?.verdict;
        let f = formula_dim_a(&sys, &opts, &cfg)?;
        let expect = if verdict == Verdict::WscConsistent { Tag::Equality } else { Tag::LowerBoundOnly };
        c.flag(format!("{name}: projection {verdict}, formula tagged {:?}", f.tag), f.tag == expect);
        if let Some(k) = g.known("formula-dimA") {
            c.near(format!("{name} formula"), f.value, k.value, 0.05);
        }
    }
    Ok(())
}

/// Small random dominated systems whose projections share ratios and
/// translations often enough for fibre classes to merge.
pub fn random_systems(count: usize, seed: u64) -> Vec<IFSSystem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let k = rng.gen_range(2..=4);
        let steps = rng.gen_range(2..=3);
        let alpha = rat(1, steps);
        let mut maps = Vec::new();
        for _ in 0..k {
            let beta = rat(1, rng.gen_range(4..=6));
            let u = rat(rng.gen_range(0..steps), steps);
            let v = (int(1) - &beta) * rat(rng.gen_range(0..=8), 8);
            maps.push(AffineMap2D::new(alpha.clone(), beta, u, v).expect("valid by construction"));
        }
        maps.sort();
        maps.dedup();
        if let Ok(s) = IFSSystem::new(maps) {
            out.push(s);
        }
    }
    out
}

fn fibre_invariants(c: &mut Check, budget: SuiteBudget) -> Result<()> {
    let mut systems = vec![("six-map-quarter".to_string(), gallery_get("six-map-quarter")?.system().expect("planar"))];
    for (i, s) in random_systems(10, 0xf1b3).into_iter().enumerate() {
        systems.push((format!("random-{i}"), s));
    }
    let kmax = 6;
    let unit = IntervalUnion::unit();
    let (mut embed, mut bound, mut classes) = (0usize, 0usize, 0usize);
    for (name, sys) in &systems {
        let depth = if budget == SuiteBudget::Full { 2 } else { 1 };
        for p in enumerate_prefixes(sys, depth)? {
            for k in 2..=kmax {
                let pk = OmegaPrefix::periodic(sys, p.indices(), k)?;
                for split in 1..k {
                    embed += 1;
                    if !check_shift_embedding(sys, &pk, split)? {
                        c.flag(format!("{name}: shift embedding at {} split {split}", pk.indices()), false);
                    }
                }
            }
            for k in 1..=kmax - 2 {
                bound += 1;
                let a = fibre_approximant(sys, &OmegaPrefix::periodic(sys, p.indices(), k)?, &unit)?;
                let b = fibre_approximant(sys, &OmegaPrefix::periodic(sys, p.indices(), k + 2)?, &unit)?;
                let d = pseudo_distance(&a, &b)?;
                if d > fibre_limit_bound(sys, &unit, k) {
                    c.flag(format!("{name}: p_H(E_{k}, E_{}) = {d} above bound", k + 2), false);
                }
            }
        }
        for n in 1..=3 {
            classes += 1;
            let total: usize = fibre_classes(sys, n)?.values().map(Vec::len).sum();
            if total != sys.len().pow(n as u32) {
                c.flag(format!("{name}: classes at n = {n} hold {total} words"), false);
            }
        }
    }
    c.note(format!("{} systems; {embed} embeddings, {bound} distance bounds, {classes} class partitions checked", systems.len()));
    c.runtime_below(60.0);
    Ok(())
}

fn ordering(c: &mut Check, budget: SuiteBudget) -> Result<()> {
    let full = budget == SuiteBudget::Full;
    // the maxima over sampled deep windows settle only with many samples
    let cfg = EstimatorConfig { samples: if full { 320 } else { 160 }, ..EstimatorConfig::default() };
    let ceiling = if full { 18 } else { 16 };
    let gaps: Vec<u32> = (1..=8).collect();
    let sm = spectrum_levels(0.9, &gaps, 2, 110);
    let am: Vec<u32> = (0..=16).step_by(2).collect();
    let boxed = |src: &dyn CoverSource| -> Result<f64> {
        let top = deepest_level(src, 8, ceiling, 1 << 16, &cfg);
        Ok(box_dimension_estimate(src, top.saturating_sub(8).max(4), top, &cfg)?.value)
    };
    for g in gallery_list() {
        let src = g.source()?;
        let b = boxed(&*src)?;
        let s = spectrum_estimate(&*src, 0.9, &sm, SpectrumRule::Slope, &cfg)?.value;
        let a = assouad_estimate(&*src, &am, &gaps, AssouadRule::GapSlope, &cfg)?.0.value;
        c.at_most(format!("{} box<=spec", g.name), b, s, 0.05);
        c.at_most(format!("{} spec<=assouad", g.name), s, a, 0.05);
        if g.is_planar() {
            let p = boxed(&LinearSource::new(g.projection())?)?;
            c.at_most(format!("{} <=proj+1", g.name), b.max(s).max(a), p + 1.0, 0.05);
        }
    }
    Ok(())
}

fn oracles(c: &mut Check, budget: SuiteBudget) -> Result<()> {
    let limit: u64 = if budget == SuiteBudget::Full { 10_000 } else { 2_000 };
    let mut compared = 0;
    for g in gallery_list() {
        let proj = g.projection();
        let amax = proj.iter().map(|s| s.ratio.clone()).max().expect("nonempty");
        let mut r = amax.clone();
        while oracle::stopping_word_count(&proj, &r, limit).is_some() {
            let fast = t_r_count(&proj, &r, &projected_cover(&proj, &r)?)?;
            let slow = oracle::t_r(&proj, &r);
            compared += 1;
            if fast != slow {
                c.flag(format!("{}: t_r at r = {r}: {fast} vs oracle {slow}", g.name), false);
            }
            r *= &amax;
            if r < rat(1, 1 << 20) {
                break;
            }
        }
        let mut n = 1;
        while (proj.len() as u64).pow(n as u32) <= limit && n <= 8 {
            let fast = esc_delta(&proj, n)?.map(|(d, _)| d);
            let slow = oracle::delta(&proj, n);
            compared += 1;
            if fast != slow {
                c.flag(format!("{}: Δ_{n}: {fast:?} vs oracle {slow:?}", g.name), false);
            }
            n += 1;
        }
    }
    c.flag(format!("{compared} comparisons"), compared > 0);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_systems_are_seeded_and_valid() {
        let a = random_systems(5, 7);
        let b = random_systems(5, 7);
        assert_eq!(a.len(), 5);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.maps(), y.maps());
        }
    }

    #[test]
    fn zero_tolerance_fails_named_criterion() {
        let opts = AcceptanceOptions { tolerance: Some(0.0), only: vec![3], ..Default::default() };
        let r = run_acceptance(&opts);
        assert!(!r.passed());
        assert_eq!(r.failed()[0].name, "box-phi-quarter");
    }

    #[test]
    fn fast_criteria_pass() {
        let r = run_acceptance(&AcceptanceOptions { only: vec![1, 2], ..Default::default() });
        assert!(r.passed(), "{r}");
        assert_eq!(r.criteria.len(), 2);
    }
}
