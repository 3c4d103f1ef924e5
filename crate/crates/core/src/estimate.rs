//! Dimension estimators built on local covering counts, and evaluators for
//! the symbolic dimension formulas.
//!
//! Grid estimators only see finitely many scales. Their outputs are
//! estimates, never bounds, and carry the raw counts they were computed from.

use std::cell::{Cell, RefCell};
use std::collections::BTreeMap;
use std::fmt;
use std::rc::Rc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cover::Window;
use crate::error::{default_cap, Budget, Error, Result};
use crate::fibres::{
    class_fibre_maps, distinct_generators, enumerate_prefixes, fibre_approximant, generator_fibre_systems,
    OmegaPrefix,
};
use crate::ifs::{IFSSystem, Similarity1D, Word};
use crate::interval::IntervalUnion;
use crate::rational::{ln_abs, Rational};
use crate::separation::{
    distinct_similarity_dimension, exact_overlap_exists, level_maps, similarity_dimension, wsc_diagnostic, Verdict,
};
use crate::source::{CoverSource, IntervalSource, LinearSource, LocalCell};

/// Deepest window level a [`Window`] can address.
pub const MAX_LEVEL: u32 = 120;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "theta")]
pub enum Method {
    BoxRegression,
    AssouadSup,
    Spectrum(f64),
    QuasiExtrapolation,
    Formula,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::BoxRegression => f.write_str("box-regression"),
            Method::AssouadSup => f.write_str("assouad-sup"),
            Method::Spectrum(t) => write!(f, "spectrum({t})"),
            Method::QuasiExtrapolation => f.write_str("quasi-extrapolation"),
            Method::Formula => f.write_str("formula"),
        }
    }
}

/// What a formula value claims.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tag {
    /// Plain numerical estimate.
    Estimate,
    /// The separation hypothesis behind the equality looked satisfied.
    Equality,
    /// The hypothesis failed the diagnostic; only the lower bound applies.
    LowerBoundOnly,
}

/// One `(m, n)` cell of a scale-pair matrix: the largest count of level-`n`
/// cells over the level-`m` windows examined.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalePairEntry {
    pub m: u32,
    pub n: u32,
    pub count: u64,
    pub window: Window,
    pub exponent: f64,
    /// Whether every occupied window was examined (otherwise sampled).
    pub exhaustive: bool,
    pub windows: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScalePairMatrix {
    pub entries: Vec<ScalePairEntry>,
}

impl ScalePairMatrix {
    pub fn get(&self, m: u32, n: u32) -> Option<&ScalePairEntry> {
        self.entries.iter().find(|e| e.m == m && e.n == n)
    }

    /// `m,n,window_ix,window_iy,N,exponent` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("m,n,window_ix,window_iy,N,exponent\n");
        for e in &self.entries {
            s.push_str(&format!("{},{},{},{},{},{:.6}\n", e.m, e.n, e.window.ix, e.window.iy, e.count, e.exponent));
        }
        s
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub residuals: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub entries: Vec<ScalePairEntry>,
    /// `(scale or parameter, value)` pairs showing how the estimate moves.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub trend: Vec<(f64, f64)>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub value: f64,
    pub method: Method,
    pub scale_range: (u32, u32),
    pub tag: Tag,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bracket: Option<(f64, f64)>,
    pub diagnostics: Diagnostics,
}

impl DimensionEstimate {
    fn new(value: f64, method: Method, scale_range: (u32, u32)) -> Self {
        DimensionEstimate { value, method, scale_range, tag: Tag::Estimate, bracket: None, diagnostics: Diagnostics::default() }
    }

    fn note(mut self, s: impl Into<String>) -> Self {
        self.diagnostics.notes.push(s.into());
        self
    }
}

/// How many windows to look at and how much work each count may take.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Windows are enumerated exhaustively when at most this many are occupied.
    pub max_windows: usize,
    /// Number of windows drawn otherwise.
    pub samples: usize,
    pub seed: u64,
    /// Work cap for a single window count.
    pub work_cap: u64,
    /// Work cap for building a whole grid at the fine level, which answers
    /// every window of an entry at once.
    pub global_cap: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig { max_windows: 256, samples: 48, seed: 0x5eed, work_cap: default_cap(), global_cap: 1_000_000 }
    }
}

/// Least-squares line `y = a x + b`; returns `(a, b, residuals)`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, Vec<f64>) {
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let a = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    let b = my - a * mx;
    let res = xs.iter().zip(ys).map(|(x, y)| y - (a * x + b)).collect();
    (a, b, res)
}

fn exponent(count: u64, gap: u32) -> f64 {
    if count <= 1 || gap == 0 {
        0.0
    } else {
        (count as f64).log2() / gap as f64
    }
}

fn resource(e: &Error) -> bool {
    matches!(e, Error::Resource { .. })
}

/// Largest level-`n` count over level-`m` windows, ties going to the
/// smallest window.
pub fn scale_pair_entry(src: &dyn CoverSource, m: u32, n: u32, cfg: &EstimatorConfig) -> Result<ScalePairEntry> {
    Counter::new(src, cfg).entry(m, n)
}

/// Shares global grids between entries of one estimate. A grid at level `n`
/// answers every window level at once; once a level is over the cap, deeper
/// levels are not attempted.
struct Counter<'a> {
    src: &'a dyn CoverSource,
    cfg: &'a EstimatorConfig,
    grid: RefCell<Option<(u32, Rc<Vec<LocalCell>>)>>,
    too_big: Cell<u32>,
}

impl<'a> Counter<'a> {
    fn new(src: &'a dyn CoverSource, cfg: &'a EstimatorConfig) -> Self {
        Counter { src, cfg, grid: RefCell::new(None), too_big: Cell::new(63) }
    }

    fn global(&self, n: u32) -> Result<Option<Rc<Vec<LocalCell>>>> {
        if n >= self.too_big.get() {
            return Ok(None);
        }
        if let Some((l, cells)) = self.grid.borrow().as_ref() {
            if *l == n {
                return Ok(Some(cells.clone()));
            }
        }
        let mut b = Budget::new("global grid", self.cfg.global_cap);
        match self.src.local_cells(&Window::unit(), n, &mut b) {
            Ok(cells) => {
                let cells = Rc::new(cells);
                *self.grid.borrow_mut() = Some((n, cells.clone()));
                Ok(Some(cells))
            }
            Err(e) if resource(&e) => {
                self.too_big.set(n);
                Ok(None)
            }
            Err(e) => Err(e),
        }
    }

    fn entry(&self, m: u32, n: u32) -> Result<ScalePairEntry> {
        if n <= m {
            return Err(Error::ScaleOrder(format!("need n > m, got m = {m}, n = {n}")));
        }
        if n > MAX_LEVEL {
            return Err(Error::resource(format!("level {n}"), MAX_LEVEL as u64));
        }
        let gap = n - m;
        if let Some(cells) = self.global(n)? {
            let mut counts: BTreeMap<(u64, u64), u64> = BTreeMap::new();
            for &(x, y) in cells.iter() {
                *counts.entry((x >> gap, y >> gap)).or_default() += 1;
            }
            let windows = counts.len();
            let mut best: Option<((u64, u64), u64)> = None;
            for (&w, &c) in &counts {
                if best.is_none_or(|(_, bc)| c > bc) {
                    best = Some((w, c));
                }
            }
            let ((ix, iy), count) = best.ok_or_else(|| Error::domain("empty set"))?;
            let window = Window { level: m, ix: ix as u128, iy: iy as u128 };
            return Ok(ScalePairEntry { m, n, count, window, exponent: exponent(count, gap), exhaustive: true, windows });
        }
        let (windows, exhaustive) = windows_at(self.src, m, self.cfg)?;
        let mut best: Option<(u64, Window)> = None;
        for w in &windows {
            let mut b = Budget::new("window count", self.cfg.work_cap);
            let c = self.src.count(w, n, &mut b)?;
            if best.as_ref().is_none_or(|(bc, _)| c > *bc) {
                best = Some((c, *w));
            }
        }
        let (count, window) = best.ok_or_else(|| Error::domain("no windows"))?;
        Ok(ScalePairEntry { m, n, count, window, exponent: exponent(count, gap), exhaustive, windows: windows.len() })
    }
}

fn windows_at(src: &dyn CoverSource, m: u32, cfg: &EstimatorConfig) -> Result<(Vec<Window>, bool)> {
    if m <= 62 {
        let mut b = Budget::new("window list", (cfg.max_windows as u64).saturating_mul(64));
        match src.windows(m, &mut b) {
            Ok(ws) if ws.len() <= cfg.max_windows => return Ok((ws, true)),
            Ok(_) => {}
            Err(e) if resource(&e) => {}
            Err(e) => return Err(e),
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (m as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let mut ws: Vec<Window> = (0..cfg.samples).map(|_| src.sample_window(m, &mut rng)).collect();
    ws.sort();
    ws.dedup();
    Ok((ws, false))
}

/// Slope of `log2 N_{2^-n}` against `n`.
pub fn box_dimension_estimate(src: &dyn CoverSource, n_min: u32, n_max: u32, cfg: &EstimatorConfig) -> Result<DimensionEstimate> {
    if n_max < n_min || n_max - n_min + 1 < 5 {
        return Err(Error::domain(format!("box counting needs at least 5 scales, got {n_min}..={n_max}")));
    }
    if n_max > 62 {
        return Err(Error::resource(format!("global grid at level {n_max}"), 62));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for n in n_min..=n_max {
        let mut b = Budget::new("box count", cfg.work_cap);
        let c = src.count(&Window::unit(), n, &mut b)?;
        xs.push(n as f64);
        ys.push((c.max(1) as f64).log2());
    }
    let (a, _, res) = least_squares(&xs, &ys);
    let mut est = DimensionEstimate::new(a.max(0.0), Method::BoxRegression, (n_min, n_max));
    est.diagnostics.residuals = res;
    est.diagnostics.trend = xs.into_iter().zip(ys).collect();
    Ok(est)
}

/// The deepest level in `from..=ceiling` whose global count stays within
/// `max_cells`, or `from` when none does. Levels are tried in order.
pub fn deepest_level(src: &dyn CoverSource, from: u32, ceiling: u32, max_cells: u64, cfg: &EstimatorConfig) -> u32 {
    let mut top = from;
    for n in from..=ceiling.min(62) {
        let mut b = Budget::new("level search", cfg.work_cap.min(max_cells.saturating_mul(64)));
        match src.count(&Window::unit(), n, &mut b) {
            Ok(c) if c <= max_cells => top = n,
            _ => break,
        }
    }
    top
}

/// How a matrix of counts becomes one Assouad number.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssouadRule {
    /// `max_m a(m, m + g)` at the largest gap `g`.
    LargestGap,
    /// Slope in `g` of `max_m log2 N(m, m + g)` over the larger half of the
    /// gaps. A constant factor in the counts cancels, and small gaps, where
    /// counts saturate at `2^g` per axis, are left out.
    #[default]
    GapSlope,
}

/// Matrix of window counts and the Assouad estimate read from it.
pub fn assouad_estimate(
    src: &dyn CoverSource,
    m_values: &[u32],
    gaps: &[u32],
    rule: AssouadRule,
    cfg: &EstimatorConfig,
) -> Result<(DimensionEstimate, ScalePairMatrix)> {
    if m_values.is_empty() || gaps.is_empty() || gaps.contains(&0) {
        return Err(Error::domain("need window levels and positive gaps"));
    }
    let counter = Counter::new(src, cfg);
    let mut pairs: Vec<(u32, u32)> = m_values.iter().flat_map(|&m| gaps.iter().map(move |&g| (m + g, m))).collect();
    pairs.sort();
    let mut matrix = ScalePairMatrix::default();
    for (n, m) in pairs {
        matrix.entries.push(counter.entry(m, n)?);
    }
    matrix.entries.sort_by_key(|e| (e.m, e.n));
    let mut per_gap: Vec<(u32, f64)> = gaps
        .iter()
        .map(|&g| {
            let best = matrix.entries.iter().filter(|e| e.n - e.m == g).map(|e| e.count).max().unwrap_or(1);
            (g, (best.max(1) as f64).log2())
        })
        .collect();
    per_gap.sort_by_key(|p| p.0);
    let g_max = per_gap.last().unwrap().0;
    let sup = matrix.entries.iter().filter(|e| e.n - e.m == g_max).map(|e| e.exponent).fold(0.0, f64::max);
    let value = match rule {
        AssouadRule::LargestGap => sup,
        AssouadRule::GapSlope if per_gap.len() >= 2 => {
            let upper = &per_gap[(per_gap.len() - 1) / 2..];
            let (xs, ys): (Vec<f64>, Vec<f64>) = upper.iter().map(|&(g, l)| (g as f64, l)).unzip();
            least_squares(&xs, &ys).0
        }
        AssouadRule::GapSlope => sup,
    };
    let lo = *m_values.iter().min().unwrap();
    let hi = m_values.iter().max().unwrap() + g_max;
    let mut est = DimensionEstimate::new(value.max(0.0), Method::AssouadSup, (lo, hi))
        .note(format!("rule {rule:?}; largest-gap sup {sup:.4}; a finite-scale lower estimate"));
    est.diagnostics.trend = per_gap.iter().map(|&(g, l)| (g as f64, l)).collect();
    est.diagnostics.entries = matrix.entries.clone();
    Ok((est, matrix))
}

/// `n = ⌈m / θ⌉`.
pub fn spectrum_level(m: u32, theta: f64) -> u32 {
    (m as f64 / theta - 1e-9).ceil() as u32
}

/// Window levels realizing each gap `⌈m/θ⌉ - m` in `gaps`: the first
/// `per_gap` levels for every gap, with `⌈m/θ⌉ ≤ max_level`.
pub fn spectrum_levels(theta: f64, gaps: &[u32], per_gap: usize, max_level: u32) -> Vec<u32> {
    let max_level = max_level.min(MAX_LEVEL);
    let mut out: Vec<u32> = Vec::new();
    for &g in gaps {
        out.extend(
            (1..=max_level)
                .filter(|&m| spectrum_level(m, theta) <= max_level && spectrum_level(m, theta) - m == g)
                .take(per_gap),
        );
    }
    out.sort();
    out.dedup();
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumRule {
    /// `log N / log(R/r)` at the deepest window level.
    Deepest,
    /// With `L(g)` the largest `log2 N` over window levels of gap `g`, the
    /// slope of `L` over the larger half of the gaps.
    #[default]
    Slope,
}

/// Spectrum at `θ` from windows of side `2^-m` and cells of side
/// `2^-⌈m/θ⌉`.
pub fn spectrum_estimate(
    src: &dyn CoverSource,
    theta: f64,
    m_values: &[u32],
    rule: SpectrumRule,
    cfg: &EstimatorConfig,
) -> Result<DimensionEstimate> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::domain(format!("theta = {theta} must lie in (0, 1)")));
    }
    if m_values.len() < 4 {
        return Err(Error::domain("spectrum needs at least 4 window levels"));
    }
    let counter = Counter::new(src, cfg);
    let mut entries = Vec::new();
    let mut ms = m_values.to_vec();
    ms.sort();
    for m in ms {
        let n = spectrum_level(m, theta);
        if n == m {
            continue;
        }
        entries.push(counter.entry(m, n)?);
    }
    let mut per_gap: BTreeMap<u32, f64> = BTreeMap::new();
    for e in &entries {
        let l = (e.count.max(1) as f64).log2();
        let v = per_gap.entry(e.n - e.m).or_insert(l);
        *v = v.max(l);
    }
    if entries.is_empty() || (rule == SpectrumRule::Slope && per_gap.len() < 2) {
        return Err(Error::domain("window levels realize too few gaps for this theta"));
    }
    let deepest = entries.iter().max_by_key(|e| e.m).unwrap().exponent;
    let per_gap: Vec<(f64, f64)> = per_gap.into_iter().map(|(g, l)| (g as f64, l)).collect();
    let upper = &per_gap[(per_gap.len() - 1) / 2..];
    let (xs, ys): (Vec<f64>, Vec<f64>) = upper.iter().copied().unzip();
    let (slope, _, res) = least_squares(&xs, &ys);
    let value = match rule {
        SpectrumRule::Deepest => deepest,
        SpectrumRule::Slope => slope,
    };
    let lo = entries.iter().map(|e| e.m).min().unwrap();
    let hi = entries.iter().map(|e| e.n).max().unwrap();
    let mut est = DimensionEstimate::new(value.clamp(0.0, 2.0), Method::Spectrum(theta), (lo, hi))
        .note(format!("rule {rule:?}; deepest exponent {deepest:.4}; slope {slope:.4}"));
    est.diagnostics.trend = per_gap;
    est.diagnostics.residuals = res;
    est.diagnostics.entries = entries;
    Ok(est)
}

/// `{0.80, 0.85, 0.90, 0.95}` with values below `θ0` removed.
pub fn default_thetas(theta0: f64) -> Vec<f64> {
    [0.80, 0.85, 0.90, 0.95].into_iter().filter(|&t| t >= theta0).collect()
}

/// Spectrum estimates at each `θ`, extrapolated linearly to `θ = 1` through
/// the three largest.
pub fn quasi_assouad_estimate(
    src: &dyn CoverSource,
    thetas: &[f64],
    gaps: &[u32],
    per_gap: usize,
    max_level: u32,
    rule: SpectrumRule,
    cfg: &EstimatorConfig,
) -> Result<DimensionEstimate> {
    if thetas.len() < 3 {
        return Err(Error::domain("quasi-Assouad extrapolation needs at least 3 theta values"));
    }
    if thetas.windows(2).any(|w| w[0] >= w[1]) || thetas.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
        return Err(Error::domain("theta values must increase inside (0, 1)"));
    }
    let mut trend = Vec::new();
    let mut entries = Vec::new();
    let mut range = (u32::MAX, 0);
    for &t in thetas {
        let ms = spectrum_levels(t, gaps, per_gap, max_level);
        let e = spectrum_estimate(src, t, &ms, rule, cfg)?;
        range = (range.0.min(e.scale_range.0), range.1.max(e.scale_range.1));
        trend.push((t, e.value));
        entries.extend(e.diagnostics.entries);
    }
    let top = &trend[trend.len() - 3..];
    let (xs, ys): (Vec<f64>, Vec<f64>) = top.iter().copied().unzip();
    let (a, b, res) = least_squares(&xs, &ys);
    let value = (a + b).max(0.0);
    let mut est = DimensionEstimate::new(value, Method::QuasiExtrapolation, range);
    est.diagnostics.trend = trend;
    est.diagnostics.residuals = res;
    est.diagnostics.entries = entries;
    Ok(est)
}

/// Which fibre dimension to maximize.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "theta")]
pub enum FibreKind {
    Assouad,
    Spectrum(f64),
    Box,
}

/// Depths and scales for fibre estimation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FibreOptions {
    pub prefix_depth: usize,
    /// Finest dyadic level the fibre approximants must resolve.
    pub fibre_level: u32,
    /// Skip the closed-form shortcuts and always measure approximants.
    pub grid_only: bool,
    /// Word depth for the overlap and separation checks behind the shortcuts.
    pub check_depth: usize,
}

impl Default for FibreOptions {
    fn default() -> Self {
        FibreOptions { prefix_depth: 2, fibre_level: 12, grid_only: false, check_depth: 6 }
    }
}

/// Whether the distinct projected generators compose freely up to `depth`.
fn projection_free(system: &IFSSystem, depth: usize) -> Result<bool> {
    let gens: Vec<Similarity1D> = distinct_generators(system).into_iter().map(|(_, s)| s).collect();
    Ok(exact_overlap_exists(&gens, depth)?.is_none())
}

/// Distinct-map growth exponent `log(N_k / N_{k-1}) / log(1/λ)` of an
/// equicontractive system.
fn growth_dimension(maps: &[Similarity1D], k: usize) -> Result<f64> {
    let ratio = &maps[0].ratio;
    let a = level_maps(maps, k - 1)?.len() as f64;
    let b = level_maps(maps, k)?.len() as f64;
    Ok((b / a).ln() / -ln_abs(ratio))
}

/// Maximum symbolic fibre dimension and a prefix attaining it.
///
/// Closed forms are used when they apply: if the projected generators compose
/// freely and every generator's fibred maps have disjoint images of `(0, 1)`,
/// the fibres are self-similar with the open set condition and the maximum is
/// the largest fibred similarity dimension. If instead all generators share
/// one equicontractive fibred system that passes the separation diagnostic,
/// its distinct-map growth rate is used. Otherwise every prefix is measured
/// on two approximants (seeded with `[0, 1]` and with `{0}`) and the bracket
/// midpoint is reported.
pub fn max_fibre_dimension(
    system: &IFSSystem,
    kind: FibreKind,
    opts: &FibreOptions,
    cfg: &EstimatorConfig,
) -> Result<(DimensionEstimate, OmegaPrefix)> {
    let method = match kind {
        FibreKind::Assouad => Method::AssouadSup,
        FibreKind::Spectrum(t) => Method::Spectrum(t),
        FibreKind::Box => Method::BoxRegression,
    };
    let classes = generator_fibre_systems(system);
    let reps = distinct_generators(system);
    let free = !opts.grid_only && projection_free(system, opts.check_depth)?;
    if free && crate::fibres::generator_fibres_osc(system) {
        let mut best = (0.0, reps[0].0);
        for (key, maps) in &classes {
            let d = if maps.len() == 1 {
                0.0
            } else {
                similarity_dimension(&maps.iter().map(|m| m.ratio.clone()).collect::<Vec<_>>())?
            };
            if d > best.0 {
                best = (d, reps.iter().find(|(_, s)| s == key).map(|(i, _)| *i).unwrap());
            }
        }
        let prefix = OmegaPrefix::new(system, Word(vec![best.1; opts.prefix_depth.max(1)]))?;
        let est = DimensionEstimate::new(best.0, method, (0, 0))
            .note("closed form: free projection, fibred systems satisfy the open set condition");
        return Ok((est, prefix));
    }
    let first: Vec<&Vec<Similarity1D>> = classes.values().collect();
    let shared = first.windows(2).all(|w| w[0] == w[1]);
    let equi = first[0].iter().all(|m| m.ratio == first[0][0].ratio);
    if free && shared && equi && first[0].len() > 1 {
        let fib = first[0].clone();
        let sep = wsc_diagnostic(&fib, &(1..=opts.check_depth as u32).collect::<Vec<_>>())?;
        if sep.verdict == Verdict::WscConsistent {
            let k = opts.check_depth + 4;
            let d = growth_dimension(&fib, k)?;
            let prefix = enumerate_prefixes(system, opts.prefix_depth.max(1))?.remove(0);
            let mut est = DimensionEstimate::new(d, method, (k as u32 - 1, k as u32))
                .note("closed form: shared equicontractive fibred system, WSC-consistent; distinct-map growth rate");
            est.diagnostics.trend = (2..=k)
                .map(|j| growth_dimension(&fib, j).map(|v| (j as f64, v)))
                .collect::<Result<_>>()?;
            return Ok((est, prefix));
        }
    }
    if free && !opts.grid_only {
        return periodic_fibre_dimension(system, kind, opts, cfg);
    }
    grid_fibre_dimension(system, kind, opts, cfg)
}

/// With a free projection the class of `p^k` is the `k`-fold product of the
/// class of `p`, so the fibre along `p^∞` is the attractor of the fibre maps
/// of that one class, measured at any depth.
fn periodic_fibre_dimension(
    system: &IFSSystem,
    kind: FibreKind,
    opts: &FibreOptions,
    cfg: &EstimatorConfig,
) -> Result<(DimensionEstimate, OmegaPrefix)> {
    let gaps: Vec<u32> = (1..=8).collect();
    let mut best: Option<(DimensionEstimate, OmegaPrefix)> = None;
    let mut trend = Vec::new();
    for p in enumerate_prefixes(system, opts.prefix_depth.max(1))? {
        let maps = class_fibre_maps(system, p.last_key().expect("nonempty prefix"))?;
        let mut est = if maps.len() == 1 {
            DimensionEstimate::new(0.0, Method::BoxRegression, (0, 0))
        } else {
            let src = LinearSource::new(maps)?;
            match kind {
                FibreKind::Box => {
                    let top = deepest_level(&src, 8, 16, 1 << 16, cfg);
                    box_dimension_estimate(&src, top.saturating_sub(8).max(4), top, cfg)?
                }
                FibreKind::Assouad => {
                    let ms: Vec<u32> = (0..=16).step_by(2).collect();
                    assouad_estimate(&src, &ms, &gaps, AssouadRule::default(), cfg)?.0
                }
                FibreKind::Spectrum(t) => {
                    let ms = spectrum_levels(t, &gaps, 2, MAX_LEVEL - 10);
                    spectrum_estimate(&src, t, &ms, SpectrumRule::default(), cfg)?
                }
            }
        };
        est.diagnostics.notes.push(format!("self-similar fibre along ({})^∞", p.indices()));
        trend.push((trend.len() as f64, est.value));
        if best.as_ref().is_none_or(|(b, _)| est.value > b.value) {
            best = Some((est, p));
        }
    }
    let (mut est, p) = best.ok_or_else(|| Error::domain("no prefixes"))?;
    est.diagnostics.trend = trend;
    Ok((est, p))
}

fn grid_fibre_dimension(
    system: &IFSSystem,
    kind: FibreKind,
    opts: &FibreOptions,
    cfg: &EstimatorConfig,
) -> Result<(DimensionEstimate, OmegaPrefix)> {
    let level = opts.fibre_level;
    // Depth k with β_max^k ≤ 2^-level, so approximants resolve every scale used.
    let target = crate::rational::dyadic(level);
    let mut k = 1usize;
    let mut b = system.beta_max().clone();
    while b > target {
        b *= system.beta_max();
        k += 1;
    }
    let mut best: Option<(DimensionEstimate, OmegaPrefix)> = None;
    let mut trend = Vec::new();
    for p in enumerate_prefixes(system, opts.prefix_depth.max(1))? {
        let deep = OmegaPrefix::periodic(system, p.indices(), k.max(p.len()))?;
        let maps = class_fibre_maps(system, deep.last_key().unwrap())?;
        let outer = IntervalUnion::from_intervals(maps.iter().map(|m| crate::interval::Interval::unit().map(m)));
        let inner = fibre_approximant(system, &deep, &IntervalUnion::point(Rational::from_integer(0.into())))?;
        let a = measure_1d(IntervalSource::new(outer)?, kind, level, cfg)?;
        let c = measure_1d(IntervalSource::new(inner)?, kind, level, cfg)?;
        let (lo, hi) = if a.value <= c.value { (a.value, c.value) } else { (c.value, a.value) };
        let mut est = DimensionEstimate::new(0.5 * (lo + hi), a.method, a.scale_range);
        est.bracket = Some((lo, hi));
        est.diagnostics.notes.push(format!("prefix {} periodically extended to length {}", p.indices(), deep.len()));
        trend.push((trend.len() as f64, est.value));
        if best.as_ref().is_none_or(|(b, _)| est.value > b.value) {
            best = Some((est, p));
        }
    }
    let (mut est, p) = best.ok_or_else(|| Error::domain("no prefixes"))?;
    est.diagnostics.trend = trend;
    Ok((est, p))
}

fn measure_1d(src: IntervalSource, kind: FibreKind, level: u32, cfg: &EstimatorConfig) -> Result<DimensionEstimate> {
    let lo = level.saturating_sub(6).max(1);
    match kind {
        FibreKind::Box => box_dimension_estimate(&src, lo.min(level - 4), level, cfg),
        FibreKind::Assouad => {
            let gmax = (level / 2).max(1);
            let ms: Vec<u32> = (0..=level - gmax).collect();
            let gaps: Vec<u32> = (1..=gmax).collect();
            Ok(assouad_estimate(&src, &ms, &gaps, AssouadRule::default(), cfg)?.0)
        }
        FibreKind::Spectrum(t) => {
            let ms: Vec<u32> = (1..=level).filter(|&m| spectrum_level(m, t) <= level && spectrum_level(m, t) > m).collect();
            if ms.len() < 4 {
                return Err(Error::domain(format!("fibre level {level} too shallow for theta = {t}")));
            }
            spectrum_estimate(&src, t, &ms, SpectrumRule::default(), cfg)
        }
    }
}

/// Dyadic range used for the box dimension of the projection inside the
/// formulas.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormulaOptions {
    pub fibre: FibreOptions,
    pub projection_levels: (u32, u32),
    /// Exponents `e` of the scales `α_max^e` for the separation diagnostic.
    pub wsc_exponents: Vec<u32>,
}

impl Default for FormulaOptions {
    fn default() -> Self {
        FormulaOptions { fibre: FibreOptions::default(), projection_levels: (6, 14), wsc_exponents: (1..=8).collect() }
    }
}

fn distinct_projection(system: &IFSSystem) -> Vec<Similarity1D> {
    distinct_generators(system).into_iter().map(|(_, s)| s).collect()
}

/// `dimA π(K) + max_η dimA E_η`, with `dimA π(K)` read as the box dimension
/// of the projection.
pub fn formula_dim_a(system: &IFSSystem, opts: &FormulaOptions, cfg: &EstimatorConfig) -> Result<DimensionEstimate> {
    let proj = distinct_projection(system);
    let sep = wsc_diagnostic(&proj, &opts.wsc_exponents)?;
    let (lo, hi) = opts.projection_levels;
    let pi = box_dimension_estimate(&LinearSource::new(proj)?, lo, hi, cfg)?;
    let (fib, prefix) = max_fibre_dimension(system, FibreKind::Assouad, &opts.fibre, cfg)?;
    let mut est = DimensionEstimate::new(pi.value + fib.value, Method::Formula, (lo, hi));
    est.tag = if sep.verdict == Verdict::WscConsistent { Tag::Equality } else { Tag::LowerBoundOnly };
    est.diagnostics.notes.push(format!("projection box estimate {:.4}", pi.value));
    est.diagnostics.notes.push(format!("max fibre Assouad estimate {:.4} at prefix {}", fib.value, prefix.indices()));
    est.diagnostics.notes.push(format!("projected system {}", sep.verdict));
    est.diagnostics.notes.extend(fib.diagnostics.notes);
    est.bracket = fib.bracket.map(|(a, b)| (pi.value + a, pi.value + b));
    Ok(est)
}

/// `dimH π(K) + max_η dimAs^θ E_η`, valid for `θ0 ≤ θ < 1`.
pub fn formula_dim_as(system: &IFSSystem, theta: f64, opts: &FormulaOptions, cfg: &EstimatorConfig) -> Result<DimensionEstimate> {
    let theta0 = system.theta0();
    if theta < theta0 - 1e-12 || theta >= 1.0 {
        return Err(Error::ThetaRange { theta, theta0 });
    }
    let proj = distinct_projection(system);
    let sep = wsc_diagnostic(&proj, &opts.wsc_exponents)?;
    let overlap = exact_overlap_exists(&proj, opts.fibre.check_depth)?;
    let (pi, pi_note) = if overlap.is_none() {
        let s = distinct_similarity_dimension(&proj)?.min(1.0);
        (s, "projection: similarity dimension, no exact overlaps found".to_string())
    } else {
        let (lo, hi) = opts.projection_levels;
        let b = box_dimension_estimate(&LinearSource::new(proj.clone())?, lo, hi, cfg)?;
        (b.value, "projection: box estimate, exact overlaps present".to_string())
    };
    let (fib, prefix) = max_fibre_dimension(system, FibreKind::Spectrum(theta), &opts.fibre, cfg)?;
    let mut est = DimensionEstimate::new(pi + fib.value, Method::Formula, opts.projection_levels);
    est.tag = match sep.verdict {
        Verdict::WscConsistent | Verdict::AwscConsistent => Tag::Equality,
        Verdict::Inconclusive => Tag::LowerBoundOnly,
    };
    est.diagnostics.notes.push(format!("{pi_note}: {pi:.4}"));
    est.diagnostics.notes.push(format!("max fibre spectrum estimate {:.4} at prefix {}", fib.value, prefix.indices()));
    est.diagnostics.notes.push(format!("projected system {}", sep.verdict));
    est.diagnostics.notes.extend(fib.diagnostics.notes);
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::AffineMap2D;
    use crate::rational::{int, rat};
    use crate::source::{AttractorSource, ProductSource};

    fn sim(r: Rational, t: Rational) -> Similarity1D {
        Similarity1D::new(r, t)
    }

    fn cantor() -> LinearSource {
        LinearSource::new(vec![sim(rat(1, 3), int(0)), sim(rat(1, 3), rat(2, 3))]).unwrap()
    }

    fn unit() -> IntervalSource {
        IntervalSource::new(IntervalUnion::unit()).unwrap()
    }

    fn six_map(l: Rational) -> IFSSystem {
        let half = rat(1, 2);
        let one = int(1);
        let m = |u: &Rational, v: Rational| AffineMap2D::new(half.clone(), l.clone(), u.clone(), v).unwrap();
        let (a, b) = (int(0), half.clone());
        IFSSystem::new(vec![m(&a, &one - &l), m(&b, &one - &l), m(&a, &l - &l * &l), m(&b, &l - &l * &l), m(&a, int(0)), m(&b, int(0))]).unwrap()
    }

    #[test]
    fn regression_is_exact_on_lines() {
        let (a, b, r) = least_squares(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]);
        assert!((a - 2.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12);
        assert!(r.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn box_on_interval_and_cantor() {
        let cfg = EstimatorConfig::default();
        let e = box_dimension_estimate(&unit(), 4, 10, &cfg).unwrap();
        assert!((e.value - 1.0).abs() < 0.01);
        let c = box_dimension_estimate(&cantor(), 8, 16, &cfg).unwrap();
        assert!((c.value - 2f64.ln() / 3f64.ln()).abs() < 0.02, "{}", c.value);
        assert!(box_dimension_estimate(&unit(), 4, 7, &cfg).is_err());
    }

    #[test]
    fn full_square_assouad_and_spectrum() {
        let cfg = EstimatorConfig::default();
        let sq = ProductSource::new(unit(), unit()).unwrap();
        let (a, m) = assouad_estimate(&sq, &[0, 2, 4], &[1, 2, 3, 4], AssouadRule::LargestGap, &cfg).unwrap();
        assert!((a.value - 2.0).abs() < 0.01);
        assert_eq!(m.entries.len(), 12);
        let s = spectrum_estimate(&sq, 0.7, &[4, 6, 8, 10], SpectrumRule::Deepest, &cfg).unwrap();
        assert!((s.value - 2.0).abs() < 0.02);
    }

    #[test]
    fn spectrum_levels_hit_requested_gaps() {
        let ms = spectrum_levels(0.9, &[2, 3, 4], 2, 120);
        assert_eq!(ms.len(), 6);
        for &m in &ms {
            assert!((2..=4).contains(&(spectrum_level(m, 0.9) - m)));
        }
        assert!(spectrum_levels(0.95, &[7], 1, 120).is_empty());
        assert_eq!(spectrum_level(9, 0.9), 10);
        assert_eq!(spectrum_level(8, 0.8), 10);
    }

    #[test]
    fn entry_prefers_smallest_window_on_ties() {
        let cfg = EstimatorConfig::default();
        let e = scale_pair_entry(&unit(), 2, 4, &cfg).unwrap();
        assert_eq!(e.count, 4);
        assert_eq!(e.window, Window { level: 2, ix: 0, iy: 0 });
        assert!(e.exhaustive);
        assert!(scale_pair_entry(&unit(), 4, 4, &cfg).is_err());
    }

    #[test]
    fn sampled_path_agrees_with_grid_path() {
        let grid = EstimatorConfig::default();
        let sampled = EstimatorConfig { global_cap: 1, max_windows: 0, samples: 400, ..EstimatorConfig::default() };
        let src = AttractorSource::new(six_map(rat(1, 4)));
        let a = scale_pair_entry(&src, 3, 7, &grid).unwrap();
        let b = scale_pair_entry(&src, 3, 7, &sampled).unwrap();
        assert!(!b.exhaustive);
        assert!(b.count <= a.count);
        assert!(b.count * 2 >= a.count);
    }

    #[test]
    fn quasi_needs_three_thetas() {
        let cfg = EstimatorConfig::default();
        assert!(quasi_assouad_estimate(&unit(), &[0.8, 0.9], &[1, 2, 3, 4], 1, 60, SpectrumRule::Slope, &cfg).is_err());
    }

    #[test]
    fn fibre_closed_forms() {
        let cfg = EstimatorConfig::default();
        let opts = FibreOptions::default();
        let (e, _) = max_fibre_dimension(&six_map(rat(1, 4)), FibreKind::Assouad, &opts, &cfg).unwrap();
        let target = ((3.0 + 5f64.sqrt()) / 2.0).ln() / 4f64.ln();
        assert!((e.value - target).abs() < 1e-3, "{}", e.value);
        let gl = IFSSystem::new(vec![
            AffineMap2D::new(rat(1, 2), rat(1, 4), int(0), int(0)).unwrap(),
            AffineMap2D::new(rat(1, 2), rat(1, 4), int(0), rat(3, 4)).unwrap(),
            AffineMap2D::new(rat(1, 2), rat(1, 4), rat(1, 2), int(0)).unwrap(),
            AffineMap2D::new(rat(1, 2), rat(1, 4), rat(1, 2), rat(3, 4)).unwrap(),
        ])
        .unwrap();
        let (e, _) = max_fibre_dimension(&gl, FibreKind::Assouad, &opts, &cfg).unwrap();
        assert!((e.value - 0.5).abs() < 1e-9, "{e:?}");
    }

    #[test]
    fn formula_values() {
        let cfg = EstimatorConfig::default();
        let opts = FormulaOptions::default();
        let e = formula_dim_a(&six_map(rat(1, 4)), &opts, &cfg).unwrap();
        let target = 1.0 + ((3.0 + 5f64.sqrt()) / 2.0).ln() / 4f64.ln();
        assert!((e.value - target).abs() < 0.02, "{}", e.value);
        assert_eq!(e.tag, Tag::Equality);
        let single = IFSSystem::new(vec![AffineMap2D::new(rat(1, 2), rat(1, 4), int(0), int(0)).unwrap()]).unwrap();
        assert!(formula_dim_a(&single, &opts, &cfg).unwrap().value.abs() < 1e-9);
        let s = formula_dim_as(&six_map(rat(1, 4)), 0.75, &opts, &cfg).unwrap();
        assert!((s.value - target).abs() < 0.02);
        assert!(formula_dim_as(&six_map(rat(1, 4)), 0.5, &opts, &cfg).is_ok());
        assert!(matches!(formula_dim_as(&six_map(rat(1, 4)), 0.49, &opts, &cfg), Err(Error::ThetaRange { .. })));
    }
}
