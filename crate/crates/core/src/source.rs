//! Local covering counts.
//!
//! Every estimator asks the same question: how many level-`n` dyadic cells
//! does the set occupy inside a level-`m` window? A [`CoverSource`] answers
//! it for one kind of set without building a global grid, so windows can sit
//! far deeper than any grid that fits in memory.
//!
//! Cells follow the half-open partition ([`CellRule::HalfOpen`]) and are
//! returned as offsets from the window's lower-left cell.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap, HashSet};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::cover::Window;
use crate::error::{Budget, Error, Result};
use crate::ifs::{AffineMap2D, IFSSystem, Similarity1D};
use crate::interval::{Interval, IntervalUnion};
use crate::rational::{ceil_dyadic, dyadic, floor_dyadic, Rational};
use crate::separation::projected_cover;

pub type LocalCell = (u64, u64);

/// Largest window-to-cell gap a source will rasterize.
pub const MAX_GAP: u32 = 40;

pub trait CoverSource {
    /// False for subsets of the line, whose cells all have `iy = 0`.
    fn planar(&self) -> bool;

    fn label(&self) -> String;

    /// Occupied level-`n` cells inside `window`, deduplicated, as offsets.
    fn local_cells(&self, window: &Window, n: u32, budget: &mut Budget) -> Result<Vec<LocalCell>>;

    fn count(&self, window: &Window, n: u32, budget: &mut Budget) -> Result<u64> {
        Ok(self.local_cells(window, n, budget)?.len() as u64)
    }

    /// A level-`m` window containing a point of the set, drawn from a
    /// natural probability measure on it.
    fn sample_window(&self, m: u32, rng: &mut ChaCha8Rng) -> Window;

    /// Every occupied level-`m` window.
    fn windows(&self, m: u32, budget: &mut Budget) -> Result<Vec<Window>> {
        let cells = self.local_cells(&Window::unit(), m, budget)?;
        Ok(cells.into_iter().map(|(x, y)| Window { level: m, ix: x as u128, iy: y as u128 }).collect())
    }
}

fn check_scales(window: &Window, n: u32) -> Result<u32> {
    if n < window.level {
        return Err(Error::ScaleOrder(format!("cell level {n} is coarser than window level {}", window.level)));
    }
    let gap = n - window.level;
    if gap > MAX_GAP {
        return Err(Error::resource(format!("window gap {gap}"), MAX_GAP as u64));
    }
    Ok(gap)
}

/// Local half-open cell range of `[a, b]` inside a window axis with index
/// `w` at level `window_level`, or `None` if they miss.
fn local_range(a: &Rational, b: &Rational, n: u32, w: u128, gap: u32) -> Option<(u64, u64)> {
    let top = (BigInt::one() << n) - 1;
    let mut lo = floor_dyadic(a, n);
    let mut hi = if a == b { lo.clone() } else { ceil_dyadic(b, n) - 1 };
    if hi < lo {
        hi = lo.clone();
    }
    if lo > top {
        lo = top.clone();
    }
    if hi > top {
        hi = top;
    }
    let off = BigInt::from(w) << gap;
    let width = BigInt::one() << gap;
    let lo = lo - &off;
    let hi = hi - &off;
    if hi < BigInt::zero() || lo >= width {
        return None;
    }
    let lo = if lo < BigInt::zero() { 0 } else { lo.to_u64().unwrap() };
    let hi = (hi.min(width - 1)).to_u64().unwrap();
    Some((lo, hi))
}

/// Disjoint inclusive runs of cell offsets on one axis.
#[derive(Default)]
struct Runs(BTreeMap<u64, u64>);

impl Runs {
    fn covers(&self, a: u64, b: u64) -> bool {
        self.0.range(..=a).next_back().is_some_and(|(_, &e)| e >= b)
    }

    fn insert(&mut self, a: u64, b: u64) {
        let (mut a, mut b) = (a, b);
        if let Some((&s, &e)) = self.0.range(..=a).next_back() {
            if e.saturating_add(1) >= a {
                a = s;
                b = b.max(e);
            }
        }
        let absorbed: Vec<u64> = self.0.range(a..=b.saturating_add(1)).map(|(&s, _)| s).collect();
        for s in absorbed {
            let e = self.0.remove(&s).unwrap();
            b = b.max(e);
        }
        self.0.insert(a, b);
    }

    fn cells(&self) -> Vec<LocalCell> {
        self.0.iter().flat_map(|(&a, &b)| (a..=b).map(|x| (x, 0))).collect()
    }
}

fn finish(mut cells: Vec<LocalCell>) -> Vec<LocalCell> {
    cells.sort_unstable();
    cells.dedup();
    cells
}

fn cell_of(x: &Rational, level: u32) -> u128 {
    let i = floor_dyadic(x, level);
    let max = (1u128 << level) - 1;
    if i < BigInt::zero() {
        0
    } else {
        i.to_u128().map_or(max, |v| v.min(max))
    }
}

/// The attractor of a planar system, covered by approximate squares.
///
/// For a cell size `δ` the cover uses every distinct `T_σ` with
/// `β_σ ≤ δ < β_{σ⁻}`; inside such a strip the horizontal extent is refined
/// to `S_σ(P)` where `P` is a cover of `π(K)` at relative scale `δ / α_σ`.
pub struct AttractorSource {
    system: IFSSystem,
    projected: Vec<Similarity1D>,
    point: (Rational, Rational),
    strips: RefCell<HashMap<Rational, IntervalUnion>>,
}

impl AttractorSource {
    pub fn new(system: IFSSystem) -> Self {
        let point = system.maps()[0].fixed_point().expect("contraction");
        let projected = system.projected();
        AttractorSource { system, projected, point, strips: RefCell::new(HashMap::new()) }
    }

    pub fn system(&self) -> &IFSSystem {
        &self.system
    }

    fn strip(&self, s: &Rational) -> Result<IntervalUnion> {
        if s >= &Rational::one() {
            return Ok(IntervalUnion::unit());
        }
        if let Some(p) = self.strips.borrow().get(s) {
            return Ok(p.clone());
        }
        let p = projected_cover(&self.projected, s)?;
        self.strips.borrow_mut().insert(s.clone(), p.clone());
        Ok(p)
    }
}

impl CoverSource for AttractorSource {
    fn planar(&self) -> bool {
        true
    }

    fn label(&self) -> String {
        format!("attractor of {} maps", self.system.len())
    }

    fn local_cells(&self, window: &Window, n: u32, budget: &mut Budget) -> Result<Vec<LocalCell>> {
        let gap = check_scales(window, n)?;
        let delta = dyadic(n);
        let (wx0, wx1) = window.x_range();
        let (wy0, wy1) = window.y_range();
        let mut seen: HashSet<AffineMap2D> = HashSet::new();
        let mut cells = Vec::new();
        let mut stack = vec![AffineMap2D::identity()];
        while let Some(t) = stack.pop() {
            for g in self.system.maps() {
                budget.spend(1)?;
                let c = t.compose(g);
                let x1 = &c.u + &c.alpha;
                let y1 = &c.v + &c.beta;
                if x1 < wx0 || c.u > wx1 || y1 < wy0 || c.v > wy1 {
                    continue;
                }
                if !seen.insert(c.clone()) {
                    continue;
                }
                if c.beta > delta {
                    stack.push(c);
                    continue;
                }
                let Some((ylo, yhi)) = local_range(&c.v, &y1, n, window.iy, gap) else {
                    continue;
                };
                let strip = self.strip(&(&delta / &c.alpha))?;
                let s = c.project();
                for iv in strip.intervals() {
                    let m = iv.map(&s);
                    if let Some((xlo, xhi)) = local_range(&m.lo, &m.hi, n, window.ix, gap) {
                        budget.spend((xhi - xlo + 1) * (yhi - ylo + 1))?;
                        for x in xlo..=xhi {
                            for y in ylo..=yhi {
                                cells.push((x, y));
                            }
                        }
                    }
                }
            }
        }
        Ok(finish(cells))
    }

    fn sample_window(&self, m: u32, rng: &mut ChaCha8Rng) -> Window {
        let delta = dyadic(m);
        let maps = self.system.maps();
        let mut t = AffineMap2D::identity();
        while t.alpha > delta {
            t = t.compose(&maps[rng.gen_range(0..maps.len())]);
        }
        let (x, y) = t.apply(&self.point.0, &self.point.1);
        Window { level: m, ix: cell_of(&x, m), iy: cell_of(&y, m) }
    }
}

/// The attractor of a similarity system on the line.
pub struct LinearSource {
    maps: Vec<Similarity1D>,
    point: Rational,
    hull: Option<(Rational, Rational)>,
}

impl LinearSource {
    pub fn new(maps: Vec<Similarity1D>) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::domain("empty similarity system"));
        }
        let point = maps[0].fixed_point().ok_or_else(|| Error::domain("ratio 1 is not a contraction"))?;
        let mut fixed = Vec::with_capacity(maps.len());
        for f in &maps {
            if !f.ratio.is_positive() {
                return Err(Error::domain("linear maps need positive ratios"));
            }
            fixed.push(f.fixed_point().ok_or_else(|| Error::domain("ratio 1 is not a contraction"))?);
        }
        let h0 = fixed.iter().min().unwrap().clone();
        let h1 = fixed.iter().max().unwrap().clone();
        // the images of the hull cover it exactly when the attractor is the hull
        let images = IntervalUnion::from_intervals(maps.iter().map(|f| Interval::new(f.apply(&h0), f.apply(&h1))));
        let solid = images.intervals().len() == 1 && images.intervals()[0] == Interval::new(h0.clone(), h1.clone());
        let hull = solid.then_some((h0, h1));
        Ok(LinearSource { maps, point, hull })
    }

    pub fn maps(&self) -> &[Similarity1D] {
        &self.maps
    }
}

impl CoverSource for LinearSource {
    fn planar(&self) -> bool {
        false
    }

    fn label(&self) -> String {
        format!("linear attractor of {} maps", self.maps.len())
    }

    fn local_cells(&self, window: &Window, n: u32, budget: &mut Budget) -> Result<Vec<LocalCell>> {
        let gap = check_scales(window, n)?;
        if window.iy != 0 {
            return Ok(Vec::new());
        }
        if let Some((h0, h1)) = &self.hull {
            let Some((a, b)) = local_range(h0, h1, n, window.ix, gap) else {
                return Ok(Vec::new());
            };
            budget.spend(b - a + 1)?;
            return Ok((a..=b).map(|x| (x, 0)).collect());
        }
        let delta = dyadic(n);
        let mut seen: HashSet<Similarity1D> = HashSet::new();
        let mut runs = Runs::default();
        let mut stack = vec![Similarity1D::identity()];
        while let Some(t) = stack.pop() {
            for g in &self.maps {
                budget.spend(1)?;
                let c = t.compose(g);
                let (lo, hi) = c.unit_image();
                // descendants only reach cells this image reaches
                let Some((a, b)) = local_range(&lo, &hi, n, window.ix, gap) else {
                    continue;
                };
                if runs.covers(a, b) || !seen.insert(c.clone()) {
                    continue;
                }
                if c.ratio > delta {
                    stack.push(c);
                } else {
                    runs.insert(a, b);
                }
            }
        }
        let cells = runs.cells();
        budget.spend(cells.len() as u64)?;
        Ok(cells)
    }

    fn sample_window(&self, m: u32, rng: &mut ChaCha8Rng) -> Window {
        let delta = dyadic(m);
        let mut t = Similarity1D::identity();
        while t.ratio > delta {
            t = t.compose(&self.maps[rng.gen_range(0..self.maps.len())]);
        }
        Window { level: m, ix: cell_of(&t.apply(&self.point), m), iy: 0 }
    }
}

/// A fixed finite union of intervals, such as a fibre approximant.
pub struct IntervalSource {
    set: IntervalUnion,
}

impl IntervalSource {
    pub fn new(set: IntervalUnion) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::domain("empty interval union"));
        }
        Ok(IntervalSource { set })
    }

    pub fn set(&self) -> &IntervalUnion {
        &self.set
    }
}

impl CoverSource for IntervalSource {
    fn planar(&self) -> bool {
        false
    }

    fn label(&self) -> String {
        format!("union of {} intervals", self.set.len())
    }

    fn local_cells(&self, window: &Window, n: u32, budget: &mut Budget) -> Result<Vec<LocalCell>> {
        let gap = check_scales(window, n)?;
        if window.iy != 0 {
            return Ok(Vec::new());
        }
        let mut cells = Vec::new();
        for iv in self.set.intervals() {
            if let Some((a, b)) = local_range(&iv.lo, &iv.hi, n, window.ix, gap) {
                budget.spend(b - a + 1)?;
                cells.extend((a..=b).map(|x| (x, 0)));
            }
        }
        Ok(finish(cells))
    }

    fn sample_window(&self, m: u32, rng: &mut ChaCha8Rng) -> Window {
        let ivs = self.set.intervals();
        let iv: &Interval = &ivs[rng.gen_range(0..ivs.len())];
        let d = BigInt::from(1u64 << 20);
        let t = Rational::new(BigInt::from(rng.gen_range(0..=1u64 << 20)), d);
        let x = &iv.lo + t * iv.width();
        Window { level: m, ix: cell_of(&x, m), iy: 0 }
    }
}

/// `A × B` for two linear sets. Counts multiply, so no planar cells are
/// materialized by [`CoverSource::count`].
pub struct ProductSource<A, B> {
    pub x: A,
    pub y: B,
}

impl<A: CoverSource, B: CoverSource> ProductSource<A, B> {
    pub fn new(x: A, y: B) -> Result<Self> {
        if x.planar() || y.planar() {
            return Err(Error::domain("product factors must be linear"));
        }
        Ok(ProductSource { x, y })
    }
}

fn axis(w: &Window, i: u128) -> Window {
    Window { level: w.level, ix: i, iy: 0 }
}

impl<A: CoverSource, B: CoverSource> CoverSource for ProductSource<A, B> {
    fn planar(&self) -> bool {
        true
    }

    fn label(&self) -> String {
        format!("product of ({}) and ({})", self.x.label(), self.y.label())
    }

    fn local_cells(&self, window: &Window, n: u32, budget: &mut Budget) -> Result<Vec<LocalCell>> {
        let xs = self.x.local_cells(&axis(window, window.ix), n, budget)?;
        let ys = self.y.local_cells(&axis(window, window.iy), n, budget)?;
        budget.spend((xs.len() * ys.len()) as u64)?;
        Ok(xs.iter().flat_map(|&(x, _)| ys.iter().map(move |&(y, _)| (x, y))).collect())
    }

    fn count(&self, window: &Window, n: u32, budget: &mut Budget) -> Result<u64> {
        let a = self.x.count(&axis(window, window.ix), n, budget)?;
        if a == 0 {
            return Ok(0);
        }
        Ok(a * self.y.count(&axis(window, window.iy), n, budget)?)
    }

    fn sample_window(&self, m: u32, rng: &mut ChaCha8Rng) -> Window {
        let a = self.x.sample_window(m, rng);
        let b = self.y.sample_window(m, rng);
        Window { level: m, ix: a.ix, iy: b.ix }
    }

    fn windows(&self, m: u32, budget: &mut Budget) -> Result<Vec<Window>> {
        let xs = self.x.windows(m, budget)?;
        let ys = self.y.windows(m, budget)?;
        budget.spend((xs.len() * ys.len()) as u64)?;
        Ok(xs.iter().flat_map(|a| ys.iter().map(move |b| Window { level: m, ix: a.ix, iy: b.ix })).collect())
    }
}

impl<T: CoverSource + ?Sized> CoverSource for Box<T> {
    fn planar(&self) -> bool {
        (**self).planar()
    }
    fn label(&self) -> String {
        (**self).label()
    }
    fn local_cells(&self, window: &Window, n: u32, budget: &mut Budget) -> Result<Vec<LocalCell>> {
        (**self).local_cells(window, n, budget)
    }
    fn count(&self, window: &Window, n: u32, budget: &mut Budget) -> Result<u64> {
        (**self).count(window, n, budget)
    }
    fn sample_window(&self, m: u32, rng: &mut ChaCha8Rng) -> Window {
        (**self).sample_window(m, rng)
    }
    fn windows(&self, m: u32, budget: &mut Budget) -> Result<Vec<Window>> {
        (**self).windows(m, budget)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cover::{attractor_cover, rasterize_with, CellRule};
    use crate::rational::{int, rat};
    use rand::SeedableRng;

    fn six_map(l: Rational) -> IFSSystem {
        let half = rat(1, 2);
        let one = int(1);
        let m = |u: &Rational, v: Rational| AffineMap2D::new(half.clone(), l.clone(), u.clone(), v).unwrap();
        let (a, b) = (int(0), half.clone());
        IFSSystem::new(vec![m(&a, &one - &l), m(&b, &one - &l), m(&a, &l - &l * &l), m(&b, &l - &l * &l), m(&a, int(0)), m(&b, int(0))]).unwrap()
    }

    fn big() -> Budget {
        Budget::new("test", 1 << 30)
    }

    #[test]
    fn six_map_global_count_matches_cylinder_raster() {
        // With dyadic parameters the approximate squares at even levels are
        // exactly the level-k cylinders, so both covers agree.
        let sys = six_map(rat(1, 4));
        let src = AttractorSource::new(sys.clone());
        for k in 1..=3u32 {
            let n = 2 * k;
            let cells = src.local_cells(&Window::unit(), n, &mut big()).unwrap();
            let cyl = attractor_cover(&sys, &dyadic(n)).unwrap();
            let g = rasterize_with(&cyl, n, CellRule::HalfOpen, 1 << 30).unwrap();
            // Cylinders at α ≤ 2^-n are finer than the approximate squares,
            // so their raster can only be smaller.
            assert!(g.len() <= cells.len(), "n = {n}");
            let coarse = src.local_cells(&Window::unit(), k, &mut big()).unwrap();
            assert!(coarse.len() <= cells.len());
        }
    }

    #[test]
    fn window_counts_sum_to_global() {
        let src = AttractorSource::new(six_map(rat(1, 4)));
        let n = 8;
        let global = src.local_cells(&Window::unit(), n, &mut big()).unwrap();
        let mut total = 0;
        for w in src.windows(3, &mut big()).unwrap() {
            let local = src.local_cells(&w, n, &mut big()).unwrap();
            total += local.len();
            for &(x, y) in &local {
                let gx = ((w.ix as u64) << 5) + x;
                let gy = ((w.iy as u64) << 5) + y;
                assert!(global.binary_search(&(gx, gy)).is_ok());
            }
        }
        assert_eq!(total, global.len());
    }

    #[test]
    fn full_square_counts() {
        let sq = IFSSystem::new(
            (0..2)
                .flat_map(|i| (0..4).map(move |j| (i, j)))
                .map(|(i, j)| AffineMap2D::new(rat(1, 2), rat(1, 4), rat(i, 2), rat(j, 4)).unwrap())
                .collect(),
        )
        .unwrap();
        let src = AttractorSource::new(sq);
        assert_eq!(src.count(&Window::unit(), 6, &mut big()).unwrap(), 4096);
        let w = Window { level: 3, ix: 5, iy: 2 };
        assert_eq!(src.count(&w, 7, &mut big()).unwrap(), 256);
    }

    #[test]
    fn linear_counts() {
        let halves = LinearSource::new(vec![Similarity1D::new(rat(1, 2), int(0)), Similarity1D::new(rat(1, 2), rat(1, 2))]).unwrap();
        for n in 0..10 {
            assert_eq!(halves.count(&Window::unit(), n, &mut big()).unwrap(), 1 << n);
        }
        let cantor = LinearSource::new(vec![Similarity1D::new(rat(1, 3), int(0)), Similarity1D::new(rat(1, 3), rat(2, 3))]).unwrap();
        let c = cantor.count(&Window::unit(), 10, &mut big()).unwrap();
        // The 128 level-7 intervals (3^-7 < 2^-10) meet one or two cells each,
        // and a cell holds at most two of them.
        assert!((64..=256).contains(&c), "{c}");
        assert_eq!(cantor.count(&Window { level: 3, ix: 3, iy: 0 }, 8, &mut big()).unwrap(), 0);
    }

    #[test]
    fn interval_and_product_counts() {
        let unit = IntervalSource::new(IntervalUnion::unit()).unwrap();
        let half = IntervalSource::new(IntervalUnion::single(int(0), rat(1, 2))).unwrap();
        let p = ProductSource::new(unit, half).unwrap();
        assert_eq!(p.count(&Window::unit(), 4, &mut big()).unwrap(), 16 * 8);
        assert_eq!(p.local_cells(&Window::unit(), 4, &mut big()).unwrap().len(), 128);
        assert_eq!(p.windows(1, &mut big()).unwrap().len(), 2);
        assert_eq!(p.count(&Window { level: 1, ix: 1, iy: 1 }, 3, &mut big()).unwrap(), 0);
    }

    #[test]
    fn deep_windows_beyond_u64() {
        let unit = IntervalSource::new(IntervalUnion::unit()).unwrap();
        let w = Window { level: 90, ix: (1u128 << 90) - 1, iy: 0 };
        assert_eq!(unit.count(&w, 95, &mut big()).unwrap(), 32);
        assert!(unit.count(&w, 89, &mut big()).is_err());
    }

    #[test]
    fn sampled_windows_are_occupied() {
        let src = AttractorSource::new(six_map(rat(1, 4)));
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let w = src.sample_window(6, &mut rng);
            assert!(src.count(&w, 8, &mut big()).unwrap() > 0);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let src = AttractorSource::new(six_map(rat(1, 4)));
        let mut b = Budget::new("tiny", 100);
        assert!(matches!(src.count(&Window::unit(), 10, &mut b), Err(Error::Resource { .. })));
    }
}
