//! Outer covers of the attractor, its projection and its vertical slices,
//! dyadic grids and their exports.

use std::collections::HashSet;
use std::io::{Read, Write};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{default_cap, Budget, Error, Result};
use crate::ifs::{stopping_words_capped, AffineMap2D, IFSSystem};
use crate::interval::{Interval, IntervalUnion};
use crate::rational::{ceil_dyadic, clamp_index, floor_dyadic, in_open_unit, Rational};
use crate::separation::projected_cover;

/// Axis-parallel rectangle `[x0, x0 + width] × [y0, y0 + height]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    #[serde(with = "crate::rational::serde_str")]
    pub x0: Rational,
    #[serde(with = "crate::rational::serde_str")]
    pub y0: Rational,
    #[serde(with = "crate::rational::serde_str")]
    pub width: Rational,
    #[serde(with = "crate::rational::serde_str")]
    pub height: Rational,
}

impl Rect {
    pub fn image(t: &AffineMap2D) -> Rect {
        Rect { x0: t.u.clone(), y0: t.v.clone(), width: t.alpha.clone(), height: t.beta.clone() }
    }

    pub fn unit() -> Rect {
        Rect { x0: Rational::zero(), y0: Rational::zero(), width: Rational::one(), height: Rational::one() }
    }

    pub fn x1(&self) -> Rational {
        &self.x0 + &self.width
    }

    pub fn y1(&self) -> Rational {
        &self.y0 + &self.height
    }

    pub fn area(&self) -> Rational {
        &self.width * &self.height
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        self.x0 <= other.x0 && other.x1() <= self.x1() && self.y0 <= other.y0 && other.y1() <= self.y1()
    }
}

/// Cylinder rectangles `T_σ([0,1]²)` over a stopping set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RectCover {
    pub rects: Vec<Rect>,
}

/// `{T_σ([0,1]²) : σ ∈ Λ_r}`.
pub fn attractor_cover(system: &IFSSystem, r: &Rational) -> Result<RectCover> {
    attractor_cover_capped(system, r, default_cap())
}

pub fn attractor_cover_capped(system: &IFSSystem, r: &Rational, cap: u64) -> Result<RectCover> {
    let words = stopping_words_capped(&system.alphas(), r, cap)?;
    let rects = words
        .iter()
        .map(|w| system.compose_word(w).map(|t| Rect::image(&t)))
        .collect::<Result<_>>()?;
    Ok(RectCover { rects })
}

/// Which grid cells an interval `[a, b]` occupies at level `n`.
///
/// `Closed` takes every cell `[i, i+1]·2^-n` meeting the interval, so a
/// touching endpoint adds a neighbour. `HalfOpen` uses the partition into
/// `[i, i+1)·2^-n` (the last cell closed), which is still a cover but never
/// double counts an aligned endpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellRule {
    #[default]
    Closed,
    HalfOpen,
}

/// Inclusive cell index range of `[a, b] ⊆ [0, 1]` at level `n`.
pub fn cell_range(a: &Rational, b: &Rational, n: u32, rule: CellRule) -> (u64, u64) {
    let max = (1u64 << n) - 1;
    let clamp = |i: BigInt| clamp_index(&i, max);
    match rule {
        CellRule::Closed => (clamp(ceil_dyadic(a, n) - 1), clamp(floor_dyadic(b, n))),
        CellRule::HalfOpen => {
            let lo = clamp(floor_dyadic(a, n));
            let hi = if a == b { lo } else { clamp(ceil_dyadic(b, n) - 1).max(lo) };
            (lo, hi)
        }
    }
}

/// Occupied cells of side `2^-n`, sorted and deduplicated. For linear sets
/// every `iy` is 0.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridCover {
    pub scale_exponent: u32,
    pub cells: Vec<(u64, u64)>,
}

impl GridCover {
    pub fn new(scale_exponent: u32, mut cells: Vec<(u64, u64)>) -> Self {
        cells.sort_unstable();
        cells.dedup();
        GridCover { scale_exponent, cells }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// The grid at a coarser level `m ≤ n`; exact for both cell rules.
    pub fn coarsen(&self, m: u32) -> Result<GridCover> {
        if m > self.scale_exponent {
            return Err(Error::ScaleOrder(format!(
                "cannot coarsen level {} to finer level {m}",
                self.scale_exponent
            )));
        }
        let s = self.scale_exponent - m;
        Ok(GridCover::new(m, self.cells.iter().map(|&(x, y)| (x >> s, y >> s)).collect()))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("ix,iy\n");
        for (x, y) in &self.cells {
            s.push_str(&format!("{x},{y}\n"));
        }
        s
    }

    /// Run-length binary: magic `ADG1`, `u32` level, `u64` run count, then
    /// `(iy, ix_start, len)` triples of `u64`, all little endian.
    pub fn write_rle(&self, mut w: impl Write) -> Result<()> {
        let runs = self.runs();
        w.write_all(RLE_MAGIC)?;
        w.write_all(&self.scale_exponent.to_le_bytes())?;
        w.write_all(&(runs.len() as u64).to_le_bytes())?;
        for (y, x, len) in runs {
            for v in [y, x, len] {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_rle(mut r: impl Read) -> Result<GridCover> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != RLE_MAGIC {
            return Err(Error::Parse("not a grid RLE file".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let n = u32::from_le_bytes(b4);
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let count = u64::from_le_bytes(b8);
        let mut cells = Vec::new();
        for _ in 0..count {
            let mut v = [0u64; 3];
            for x in v.iter_mut() {
                r.read_exact(&mut b8)?;
                *x = u64::from_le_bytes(b8);
            }
            let [y, x0, len] = v;
            cells.extend((x0..x0 + len).map(|x| (x, y)));
        }
        Ok(GridCover::new(n, cells))
    }

    fn runs(&self) -> Vec<(u64, u64, u64)> {
        let mut by_row: Vec<(u64, u64)> = self.cells.iter().map(|&(x, y)| (y, x)).collect();
        by_row.sort_unstable();
        let mut runs: Vec<(u64, u64, u64)> = Vec::new();
        for (y, x) in by_row {
            match runs.last_mut() {
                Some((ry, rx, len)) if *ry == y && *rx + *len == x => *len += 1,
                _ => runs.push((y, x, 1)),
            }
        }
        runs
    }

    /// Binary PGM (`P5`), occupied cells black, top row is the largest `iy`.
    /// Linear covers are drawn as a single row.
    pub fn write_pgm(&self, mut w: impl Write) -> Result<()> {
        if self.scale_exponent > MAX_PGM_LEVEL {
            return Err(Error::resource(format!("PGM at level {}", self.scale_exponent), 1 << MAX_PGM_LEVEL));
        }
        let side = 1usize << self.scale_exponent;
        let height = if self.cells.iter().all(|c| c.1 == 0) { 1 } else { side };
        let mut img = vec![255u8; side * height];
        for &(x, y) in &self.cells {
            let row = height - 1 - y as usize;
            img[row * side + x as usize] = 0;
        }
        write!(w, "P5\n{side} {height}\n255\n")?;
        w.write_all(&img)?;
        Ok(())
    }
}

const RLE_MAGIC: &[u8; 4] = b"ADG1";
pub const MAX_PGM_LEVEL: u32 = 12;

/// Grid cells meeting some rectangle of the cover.
pub fn rasterize(cover: &RectCover, n: u32) -> Result<GridCover> {
    rasterize_with(cover, n, CellRule::Closed, default_cap())
}

pub fn rasterize_with(cover: &RectCover, n: u32, rule: CellRule, cap: u64) -> Result<GridCover> {
    if cover.rects.is_empty() {
        return Err(Error::domain("empty rectangle cover"));
    }
    if n > 62 {
        return Err(Error::resource(format!("grid level {n}"), 62));
    }
    let mut budget = Budget::new("grid cells", cap);
    let mut cells = Vec::new();
    for rect in &cover.rects {
        let (x0, x1) = cell_range(&rect.x0, &rect.x1(), n, rule);
        let (y0, y1) = cell_range(&rect.y0, &rect.y1(), n, rule);
        budget.spend((x1 - x0 + 1) * (y1 - y0 + 1))?;
        for x in x0..=x1 {
            for y in y0..=y1 {
                cells.push((x, y));
            }
        }
    }
    Ok(GridCover::new(n, cells))
}

/// Dyadic square of side `2^-level` with lower-left corner `(ix, iy)·2^-level`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Window {
    pub level: u32,
    pub ix: u128,
    pub iy: u128,
}

impl Window {
    pub fn unit() -> Window {
        Window { level: 0, ix: 0, iy: 0 }
    }

    /// Whether a level-`n` cell lies in this window.
    pub fn contains_cell(&self, n: u32, cell: (u64, u64)) -> bool {
        n >= self.level
            && (cell.0 as u128) >> (n - self.level) == self.ix
            && (cell.1 as u128) >> (n - self.level) == self.iy
    }

    pub fn x_range(&self) -> (Rational, Rational) {
        corner_range(self.ix, self.level)
    }

    pub fn y_range(&self) -> (Rational, Rational) {
        corner_range(self.iy, self.level)
    }
}

fn corner_range(i: u128, level: u32) -> (Rational, Rational) {
    let d = BigInt::one() << level;
    (Rational::new(BigInt::from(i), d.clone()), Rational::new(BigInt::from(i + 1), d))
}

/// Number of occupied level-`m` cells inside the window, read off a grid at
/// level `n ≥ m`.
pub fn covering_number(grid: &GridCover, window: &Window, m: u32) -> Result<u64> {
    if m < window.level {
        return Err(Error::ScaleOrder(format!("sub-scale level {m} is coarser than the window level {}", window.level)));
    }
    if grid.scale_exponent < m {
        return Err(Error::ScaleOrder(format!(
            "grid level {} is coarser than the requested level {m}; rasterize finer",
            grid.scale_exponent
        )));
    }
    let s = grid.scale_exponent - m;
    let mut seen: HashSet<(u64, u64)> = HashSet::new();
    for &c in &grid.cells {
        if window.contains_cell(grid.scale_exponent, c) {
            seen.insert((c.0 >> s, c.1 >> s));
        }
    }
    Ok(seen.len() as u64)
}

/// `⋃_{σ ∈ Λ_r} S_σ([0, 1])`.
pub fn projection_cover(system: &IFSSystem, r: &Rational) -> Result<IntervalUnion> {
    projected_cover(&system.projected(), r)
}

/// `⋃ F_σ([0, 1])` over `σ ∈ Λ_r` with `x ∈ S_σ([0, 1])`: an outer
/// approximation of the vertical slice of `K` at `x`.
pub fn slice_approximant(system: &IFSSystem, x: &Rational, r: &Rational) -> Result<IntervalUnion> {
    if x < &Rational::zero() || x > &Rational::one() {
        return Err(Error::domain(format!("slice position {x} outside [0, 1]")));
    }
    if !in_open_unit(r) {
        return Err(Error::domain(format!("r = {r} must lie in (0, 1)")));
    }
    let mut budget = Budget::new("slice approximant", default_cap());
    let mut seen: HashSet<AffineMap2D> = HashSet::new();
    let mut out = Vec::new();
    let mut stack = vec![AffineMap2D::identity()];
    while let Some(t) = stack.pop() {
        for g in system.maps() {
            budget.spend(1)?;
            let c = t.compose(g);
            if x < &c.u || x > &(&c.u + &c.alpha) || !seen.insert(c.clone()) {
                continue;
            }
            if &c.alpha <= r {
                out.push(Interval::new(c.v.clone(), &c.v + &c.beta));
            } else {
                stack.push(c);
            }
        }
    }
    Ok(IntervalUnion::from_intervals(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fibres::{fibre_approximant, OmegaPrefix};
    use crate::ifs::Word;
    use crate::rational::{int, rat};

    pub(crate) fn six_map(l: Rational) -> IFSSystem {
        let half = rat(1, 2);
        let one = int(1);
        let m = |u: &Rational, v: Rational| AffineMap2D::new(half.clone(), l.clone(), u.clone(), v).unwrap();
        let (a, b) = (int(0), half.clone());
        IFSSystem::new(vec![
            m(&a, &one - &l),
            m(&b, &one - &l),
            m(&a, &l - &l * &l),
            m(&b, &l - &l * &l),
            m(&a, int(0)),
            m(&b, int(0)),
        ])
        .unwrap()
    }

    fn rect(x0: Rational, y0: Rational, w: Rational, h: Rational) -> Rect {
        Rect { x0, y0, width: w, height: h }
    }

    #[test]
    fn six_map_first_level_cover() {
        let c = attractor_cover(&six_map(rat(1, 4)), &rat(1, 2)).unwrap();
        assert_eq!(c.rects.len(), 6);
        assert!(c.rects.iter().all(|r| r.width == rat(1, 2) && r.height == rat(1, 4)));
    }

    #[test]
    fn single_map_cover() {
        let sys = IFSSystem::new(vec![AffineMap2D::new(rat(1, 2), rat(1, 4), int(0), int(0)).unwrap()]).unwrap();
        let c = attractor_cover(&sys, &rat(1, 4)).unwrap();
        assert_eq!(c.rects, vec![rect(int(0), int(0), rat(1, 4), rat(1, 16))]);
    }

    #[test]
    fn cover_area_bound_and_refinement() {
        let sys = six_map(rat(1, 4));
        let coarse = attractor_cover(&sys, &rat(1, 4)).unwrap();
        let fine = attractor_cover(&sys, &rat(1, 16)).unwrap();
        let total: Rational = fine.rects.iter().map(Rect::area).sum();
        assert!(total <= int(1));
        assert!(fine.rects.iter().all(|f| coarse.rects.iter().any(|c| c.contains_rect(f))));
        assert!(fine.rects.iter().all(|r| r.height <= r.width && r.width <= rat(1, 16)));
    }

    #[test]
    fn rasterize_closed_touching() {
        let c = RectCover { rects: vec![rect(int(0), int(0), rat(1, 4), rat(1, 16))] };
        let g = rasterize(&c, 4).unwrap();
        let expect: Vec<(u64, u64)> = (0..=4).flat_map(|x| (0..=1).map(move |y| (x, y))).collect();
        assert_eq!(g.cells, expect);
        let h = rasterize_with(&c, 4, CellRule::HalfOpen, 1000).unwrap();
        assert_eq!(h.cells, (0..4).map(|x| (x, 0)).collect::<Vec<_>>());
    }

    #[test]
    fn rasterize_full_square_and_empty() {
        let g = rasterize(&RectCover { rects: vec![Rect::unit()] }, 3).unwrap();
        assert_eq!(g.len(), 64);
        assert!(rasterize(&RectCover { rects: vec![] }, 3).is_err());
        assert!(matches!(
            rasterize_with(&RectCover { rects: vec![Rect::unit()] }, 8, CellRule::Closed, 100),
            Err(Error::Resource { .. })
        ));
    }

    #[test]
    fn coarsening_matches_direct_rasterization() {
        let sys = six_map(rat(1, 4));
        let c = attractor_cover(&sys, &rat(1, 8)).unwrap();
        for rule in [CellRule::Closed, CellRule::HalfOpen] {
            let fine = rasterize_with(&c, 7, rule, 1 << 20).unwrap();
            for m in 2..7 {
                let direct = rasterize_with(&c, m, rule, 1 << 20).unwrap();
                assert_eq!(fine.coarsen(m).unwrap(), direct, "rule {rule:?} level {m}");
            }
        }
    }

    #[test]
    fn covering_numbers() {
        let g = rasterize(&RectCover { rects: vec![Rect::unit()] }, 6).unwrap();
        assert_eq!(covering_number(&g, &Window::unit(), 6).unwrap(), 4096);
        assert_eq!(covering_number(&g, &Window::unit(), 3).unwrap(), 64);
        assert!(matches!(covering_number(&g, &Window::unit(), 7), Err(Error::ScaleOrder(_))));
        let w = Window { level: 2, ix: 1, iy: 1 };
        assert!(matches!(covering_number(&g, &w, 1), Err(Error::ScaleOrder(_))));
        let empty = rasterize(&RectCover { rects: vec![rect(int(0), int(0), rat(1, 8), rat(1, 8))] }, 6).unwrap();
        assert_eq!(covering_number(&empty, &Window { level: 1, ix: 1, iy: 1 }, 4).unwrap(), 0);
    }

    #[test]
    fn cantor_column_counts() {
        // Columns over the level-k Cantor intervals; brute force the number of
        // level-m cells in the left half.
        let cantor = IFSSystem::new(vec![
            AffineMap2D::new(rat(1, 2), rat(1, 4), int(0), int(0)).unwrap(),
            AffineMap2D::new(rat(1, 2), rat(1, 4), rat(1, 2), rat(3, 4)).unwrap(),
        ])
        .unwrap();
        let cover = attractor_cover(&cantor, &rat(1, 32)).unwrap();
        let g = rasterize_with(&cover, 6, CellRule::HalfOpen, 1 << 20).unwrap();
        let left = Window { level: 1, ix: 0, iy: 0 };
        for m in 1..=6 {
            let mut brute = HashSet::new();
            for r in &cover.rects {
                if r.x0 < rat(1, 2) && r.y0 < rat(1, 2) {
                    let (x0, x1) = cell_range(&r.x0, &r.x1(), m, CellRule::HalfOpen);
                    let (y0, y1) = cell_range(&r.y0, &r.y1(), m, CellRule::HalfOpen);
                    for x in x0..=x1 {
                        for y in y0..=y1 {
                            brute.insert((x, y));
                        }
                    }
                }
            }
            assert_eq!(covering_number(&g, &left, m).unwrap(), brute.len() as u64, "m = {m}");
        }
    }

    #[test]
    fn projection_covers() {
        let halves = IFSSystem::new(vec![
            AffineMap2D::new(rat(1, 2), rat(1, 4), int(0), int(0)).unwrap(),
            AffineMap2D::new(rat(1, 2), rat(1, 4), rat(1, 2), int(0)).unwrap(),
        ])
        .unwrap();
        for r in [rat(1, 2), rat(1, 5), rat(1, 64)] {
            assert_eq!(projection_cover(&halves, &r).unwrap(), IntervalUnion::unit());
        }
        let cantor = IFSSystem::new(vec![
            AffineMap2D::new(rat(1, 3), rat(1, 4), int(0), int(0)).unwrap(),
            AffineMap2D::new(rat(1, 3), rat(1, 4), rat(2, 3), int(0)).unwrap(),
        ])
        .unwrap();
        let c = projection_cover(&cantor, &rat(1, 9)).unwrap();
        assert_eq!(c.len(), 4);
        let one = IFSSystem::new(vec![AffineMap2D::new(rat(1, 3), rat(1, 4), rat(1, 5), int(0)).unwrap()]).unwrap();
        assert_eq!(projection_cover(&one, &rat(1, 100)).unwrap().len(), 1);
    }

    #[test]
    fn slice_matches_fibre_approximant() {
        let sys = six_map(rat(1, 4));
        let s = slice_approximant(&sys, &int(0), &rat(1, 2)).unwrap();
        let expect = IntervalUnion::from_intervals([Interval::new(int(0), rat(7, 16)), Interval::new(rat(3, 4), int(1))]);
        assert_eq!(s, expect);
        let p = OmegaPrefix::new(&sys, Word::from([0])).unwrap();
        assert_eq!(fibre_approximant(&sys, &p, &IntervalUnion::unit()).unwrap(), expect);
        // x = 0 lies in the left column at every level: prefix (0, 0, 0).
        let s3 = slice_approximant(&sys, &int(0), &rat(1, 8)).unwrap();
        let p3 = OmegaPrefix::new(&sys, Word::from([0, 0, 0])).unwrap();
        assert_eq!(s3, fibre_approximant(&sys, &p3, &IntervalUnion::unit()).unwrap());
        assert!(s.contains_union(&s3));
    }

    #[test]
    fn slice_outside_projection_is_empty() {
        let cantor = IFSSystem::new(vec![
            AffineMap2D::new(rat(1, 3), rat(1, 4), int(0), int(0)).unwrap(),
            AffineMap2D::new(rat(1, 3), rat(1, 4), rat(2, 3), int(0)).unwrap(),
        ])
        .unwrap();
        assert!(slice_approximant(&cantor, &rat(1, 2), &rat(1, 9)).unwrap().is_empty());
        assert!(slice_approximant(&cantor, &int(2), &rat(1, 9)).is_err());
    }

    #[test]
    fn exports_round_trip() {
        let sys = six_map(rat(1, 4));
        let g = rasterize(&attractor_cover(&sys, &rat(1, 8)).unwrap(), 5).unwrap();
        let mut buf = Vec::new();
        g.write_rle(&mut buf).unwrap();
        assert_eq!(GridCover::read_rle(&buf[..]).unwrap(), g);
        assert!(GridCover::read_rle(&b"XXXX"[..]).is_err());
        let csv = g.to_csv();
        assert_eq!(csv.lines().count(), g.len() + 1);
        let mut pgm = Vec::new();
        g.write_pgm(&mut pgm).unwrap();
        assert!(pgm.starts_with(b"P5\n32 32\n255\n"));
        assert_eq!(pgm.len(), "P5\n32 32\n255\n".len() + 1024);
        assert_eq!(pgm.iter().rev().take(1024).filter(|&&b| b == 0).count(), g.len());
    }
}
