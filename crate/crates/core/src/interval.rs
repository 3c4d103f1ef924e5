//! Finite unions of closed intervals with exact rational endpoints.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ifs::Similarity1D;
use crate::rational::{format_rational, Rational};

/// A closed interval `[lo, hi]`, possibly degenerate.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Interval {
    pub lo: Rational,
    pub hi: Rational,
}

impl Interval {
    pub fn new(lo: Rational, hi: Rational) -> Self {
        debug_assert!(lo <= hi);
        Interval { lo, hi }
    }

    pub fn point(x: Rational) -> Self {
        Interval { lo: x.clone(), hi: x }
    }

    pub fn unit() -> Self {
        Interval { lo: Rational::zero(), hi: Rational::one() }
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, x: &Rational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn intersects(&self, lo: &Rational, hi: &Rational) -> bool {
        &self.lo <= hi && lo <= &self.hi
    }

    pub fn map(&self, s: &Similarity1D) -> Interval {
        Interval { lo: s.apply(&self.lo), hi: s.apply(&self.hi) }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", format_rational(&self.lo), format_rational(&self.hi))
    }
}

/// Sorted union of pairwise disjoint closed intervals.
///
/// Normalization merges overlapping and touching intervals, so consecutive
/// entries always satisfy `hi_k < lo_{k+1}` strictly.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct IntervalUnion {
    intervals: Vec<Interval>,
}

impl IntervalUnion {
    pub fn empty() -> Self {
        IntervalUnion::default()
    }

    pub fn unit() -> Self {
        IntervalUnion { intervals: vec![Interval::unit()] }
    }

    pub fn point(x: Rational) -> Self {
        IntervalUnion { intervals: vec![Interval::point(x)] }
    }

    pub fn single(lo: Rational, hi: Rational) -> Self {
        IntervalUnion { intervals: vec![Interval::new(lo, hi)] }
    }

    pub fn from_intervals(iter: impl IntoIterator<Item = Interval>) -> Self {
        let mut v: Vec<Interval> = iter.into_iter().collect();
        v.sort_unstable_by(|a, b| a.lo.cmp(&b.lo));
        let mut out: Vec<Interval> = Vec::with_capacity(v.len());
        for iv in v {
            match out.last_mut() {
                Some(last) if iv.lo <= last.hi => {
                    if iv.hi > last.hi {
                        last.hi = iv.hi;
                    }
                }
                _ => out.push(iv),
            }
        }
        IntervalUnion { intervals: out }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Number of maximal intervals.
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn union(&self, other: &IntervalUnion) -> IntervalUnion {
        IntervalUnion::from_intervals(self.intervals.iter().chain(&other.intervals).cloned())
    }

    /// Image under an orientation-preserving similarity; stays normalized.
    pub fn map(&self, s: &Similarity1D) -> IntervalUnion {
        debug_assert!(s.ratio.is_positive());
        IntervalUnion { intervals: self.intervals.iter().map(|iv| iv.map(s)).collect() }
    }

    pub fn hull(&self) -> Option<Interval> {
        Some(Interval::new(self.intervals.first()?.lo.clone(), self.intervals.last()?.hi.clone()))
    }

    /// Diameter of the union (width of its hull); zero when empty.
    pub fn diam(&self) -> Rational {
        self.hull().map_or_else(Rational::zero, |h| h.width())
    }

    pub fn total_length(&self) -> Rational {
        self.intervals.iter().map(Interval::width).sum()
    }

    /// Index of the last interval with `lo <= x`.
    fn locate(&self, x: &Rational) -> Option<usize> {
        let k = self.intervals.partition_point(|iv| &iv.lo <= x);
        k.checked_sub(1)
    }

    pub fn contains_point(&self, x: &Rational) -> bool {
        self.locate(x).is_some_and(|k| x <= &self.intervals[k].hi)
    }

    /// `other ⊆ self`.
    pub fn contains_union(&self, other: &IntervalUnion) -> bool {
        other.intervals.iter().all(|iv| {
            self.locate(&iv.lo)
                .is_some_and(|k| self.intervals[k].contains_interval(iv))
        })
    }

    /// Whether the union meets the closed interval `[lo, hi]`.
    pub fn intersects(&self, lo: &Rational, hi: &Rational) -> bool {
        let k = self.intervals.partition_point(|iv| &iv.hi < lo);
        k < self.intervals.len() && &self.intervals[k].lo <= hi
    }

    /// `self ∩ [lo, hi]`.
    pub fn clip(&self, lo: &Rational, hi: &Rational) -> IntervalUnion {
        let intervals = self
            .intervals
            .iter()
            .filter(|iv| iv.intersects(lo, hi))
            .map(|iv| Interval::new(iv.lo.clone().max(lo.clone()), iv.hi.clone().min(hi.clone())))
            .collect();
        IntervalUnion { intervals }
    }

    /// Euclidean distance from `x` to the union; `None` when empty.
    pub fn distance_to(&self, x: &Rational) -> Option<Rational> {
        if self.is_empty() {
            return None;
        }
        let after = self.intervals.partition_point(|iv| &iv.lo <= x);
        let mut best: Option<Rational> = None;
        if after > 0 {
            let iv = &self.intervals[after - 1];
            if x <= &iv.hi {
                return Some(Rational::zero());
            }
            best = Some(x - &iv.hi);
        }
        if after < self.intervals.len() {
            let d = &self.intervals[after].lo - x;
            best = Some(match best {
                Some(b) if b <= d => b,
                _ => d,
            });
        }
        best
    }
}

impl FromIterator<Interval> for IntervalUnion {
    fn from_iter<T: IntoIterator<Item = Interval>>(iter: T) -> Self {
        IntervalUnion::from_intervals(iter)
    }
}

impl fmt::Display for IntervalUnion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "∅");
        }
        for (k, iv) in self.intervals.iter().enumerate() {
            if k > 0 {
                write!(f, " ∪ ")?;
            }
            write!(f, "{iv}")?;
        }
        Ok(())
    }
}

/// Endpoint pairs as `"p/q"` strings, the export form used in JSON files.
impl Serialize for IntervalUnion {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[String; 2]> = self
            .intervals
            .iter()
            .map(|iv| [format_rational(&iv.lo), format_rational(&iv.hi)])
            .collect();
        pairs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntervalUnion {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs: Vec<[String; 2]> = Vec::deserialize(d)?;
        let mut out = Vec::with_capacity(pairs.len());
        for [lo, hi] in pairs {
            let lo = crate::rational::parse_rational(&lo).map_err(serde::de::Error::custom)?;
            let hi = crate::rational::parse_rational(&hi).map_err(serde::de::Error::custom)?;
            if lo > hi {
                return Err(serde::de::Error::custom("interval with lo > hi"));
            }
            out.push(Interval::new(lo, hi));
        }
        Ok(IntervalUnion::from_intervals(out))
    }
}

/// A union of closed intervals built one interval at a time, merging as it
/// goes.
#[derive(Clone, Debug, Default)]
pub struct IntervalAccumulator {
    // lo -> hi of disjoint maximal intervals
    parts: BTreeMap<Rational, Rational>,
}

impl IntervalAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Whether `[lo, hi]` already lies inside one component.
    pub fn covers(&self, lo: &Rational, hi: &Rational) -> bool {
        self.parts.range(..=lo.clone()).next_back().is_some_and(|(_, h)| h >= hi)
    }

    pub fn insert(&mut self, lo: Rational, hi: Rational) {
        let (mut lo, mut hi) = (lo, hi);
        if let Some((l, h)) = self.parts.range(..=lo.clone()).next_back() {
            if *h >= lo {
                lo = l.clone();
                hi = hi.max(h.clone());
            }
        }
        let absorbed: Vec<Rational> = self.parts.range(lo.clone()..=hi.clone()).map(|(l, _)| l.clone()).collect();
        for l in absorbed {
            let h = self.parts.remove(&l).unwrap();
            hi = hi.max(h);
        }
        self.parts.insert(lo, hi);
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn finish(self) -> IntervalUnion {
        IntervalUnion { intervals: self.parts.into_iter().map(|(lo, hi)| Interval { lo, hi }).collect() }
    }
}

/// Hausdorff pseudo-distance `p_H(A, B) = inf{δ > 0 : A ⊆ B^(δ)}`, i.e. the
/// largest distance from a point of `A` to `B`.
pub fn pseudo_distance(a: &IntervalUnion, b: &IntervalUnion) -> Result<Rational> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::domain("Hausdorff distance of an empty set"));
    }
    let two = Rational::from_integer(2.into());
    let bi = b.intervals();
    let mut best = Rational::zero();
    let consider = |x: &Rational, best: &mut Rational| {
        let d = b.distance_to(x).unwrap();
        if &d > best {
            *best = d;
        }
    };
    for iv in a.intervals() {
        consider(&iv.lo, &mut best);
        consider(&iv.hi, &mut best);
        // Inside a gap of B the distance peaks at the gap midpoint; clip the
        // midpoint into [lo, hi] when the gap only partly overlaps.
        let first_gap = bi.partition_point(|g| g.hi < iv.lo).saturating_sub(1);
        for k in first_gap..bi.len().saturating_sub(1) {
            let (g_lo, g_hi) = (&bi[k].hi, &bi[k + 1].lo);
            if g_lo > &iv.hi {
                break;
            }
            if g_hi < &iv.lo {
                continue;
            }
            let mid = (g_lo + g_hi) / &two;
            let x = mid.max(iv.lo.clone()).min(iv.hi.clone());
            consider(&x, &mut best);
        }
    }
    Ok(best)
}

/// Hausdorff distance, the larger of the two pseudo-distances.
pub fn hausdorff_distance(a: &IntervalUnion, b: &IntervalUnion) -> Result<Rational> {
    Ok(pseudo_distance(a, b)?.max(pseudo_distance(b, a)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accumulator_matches_batch_union() {
        let ivs = [(3, 5), (0, 1), (1, 2), (7, 9), (4, 8), (10, 10)];
        let mut acc = IntervalAccumulator::new();
        for &(a, b) in &ivs {
            acc.insert(rat(a, 10), rat(b, 10));
        }
        assert!(acc.covers(&rat(3, 10), &rat(9, 10)));
        assert!(!acc.covers(&rat(2, 10), &rat(3, 10)));
        let batch = IntervalUnion::from_intervals(ivs.iter().map(|&(a, b)| Interval::new(rat(a, 10), rat(b, 10))));
        assert_eq!(acc.finish(), batch);
    }
    use crate::rational::{int, rat};

    fn iu(pairs: &[(i64, i64, i64, i64)]) -> IntervalUnion {
        pairs
            .iter()
            .map(|&(a, b, c, d)| Interval::new(rat(a, b), rat(c, d)))
            .collect()
    }

    #[test]
    fn merges_touching_and_overlapping() {
        let u = iu(&[(3, 4, 1, 1), (0, 1, 1, 4), (3, 16, 7, 16)]);
        assert_eq!(u, iu(&[(0, 1, 7, 16), (3, 4, 1, 1)]));
        let touching = iu(&[(0, 1, 1, 2), (1, 2, 1, 1)]);
        assert_eq!(touching, IntervalUnion::unit());
    }

    #[test]
    fn containment_and_points() {
        let u = iu(&[(0, 1, 1, 4), (3, 4, 1, 1)]);
        assert!(u.contains_point(&rat(1, 4)));
        assert!(!u.contains_point(&rat(1, 2)));
        assert!(u.contains_union(&iu(&[(1, 8, 1, 4), (7, 8, 7, 8)])));
        assert!(!u.contains_union(&iu(&[(1, 8, 1, 2)])));
        assert!(IntervalUnion::unit().contains_union(&u));
        assert!(u.intersects(&rat(1, 4), &rat(1, 3)));
        assert!(!u.intersects(&rat(1, 3), &rat(2, 3)));
    }

    #[test]
    fn pseudo_distance_examples() {
        let half = iu(&[(0, 1, 1, 2)]);
        let unit = IntervalUnion::unit();
        assert_eq!(pseudo_distance(&half, &unit).unwrap(), int(0));
        assert_eq!(pseudo_distance(&unit, &half).unwrap(), rat(1, 2));
        let gap = iu(&[(0, 1, 1, 4), (3, 4, 1, 1)]);
        assert_eq!(hausdorff_distance(&gap, &unit).unwrap(), rat(1, 4));
        assert_eq!(hausdorff_distance(&gap, &gap).unwrap(), int(0));
        assert!(hausdorff_distance(&gap, &IntervalUnion::empty()).is_err());
    }

    #[test]
    fn gap_partly_overlapping_clips_midpoint() {
        // B has the gap (0, 1); A = [4/5, 2] only sees its right part, so the
        // gap midpoint clips to 4/5.
        let a = iu(&[(4, 5, 2, 1)]);
        let b = iu(&[(0, 1, 0, 1), (1, 1, 2, 1)]);
        assert_eq!(pseudo_distance(&a, &b).unwrap(), rat(1, 5));
    }

    #[test]
    fn map_and_clip() {
        let u = iu(&[(0, 1, 1, 4), (3, 4, 1, 1)]);
        let s = Similarity1D::new(rat(1, 2), rat(1, 2));
        assert_eq!(u.map(&s), iu(&[(1, 2, 5, 8), (7, 8, 1, 1)]));
        assert_eq!(u.clip(&rat(1, 8), &rat(7, 8)), iu(&[(1, 8, 1, 4), (3, 4, 7, 8)]));
        assert_eq!(u.diam(), int(1));
        assert_eq!(u.total_length(), rat(1, 2));
    }

    #[test]
    fn serde_pairs() {
        let u = iu(&[(0, 1, 7, 16), (3, 4, 1, 1)]);
        let s = serde_json::to_string(&u).unwrap();
        assert_eq!(s, r#"[["0","7/16"],["3/4","1"]]"#);
        let back: IntervalUnion = serde_json::from_str(&s).unwrap();
        assert_eq!(back, u);
    }
}
