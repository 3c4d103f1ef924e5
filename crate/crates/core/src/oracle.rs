//! Slow reference implementations.
//!
//! Each walks every word without deduplication and compares all pairs, so
//! it only suits small systems. They share no code with the fast paths in
//! [`crate::separation`] beyond map composition.

use num_traits::Signed;

use crate::ifs::Similarity1D;
use crate::interval::{Interval, IntervalUnion};
use crate::rational::Rational;

/// All words of the stopping set at `r` with their maps, duplicates kept.
pub fn stopping_words(projected: &[Similarity1D], r: &Rational) -> Vec<(Vec<usize>, Similarity1D)> {
    let mut out = Vec::new();
    let mut frontier = vec![(Vec::new(), Similarity1D::identity())];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for (w, s) in frontier {
            for (i, g) in projected.iter().enumerate() {
                let mut w2: Vec<usize> = w.clone();
                w2.push(i);
                let c = s.compose(g);
                if &c.ratio <= r {
                    out.push((w2, c));
                } else {
                    next.push((w2, c));
                }
            }
        }
        frontier = next;
    }
    out
}

/// Number of words in the stopping set at `r`, or `None` above `limit`.
pub fn stopping_word_count(projected: &[Similarity1D], r: &Rational, limit: u64) -> Option<u64> {
    let mut count = 0u64;
    let mut stack = vec![Rational::from_integer(1.into())];
    while let Some(a) = stack.pop() {
        for g in projected {
            let c = &a * &g.ratio;
            if &c <= r {
                count += 1;
                if count > limit {
                    return None;
                }
            } else {
                stack.push(c);
            }
        }
    }
    Some(count)
}

/// `t_r` by direct search: every endpoint-derived point `x` of the level-`r`
/// cover is tried, and for each the distinct stopping maps whose image of the
/// cover hull meets `[x - r, x + r]` are counted one pair at a time.
pub fn t_r(projected: &[Similarity1D], r: &Rational) -> u64 {
    let mut maps: Vec<Similarity1D> = Vec::new();
    for (_, s) in stopping_words(projected, r) {
        if !maps.contains(&s) {
            maps.push(s);
        }
    }
    let cover = IntervalUnion::from_intervals(maps.iter().map(|s| {
        let (a, b) = s.unit_image();
        Interval::new(a, b)
    }));
    let hull = cover.hull().expect("nonempty");
    let images: Vec<(Rational, Rational)> = maps.iter().map(|s| (s.apply(&hull.lo), s.apply(&hull.hi))).collect();
    let mut xs = Vec::new();
    for (a, b) in &images {
        xs.extend([a - r, a + r, b - r, b + r, a.clone(), b.clone()]);
    }
    xs.extend(cover.intervals().iter().flat_map(|iv| [iv.lo.clone(), iv.hi.clone()]));
    let mut best = 0;
    for x in xs.iter().filter(|x| cover.contains_point(x)) {
        let (lo, hi) = (x - r, x + r);
        let c = images.iter().filter(|(a, b)| a <= &hi && b >= &lo).count() as u64;
        best = best.max(c);
    }
    best
}

/// `Δ_n` by comparing every pair of level-`n` words with equal ratio.
pub fn delta(projected: &[Similarity1D], n: usize) -> Option<Rational> {
    let mut words = vec![Similarity1D::identity()];
    for _ in 0..n {
        words = words.iter().flat_map(|s| projected.iter().map(move |g| s.compose(g))).collect();
    }
    let mut best: Option<Rational> = None;
    for i in 0..words.len() {
        for j in i + 1..words.len() {
            if words[i].ratio == words[j].ratio {
                let d = (&words[i].translate - &words[j].translate).abs();
                if best.as_ref().is_none_or(|b| &d < b) {
                    best = Some(d);
                }
            }
        }
    }
    best
}
