//! Separation statistics for the projected similarity system: the counts
//! `t_r`, the level-`n` discrepancies `Δ_n`, exact overlap search and the
//! similarity dimension.
//!
//! Everything here is a finite-depth diagnostic. Bounded `t_r` up to some
//! depth does not prove the weak separation condition.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{default_cap, Budget, Error, Result};
use crate::ifs::{Similarity1D, Word};
use crate::interval::{Interval, IntervalAccumulator, IntervalUnion};
use crate::rational::{in_open_unit, ln_abs, to_f64, Rational};

/// Distinct maps `S_σ` over the stopping set `Λ_r`: words whose ratio first
/// drops to `≤ r`. Sorted.
pub fn stopping_maps(projected: &[Similarity1D], r: &Rational) -> Result<Vec<Similarity1D>> {
    stopping_maps_capped(projected, r, default_cap())
}

pub fn stopping_maps_capped(projected: &[Similarity1D], r: &Rational, cap: u64) -> Result<Vec<Similarity1D>> {
    if !in_open_unit(r) {
        return Err(Error::domain(format!("r = {r} must lie in (0, 1)")));
    }
    if projected.is_empty() {
        return Err(Error::domain("empty system"));
    }
    let mut budget = Budget::new("stopping maps", cap);
    // Interior nodes with equal maps have equal subtrees, so one visit each.
    let mut visited: HashSet<Similarity1D> = HashSet::new();
    let mut leaves: HashSet<Similarity1D> = HashSet::new();
    let mut stack = vec![Similarity1D::identity()];
    while let Some(s) = stack.pop() {
        for g in projected {
            budget.spend(1)?;
            let c = s.compose(g);
            if &c.ratio <= r {
                leaves.insert(c);
            } else if visited.insert(c.clone()) {
                stack.push(c);
            }
        }
    }
    let mut out: Vec<_> = leaves.into_iter().collect();
    out.sort();
    Ok(out)
}

/// Distinct maps of level exactly `n`. Sorted.
pub fn level_maps(projected: &[Similarity1D], n: usize) -> Result<Vec<Similarity1D>> {
    let cap = default_cap();
    let mut budget = Budget::new("level maps", cap);
    let mut level: HashSet<Similarity1D> = HashSet::from([Similarity1D::identity()]);
    for _ in 0..n {
        let mut next = HashSet::with_capacity(level.len() * projected.len());
        for s in &level {
            for g in projected {
                budget.spend(1)?;
                next.insert(s.compose(g));
            }
        }
        level = next;
    }
    let mut out: Vec<_> = level.into_iter().collect();
    out.sort();
    Ok(out)
}

/// `⋃_{σ ∈ Λ_r} S_σ([0, 1])`, an outer cover of `π(K)` at scale `r`.
pub fn projected_cover(projected: &[Similarity1D], r: &Rational) -> Result<IntervalUnion> {
    projected_cover_capped(projected, r, default_cap())
}

pub fn projected_cover_capped(projected: &[Similarity1D], r: &Rational, cap: u64) -> Result<IntervalUnion> {
    if !in_open_unit(r) {
        return Err(Error::domain(format!("r = {r} must lie in (0, 1)")));
    }
    if projected.is_empty() {
        return Err(Error::domain("empty system"));
    }
    // images tiling [0, 1] tile it again at every depth
    let first = IntervalUnion::from_intervals(projected.iter().map(|g| {
        let (lo, hi) = g.unit_image();
        Interval::new(lo, hi)
    }));
    let unit = Interval::new(Rational::zero(), Rational::one());
    if first.intervals() == std::slice::from_ref(&unit) {
        return Ok(first);
    }
    let mut budget = Budget::new("projected cover", cap);
    let mut acc = IntervalAccumulator::new();
    let mut visited: HashSet<Similarity1D> = HashSet::new();
    let mut stack = vec![Similarity1D::identity()];
    while let Some(s) = stack.pop() {
        for g in projected {
            budget.spend(1)?;
            let c = s.compose(g);
            let (lo, hi) = c.unit_image();
            // every descendant image lies inside this one
            if acc.covers(&lo, &hi) {
                continue;
            }
            if &c.ratio <= r {
                acc.insert(lo, hi);
            } else if visited.insert(c.clone()) {
                stack.push(c);
            }
        }
    }
    Ok(acc.finish())
}

/// Some point of the attractor: the fixed point of the first map.
fn attractor_point(projected: &[Similarity1D]) -> Rational {
    projected[0].fixed_point().expect("contractions have a fixed point")
}

/// Upper bound on `t_r`, counting distinct `S_σ`, `σ ∈ Λ_r`, with
/// `S_σ(H) ∩ [x - r, x + r] ≠ ∅` where `H` is the hull of the cover, and
/// maximizing over `x` in the cover.
pub fn t_r_count(projected: &[Similarity1D], r: &Rational, pi_k_cover: &IntervalUnion) -> Result<u64> {
    if pi_k_cover.is_empty() {
        return Err(Error::domain("empty projection cover"));
    }
    let maps = stopping_maps(projected, r)?;
    Ok(max_hits(&maps, r, pi_k_cover))
}

fn max_hits(maps: &[Similarity1D], r: &Rational, cover: &IntervalUnion) -> u64 {
    let hull = cover.hull().expect("nonempty cover");
    let mut los: Vec<Rational> = Vec::with_capacity(maps.len());
    let mut his: Vec<Rational> = Vec::with_capacity(maps.len());
    for s in maps {
        let m = hull.map(s);
        los.push(&m.lo - r);
        his.push(&m.hi + r);
    }
    // The count at x is #{lo ≤ x} - #{hi < x}. It only jumps up at a lo, so
    // over x in the cover the maximum sits at some lo inside the cover or at
    // the left end of a cover component.
    let mut candidates: Vec<Rational> = los.iter().filter(|x| cover.contains_point(x)).cloned().collect();
    candidates.extend(cover.intervals().iter().map(|iv| iv.lo.clone()));
    los.sort();
    his.sort();
    candidates
        .iter()
        .map(|x| {
            let a = los.partition_point(|v| v <= x);
            let b = his.partition_point(|v| v < x);
            (a - b) as u64
        })
        .max()
        .unwrap_or(0)
}

/// Lower bound on `t_r`: the number of distinct `S_σ` whose anchor `S_σ(p)`
/// (`p` a point of the attractor) lies within `r` of another anchor, maximized.
pub fn t_r_lower(projected: &[Similarity1D], r: &Rational) -> Result<u64> {
    let p = attractor_point(projected);
    let maps = stopping_maps(projected, r)?;
    let mut anchors: Vec<Rational> = maps.iter().map(|s| s.apply(&p)).collect();
    anchors.sort();
    let mut best = 0;
    let mut lo = 0;
    let mut hi = 0;
    for x in &anchors {
        while anchors[lo] < x - r {
            lo += 1;
        }
        while hi < anchors.len() && anchors[hi] <= x + r {
            hi += 1;
        }
        best = best.max(hi - lo);
    }
    Ok(best as u64)
}

/// Both bounds on `t_r`, the upper one measured against the level-`r` cover.
pub fn t_r_bounds(projected: &[Similarity1D], r: &Rational) -> Result<(u64, u64)> {
    let cover = projected_cover(projected, r)?;
    Ok((t_r_lower(projected, r)?, t_r_count(projected, r, &cover)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    WscConsistent,
    AwscConsistent,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::WscConsistent => "WSC-consistent",
            Verdict::AwscConsistent => "AWSC-consistent",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrSample {
    pub exponent: u32,
    #[serde(with = "crate::rational::serde_str")]
    pub r: Rational,
    pub t_r: u64,
    pub t_r_lower: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub samples: Vec<TrSample>,
    pub verdict: Verdict,
    pub caveat: String,
    pub witness: Option<(Word, Word)>,
}

impl SeparationReport {
    /// `r,t_r,t_r_lower` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,t_r,t_r_lower\n");
        for x in &self.samples {
            s.push_str(&format!("{:e},{},{}\n", to_f64(&x.r), x.t_r, x.t_r_lower));
        }
        s
    }
}

pub const DIAGNOSTIC_CAVEAT: &str = "diagnostic at finite depth, not a proof";

/// Samples `t_r` at `r = α_max^e` for the given exponents.
///
/// WSC-consistent when the deep half of the samples never exceeds the value
/// at its start; AWSC-consistent when `t_r` keeps growing but
/// `log t_r / log(1/r)` decreases over the deep half.
pub fn wsc_diagnostic(projected: &[Similarity1D], r_exponents: &[u32]) -> Result<SeparationReport> {
    if r_exponents.is_empty() || r_exponents[0] == 0 || r_exponents.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("exponents must be positive and increasing"));
    }
    let base = projected.iter().map(|s| s.ratio.clone()).max().ok_or_else(|| Error::domain("empty system"))?;
    let mut samples = Vec::new();
    for &e in r_exponents {
        let r = num_traits::pow(base.clone(), e as usize);
        let (lo, hi) = t_r_bounds(projected, &r)?;
        samples.push(TrSample { exponent: e, r, t_r: hi, t_r_lower: lo });
    }
    let verdict = classify(&samples);
    Ok(SeparationReport { samples, verdict, caveat: DIAGNOSTIC_CAVEAT.into(), witness: None })
}

fn classify(samples: &[TrSample]) -> Verdict {
    if samples.len() < 2 {
        return Verdict::Inconclusive;
    }
    let deep = &samples[samples.len() / 2..];
    let start = deep[0].t_r;
    if deep.iter().all(|s| s.t_r <= start) {
        return Verdict::WscConsistent;
    }
    let ratio = |s: &TrSample| (s.t_r as f64).ln() / -ln_abs(&s.r);
    let first = ratio(&deep[0]);
    let last = ratio(deep.last().unwrap());
    if last < first {
        Verdict::AwscConsistent
    } else {
        Verdict::Inconclusive
    }
}

/// `Δ_n` and a witness pair, or `None` if no two words of length `n` share a
/// ratio.
pub fn esc_delta(projected: &[Similarity1D], n: usize) -> Result<Option<(Rational, (Word, Word))>> {
    esc_delta_capped(projected, n, default_cap())
}

pub fn esc_delta_capped(
    projected: &[Similarity1D],
    n: usize,
    cap: u64,
) -> Result<Option<(Rational, (Word, Word))>> {
    if n == 0 {
        return Err(Error::domain("esc_delta needs n >= 1"));
    }
    let total = (projected.len() as f64).powi(n as i32);
    if total > cap as f64 {
        return Err(Error::resource(format!("{}^{n} words", projected.len()), cap));
    }
    let mut buckets: BTreeMap<Rational, Vec<(Rational, Vec<usize>)>> = BTreeMap::new();
    let mut word = vec![0usize; n];
    loop {
        let s = compose(projected, &word);
        buckets.entry(s.ratio).or_default().push((s.translate, word.clone()));
        if !advance(&mut word, projected.len()) {
            break;
        }
    }
    let mut best: Option<(Rational, (Vec<usize>, Vec<usize>))> = None;
    for bucket in buckets.values_mut() {
        bucket.sort();
        for w in bucket.windows(2) {
            let d = &w[1].0 - &w[0].0;
            let cand = (d, (w[0].1.clone(), w[1].1.clone()));
            if best.as_ref().is_none_or(|b| cand < *b) {
                best = Some(cand);
            }
        }
    }
    Ok(best.map(|(d, (a, b))| (d, (Word(a), Word(b)))))
}

fn compose(projected: &[Similarity1D], word: &[usize]) -> Similarity1D {
    word.iter().fold(Similarity1D::identity(), |acc, &i| acc.compose(&projected[i]))
}

/// Lexicographic successor in `{0..k-1}^n`; false after the last word.
fn advance(word: &mut [usize], k: usize) -> bool {
    for d in word.iter_mut().rev() {
        *d += 1;
        if *d < k {
            return true;
        }
        *d = 0;
    }
    false
}

/// First `n ≤ max_n` with two distinct words composing to the same map.
pub fn exact_overlap_exists(projected: &[Similarity1D], max_n: usize) -> Result<Option<(usize, (Word, Word))>> {
    if max_n == 0 {
        return Err(Error::domain("max_n must be >= 1"));
    }
    let mut budget = Budget::new("exact overlap search", default_cap());
    // Words in lexicographic order; the first collision is the smallest pair.
    let mut level: Vec<(Vec<usize>, Similarity1D)> = vec![(Vec::new(), Similarity1D::identity())];
    for n in 1..=max_n {
        let mut next: Vec<(Vec<usize>, Similarity1D)> = Vec::with_capacity(level.len() * projected.len());
        let mut seen: HashMap<Similarity1D, usize> = HashMap::new();
        let mut hit: Option<(Vec<usize>, Vec<usize>)> = None;
        for (w, s) in &level {
            for (i, g) in projected.iter().enumerate() {
                budget.spend(1)?;
                let mut w2 = w.clone();
                w2.push(i);
                let c = s.compose(g);
                match seen.get(&c) {
                    Some(&j) => {
                        let cand = (next[j].0.clone(), w2.clone());
                        if hit.as_ref().is_none_or(|h| cand < *h) {
                            hit = Some(cand);
                        }
                    }
                    None => {
                        seen.insert(c.clone(), next.len());
                    }
                }
                next.push((w2, c));
            }
        }
        if let Some((a, b)) = hit {
            return Ok(Some((n, (Word(a), Word(b)))));
        }
        level = next;
    }
    Ok(None)
}

/// Solves `Σ r_i^s = 1` by bisection.
pub fn similarity_dimension(ratios: &[Rational]) -> Result<f64> {
    if ratios.is_empty() {
        return Err(Error::domain("similarity dimension of an empty list"));
    }
    if let Some(r) = ratios.iter().find(|r| !in_open_unit(r)) {
        return Err(Error::domain(format!("ratio {r} outside (0, 1)")));
    }
    let logs: Vec<f64> = ratios.iter().map(ln_abs).collect();
    let p = |s: f64| logs.iter().map(|l| (l * s).exp()).sum::<f64>();
    if ratios.len() == 1 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while p(hi) > 1.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if p(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (p(mid) - 1.0).abs() < 1e-14 {
            return Ok(mid);
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Similarity dimension of the distinct maps.
pub fn distinct_similarity_dimension(projected: &[Similarity1D]) -> Result<f64> {
    let mut maps = projected.to_vec();
    maps.sort();
    maps.dedup();
    similarity_dimension(&maps.iter().map(|s| s.ratio.clone()).collect::<Vec<_>>())
}

/// `Δ_n` rows `n,delta` for plotting; infinite values are written as `inf`.
pub fn delta_csv(rows: &[(usize, Option<Rational>)]) -> String {
    let mut s = String::from("n,delta\n");
    for (n, d) in rows {
        match d {
            Some(d) => s.push_str(&format!("{n},{:e}\n", to_f64(d))),
            None => s.push_str(&format!("{n},inf\n")),
        }
    }
    s
}
