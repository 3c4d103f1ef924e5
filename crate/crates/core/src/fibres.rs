//! Symbolic fibres.
//!
//! The projected maps `S_i` generate a semigroup under composition. For an
//! element `f` the class `J_f` collects every word `σ` with `S_σ = f`, and a
//! path `η = (f_1, f_2, …)` with `f_j = f_{j-1} ∘ S_{i_j}` picks out the
//! vertical approximants
//!
//! ```text
//! E_{k,η} = ⋃_{σ ∈ J_{f_k}} F_σ(X)
//! ```
//!
//! which converge to the symbolic fibre `E_η` at rate `diam(X) β_max^k`
//! independently of the compact seed `X`. The limit itself is never built;
//! everything here works with approximants and the certified bound.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{default_cap, Budget, Error, Result};
use crate::ifs::{AffineMap2D, IFSSystem, Similarity1D, Word};
use crate::interval::{Interval, IntervalUnion};
use crate::rational::Rational;

/// Element of the projected semigroup. Equal keys are equal functions.
pub type SemigroupKey = Similarity1D;

/// Distinct projected generators in first-occurrence order, each paired with
/// the smallest index realizing it.
pub fn distinct_generators(system: &IFSSystem) -> Vec<(usize, SemigroupKey)> {
    let mut seen = HashSet::new();
    system
        .projected()
        .into_iter()
        .enumerate()
        .filter(|(_, s)| seen.insert(s.clone()))
        .collect()
}

/// A finite piece `(f_1, …, f_k)` of a semigroup path, with the index word
/// that produced it.
///
/// Two prefixes are the same element iff their key sequences agree; the
/// index word is only a representative.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OmegaPrefix {
    indices: Word,
    keys: Vec<SemigroupKey>,
}

impl OmegaPrefix {
    pub fn new(system: &IFSSystem, indices: Word) -> Result<Self> {
        indices.check(system.len())?;
        let mut keys = Vec::with_capacity(indices.len());
        let mut acc = SemigroupKey::identity();
        for &i in indices.indices() {
            acc = acc.compose(&system.maps()[i].project());
            keys.push(acc.clone());
        }
        Ok(OmegaPrefix { indices, keys })
    }

    /// The first `len` symbols of `word word word …`.
    pub fn periodic(system: &IFSSystem, word: &Word, len: usize) -> Result<Self> {
        if word.is_empty() {
            return Err(Error::domain("periodic extension of the empty word"));
        }
        let idx = word.indices().iter().copied().cycle().take(len).collect::<Vec<_>>();
        OmegaPrefix::new(system, Word(idx))
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &Word {
        &self.indices
    }

    pub fn keys(&self) -> &[SemigroupKey] {
        &self.keys
    }

    /// `f_k`, or `None` for the empty prefix.
    pub fn last_key(&self) -> Option<&SemigroupKey> {
        self.keys.last()
    }

    /// The first `k` symbols.
    pub fn truncated(&self, k: usize) -> OmegaPrefix {
        OmegaPrefix { indices: Word(self.indices.0[..k].to_vec()), keys: self.keys[..k].to_vec() }
    }

    /// Prefix of the shifted path `(S_{i_{m+1}}, S_{i_{m+1}} ∘ S_{i_{m+2}}, …)`.
    pub fn shifted(&self, system: &IFSSystem, m: usize) -> Result<OmegaPrefix> {
        OmegaPrefix::new(system, Word(self.indices.0[m..].to_vec()))
    }
}

/// Partition of `I^n` by projected similarity.
pub fn fibre_classes(system: &IFSSystem, n: usize) -> Result<BTreeMap<SemigroupKey, Vec<Word>>> {
    fibre_classes_capped(system, n, default_cap())
}

pub fn fibre_classes_capped(
    system: &IFSSystem,
    n: usize,
    cap: u64,
) -> Result<BTreeMap<SemigroupKey, Vec<Word>>> {
    if n == 0 {
        return Err(Error::domain("fibre classes need n >= 1"));
    }
    let total = (system.len() as f64).powi(n as i32);
    if total > cap as f64 {
        return Err(Error::resource(format!("fibre classes over {}^{n} words", system.len()), cap));
    }
    let proj = system.projected();
    let mut level: Vec<(Word, SemigroupKey)> = vec![(Word::empty(), SemigroupKey::identity())];
    for _ in 0..n {
        let mut next = Vec::with_capacity(level.len() * proj.len());
        for (w, s) in &level {
            for (i, g) in proj.iter().enumerate() {
                let mut w2 = w.clone();
                w2.push(i);
                next.push((w2, s.compose(g)));
            }
        }
        level = next;
    }
    let mut out: BTreeMap<SemigroupKey, Vec<Word>> = BTreeMap::new();
    for (w, s) in level {
        out.entry(s).or_default().push(w);
    }
    Ok(out)
}

/// Interval `f_k([0, 1])`. It contains the anchor `x_η = lim f_n(0)` of every
/// path extending the prefix, and has width `ratio(f_k)`.
pub fn anchor_point(prefix: &OmegaPrefix) -> Result<Interval> {
    let f = prefix.last_key().ok_or_else(|| Error::domain("anchor point of the empty prefix"))?;
    let (lo, hi) = f.unit_image();
    Ok(Interval::new(lo, hi))
}

/// Every distinct planar map `T_σ` with `S_σ = f`, one representative word
/// each. Words of any length are considered.
///
/// The search extends words one symbol at a time and keeps a branch only
/// while `S_σ([0,1]) ⊇ f([0,1])` and `ratio(S_σ) ≥ ratio(f)`, which every
/// prefix of a member must satisfy. Branches reaching an already-seen planar
/// map are dropped since their subtrees coincide.
pub fn class_members(system: &IFSSystem, f: &SemigroupKey) -> Result<Vec<(Word, AffineMap2D)>> {
    class_members_capped(system, f, default_cap())
}

pub fn class_members_capped(
    system: &IFSSystem,
    f: &SemigroupKey,
    cap: u64,
) -> Result<Vec<(Word, AffineMap2D)>> {
    let mut budget = Budget::new("fibre class search", cap);
    let (f_lo, f_hi) = f.unit_image();
    let mut seen: HashSet<AffineMap2D> = HashSet::new();
    let mut out = Vec::new();
    let mut stack = vec![(Word::empty(), AffineMap2D::identity())];
    while let Some((w, t)) = stack.pop() {
        budget.spend(1)?;
        if t.alpha == f.ratio {
            if t.u == f.translate {
                out.push((w, t));
            }
            continue;
        }
        for (i, g) in system.maps().iter().enumerate() {
            let c = t.compose(g);
            if c.alpha < f.ratio || c.u > f_lo || &c.u + &c.alpha < f_hi {
                continue;
            }
            if seen.insert(c.clone()) {
                let mut w2 = w.clone();
                w2.push(i);
                stack.push((w2, c));
            }
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

/// Distinct fibred maps `F_σ`, `σ ∈ J_f`, sorted.
pub fn class_fibre_maps(system: &IFSSystem, f: &SemigroupKey) -> Result<Vec<Similarity1D>> {
    let mut maps: Vec<Similarity1D> =
        class_members(system, f)?.into_iter().map(|(_, t)| t.fibre_map()).collect();
    maps.sort();
    maps.dedup();
    Ok(maps)
}

/// `E_{k,η}` for the prefix's last key `f_k`, seeded with `X`.
pub fn fibre_approximant(
    system: &IFSSystem,
    prefix: &OmegaPrefix,
    seed: &IntervalUnion,
) -> Result<IntervalUnion> {
    let f = prefix.last_key().ok_or_else(|| Error::domain("fibre approximant of the empty prefix"))?;
    if seed.is_empty() {
        return Err(Error::domain("empty seed set"));
    }
    let maps = class_fibre_maps(system, f)?;
    Ok(IntervalUnion::from_intervals(
        maps.iter().flat_map(|m| seed.intervals().iter().map(move |iv| iv.map(m))),
    ))
}

/// Certified `diam(X) · β_max^k` bound on `p_H(E_{k,η}, E_{m,η})` for all
/// `m ≥ k`, and hence on the pseudo-distance to the limit.
pub fn fibre_limit_bound(system: &IFSSystem, seed: &IntervalUnion, k: usize) -> Rational {
    let mut b = seed.diam();
    for _ in 0..k {
        b *= system.beta_max();
    }
    b
}

/// Checks `F_ω(E_{k-m, η̄}) ⊆ E_{k,η}` for every `ω ∈ J_{f_m}`, where `η̄` is
/// the path shifted by `m` symbols and both sides use the seed `[0, 1]`.
pub fn check_shift_embedding(system: &IFSSystem, prefix: &OmegaPrefix, split: usize) -> Result<bool> {
    let k = prefix.len();
    if split == 0 || split >= k {
        return Err(Error::domain(format!("split {split} must satisfy 1 <= m < k = {k}")));
    }
    let unit = IntervalUnion::unit();
    let whole = fibre_approximant(system, prefix, &unit)?;
    let tail = fibre_approximant(system, &prefix.shifted(system, split)?, &unit)?;
    let head = class_fibre_maps(system, &prefix.keys()[split - 1])?;
    Ok(head.iter().all(|w| whole.contains_union(&tail.map(w))))
}

/// One representative per distinct key sequence of the given length, the
/// lexicographically smallest index word for each.
pub fn enumerate_prefixes(system: &IFSSystem, depth: usize) -> Result<Vec<OmegaPrefix>> {
    if depth == 0 {
        return Err(Error::domain("prefix depth must be >= 1"));
    }
    // f ∘ S_i = f ∘ S_j iff S_i = S_j, so distinct key sequences are exactly
    // words over one representative per distinct generator.
    let reps: Vec<usize> = distinct_generators(system).into_iter().map(|(i, _)| i).collect();
    let total = (reps.len() as f64).powi(depth as i32);
    let cap = default_cap();
    if total > cap as f64 {
        return Err(Error::resource(format!("{}^{depth} prefixes", reps.len()), cap));
    }
    let mut words: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..depth {
        words = words
            .into_iter()
            .flat_map(|w| {
                reps.iter().map(move |&i| {
                    let mut w2 = w.clone();
                    w2.push(i);
                    w2
                })
            })
            .collect();
    }
    words.into_iter().map(|w| OmegaPrefix::new(system, Word(w))).collect()
}

/// JSON export form: `{"prefix":[1,3],"depth":4,"intervals":[["0","7/16"],["3/4","1"]]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FibreExport {
    pub prefix: Vec<usize>,
    pub depth: usize,
    pub intervals: IntervalUnion,
}

impl FibreExport {
    pub fn new(prefix: &OmegaPrefix, intervals: IntervalUnion) -> Self {
        FibreExport { prefix: prefix.indices().0.clone(), depth: prefix.len(), intervals }
    }
}

/// Whether every class at generator level has fibred maps whose images of
/// `(0, 1)` are pairwise disjoint (the open set condition with respect to
/// `(0, 1)`), checked exactly.
pub fn generator_fibres_osc(system: &IFSSystem) -> bool {
    let mut by_key: BTreeMap<SemigroupKey, Vec<Similarity1D>> = BTreeMap::new();
    for m in system.maps() {
        by_key.entry(m.project()).or_default().push(m.fibre_map());
    }
    by_key.values_mut().all(|maps| {
        maps.sort();
        maps.windows(2).all(|w| {
            let (a_lo, a_hi) = w[0].unit_image();
            let (b_lo, _) = w[1].unit_image();
            a_lo != b_lo && a_hi <= b_lo
        })
    })
}

/// Fibred maps grouped by their projected generator.
pub fn generator_fibre_systems(system: &IFSSystem) -> BTreeMap<SemigroupKey, Vec<Similarity1D>> {
    let mut by_key: BTreeMap<SemigroupKey, Vec<Similarity1D>> = BTreeMap::new();
    for m in system.maps() {
        by_key.entry(m.project()).or_default().push(m.fibre_map());
    }
    for v in by_key.values_mut() {
        v.sort();
        v.dedup();
    }
    by_key
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::hausdorff_distance;
    use crate::rational::{int, rat};

    /// The six-map system with vertical ratios `l1` (left column) and `l2`.
    fn six_map(l1: Rational, l2: Rational) -> IFSSystem {
        let half = rat(1, 2);
        let mut maps = Vec::new();
        let col = |u: &Rational, l: &Rational, v: Rational| {
            AffineMap2D::new(half.clone(), l.clone(), u.clone(), v).unwrap()
        };
        let one = int(1);
        let (u0, u1) = (int(0), half.clone());
        maps.push(col(&u0, &l1, &one - &l1));
        maps.push(col(&u1, &l2, &one - &l2));
        maps.push(col(&u0, &l1, &l1 - &l1 * &l1));
        maps.push(col(&u1, &l2, &l2 - &l2 * &l2));
        maps.push(col(&u0, &l1, int(0)));
        maps.push(col(&u1, &l2, int(0)));
        IFSSystem::new(maps).unwrap()
    }

    fn phi_projected(l: Rational) -> IFSSystem {
        let one = int(1);
        IFSSystem::from_linear(&[
            Similarity1D::new(l.clone(), int(0)),
            Similarity1D::new(l.clone(), &l - &l * &l),
            Similarity1D::new(l.clone(), &one - &l),
        ])
        .unwrap()
    }

    #[test]
    fn six_map_generator_classes() {
        let sys = six_map(rat(1, 4), rat(1, 4));
        let classes = fibre_classes(&sys, 1).unwrap();
        assert_eq!(classes.len(), 2);
        assert_eq!(classes[&Similarity1D::new(rat(1, 2), int(0))], vec![Word::from([0]), [2].into(), [4].into()]);
        assert_eq!(classes[&Similarity1D::new(rat(1, 2), rat(1, 2))], vec![Word::from([1]), [3].into(), [5].into()]);
    }

    #[test]
    fn free_semigroup_has_singleton_classes() {
        let sys = IFSSystem::new(vec![
            AffineMap2D::new(rat(1, 2), rat(1, 4), int(0), int(0)).unwrap(),
            AffineMap2D::new(rat(1, 2), rat(1, 4), rat(1, 2), rat(3, 4)).unwrap(),
        ])
        .unwrap();
        let classes = fibre_classes(&sys, 2).unwrap();
        assert_eq!(classes.len(), 4);
        assert!(classes.values().all(|v| v.len() == 1));
    }

    #[test]
    fn phi_quarter_collision() {
        let sys = phi_projected(rat(1, 4));
        let classes = fibre_classes(&sys, 2).unwrap();
        let hit = classes.values().find(|v| v.contains(&Word::from([0, 2]))).unwrap();
        assert!(hit.contains(&Word::from([1, 0])));
        assert_eq!(classes.values().map(Vec::len).sum::<usize>(), 9);
    }

    #[test]
    fn class_cap_is_reported() {
        let sys = phi_projected(rat(1, 4));
        let e = fibre_classes_capped(&sys, 5, 100).unwrap_err();
        assert!(matches!(e, Error::Resource { cap: 100, .. }));
    }

    #[test]
    fn anchor_intervals() {
        let sys = six_map(rat(1, 4), rat(1, 4));
        let p = OmegaPrefix::new(&sys, Word::from([1, 1, 1])).unwrap();
        let a = anchor_point(&p).unwrap();
        assert_eq!((a.lo.clone(), a.hi.clone()), (rat(7, 8), int(1)));
        assert!(a.contains(&int(1)));
        let p = OmegaPrefix::new(&sys, Word::from([0, 0])).unwrap();
        assert_eq!(anchor_point(&p).unwrap(), Interval::new(int(0), rat(1, 4)));
        let p = OmegaPrefix::new(&sys, Word::from([0, 1])).unwrap();
        assert_eq!(anchor_point(&p).unwrap(), Interval::new(rat(1, 4), rat(1, 2)));
        let empty = OmegaPrefix::new(&sys, Word::empty()).unwrap();
        assert!(anchor_point(&empty).is_err());
    }

    #[test]
    fn six_map_first_approximant() {
        let sys = six_map(rat(1, 4), rat(1, 4));
        let p = OmegaPrefix::new(&sys, Word::from([0])).unwrap();
        let e = fibre_approximant(&sys, &p, &IntervalUnion::unit()).unwrap();
        let expect = IntervalUnion::from_intervals([
            Interval::new(int(0), rat(7, 16)),
            Interval::new(rat(3, 4), int(1)),
        ]);
        assert_eq!(e, expect);
        // Brute force: images of the endpoints under the three left-column maps.
        let mut brute = Vec::new();
        for i in [0, 2, 4] {
            let f = sys.maps()[i].fibre_map();
            brute.push(Interval::new(f.apply(&int(0)), f.apply(&int(1))));
        }
        assert_eq!(IntervalUnion::from_intervals(brute), expect);
    }

    #[test]
    fn singleton_class_gives_single_interval() {
        let sys = IFSSystem::new(vec![
            AffineMap2D::new(rat(1, 2), rat(1, 4), int(0), rat(1, 8)).unwrap(),
            AffineMap2D::new(rat(1, 2), rat(1, 4), rat(1, 2), rat(3, 4)).unwrap(),
        ])
        .unwrap();
        let p = OmegaPrefix::new(&sys, Word::from([1])).unwrap();
        let e = fibre_approximant(&sys, &p, &IntervalUnion::unit()).unwrap();
        assert_eq!(e, IntervalUnion::single(rat(3, 4), int(1)));
    }

    #[test]
    fn point_seed_counts_class_members() {
        let sys = six_map(rat(1, 4), rat(1, 4));
        let p = OmegaPrefix::new(&sys, Word::from([0, 1, 0])).unwrap();
        let e = fibre_approximant(&sys, &p, &IntervalUnion::point(int(0))).unwrap();
        let members = class_fibre_maps(&sys, p.last_key().unwrap()).unwrap();
        assert_eq!(e.len(), members.len());
        assert!(e.intervals().iter().all(|iv| iv.lo == iv.hi));
    }

    #[test]
    fn limit_bound_formula_and_check() {
        let sys = six_map(rat(1, 4), rat(1, 4));
        let unit = IntervalUnion::unit();
        assert_eq!(fibre_limit_bound(&sys, &unit, 3), rat(1, 64));
        assert_eq!(fibre_limit_bound(&sys, &unit, 0), int(1));
        let p = OmegaPrefix::new(&sys, Word::from([0, 1, 1, 0, 0, 1])).unwrap();
        let e3 = fibre_approximant(&sys, &p.truncated(3), &unit).unwrap();
        let e6 = fibre_approximant(&sys, &p, &unit).unwrap();
        assert!(hausdorff_distance(&e3, &e6).unwrap() <= rat(1, 64));
    }

    #[test]
    fn shift_embedding_on_six_map() {
        let sys = six_map(rat(1, 4), rat(1, 4));
        let p = OmegaPrefix::new(&sys, Word::from([0, 1, 1, 0])).unwrap();
        assert!(check_shift_embedding(&sys, &p, 2).unwrap());
        assert!(check_shift_embedding(&sys, &p, 0).is_err());
        assert!(check_shift_embedding(&sys, &p, 4).is_err());
    }

    #[test]
    fn prefix_enumeration_counts() {
        let sys = six_map(rat(1, 4), rat(1, 4));
        assert_eq!(enumerate_prefixes(&sys, 2).unwrap().len(), 4);
        assert_eq!(enumerate_prefixes(&sys, 1).unwrap().len(), 2);
        // Key sequences (f_1, f_2) for Φ_{1/4}: S_0 S_2 = S_1 S_0 but f_1
        // differs, so all nine sequences are distinct while only eight level-2
        // maps are.
        let phi = phi_projected(rat(1, 4));
        let prefixes = enumerate_prefixes(&phi, 2).unwrap();
        assert_eq!(prefixes.len(), 9);
        let mut ends: Vec<_> = prefixes.iter().map(|p| p.last_key().unwrap().clone()).collect();
        ends.sort();
        ends.dedup();
        assert_eq!(ends.len(), 8);
    }

    #[test]
    fn paper_class_includes_words_through_other_paths() {
        // J_f contains (1,0) for f = S_0 S_2 even though its first key is S_1.
        let l = rat(1, 4);
        let phi = IFSSystem::new(vec![
            AffineMap2D::new(l.clone(), rat(1, 8), int(0), int(0)).unwrap(),
            AffineMap2D::new(l.clone(), rat(1, 8), &l - &l * &l, rat(1, 4)).unwrap(),
            AffineMap2D::new(l.clone(), rat(1, 8), int(1) - &l, rat(1, 2)).unwrap(),
        ])
        .unwrap();
        let p = OmegaPrefix::new(&phi, Word::from([0, 2])).unwrap();
        let words: Vec<Word> = class_members(&phi, p.last_key().unwrap())
            .unwrap()
            .into_iter()
            .map(|(w, _)| w)
            .collect();
        assert_eq!(words, vec![Word::from([0, 2]), Word::from([1, 0])]);
    }

    #[test]
    fn export_shape() {
        let sys = six_map(rat(1, 4), rat(1, 4));
        let p = OmegaPrefix::new(&sys, Word::from([0])).unwrap();
        let e = fibre_approximant(&sys, &p, &IntervalUnion::unit()).unwrap();
        let json = serde_json::to_string(&FibreExport::new(&p, e)).unwrap();
        assert_eq!(json, r#"{"prefix":[0],"depth":1,"intervals":[["0","7/16"],["3/4","1"]]}"#);
    }

    #[test]
    fn osc_detection() {
        assert!(!generator_fibres_osc(&six_map(rat(1, 4), rat(1, 4))));
        let gl = IFSSystem::new(vec![
            AffineMap2D::new(rat(1, 2), rat(1, 4), int(0), int(0)).unwrap(),
            AffineMap2D::new(rat(1, 2), rat(1, 4), int(0), rat(3, 4)).unwrap(),
            AffineMap2D::new(rat(1, 2), rat(1, 4), rat(1, 2), int(0)).unwrap(),
            AffineMap2D::new(rat(1, 2), rat(1, 4), rat(1, 2), rat(3, 4)).unwrap(),
        ])
        .unwrap();
        assert!(generator_fibres_osc(&gl));
    }
}
