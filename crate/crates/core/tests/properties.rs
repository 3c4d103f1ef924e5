use affine_dim::acceptance::random_systems;
use affine_dim::cover::{attractor_cover, GridCover};
use affine_dim::fibres::fibre_classes;
use affine_dim::ifs::stopping_words;
use affine_dim::interval::{hausdorff_distance, Interval, IntervalUnion};
use affine_dim::oracle;
use affine_dim::rational::{int, rat};
use affine_dim::separation::{esc_delta, projected_cover, similarity_dimension, t_r_count};
use affine_dim::{AffineMap2D, IFSSystem, Rational, Similarity1D, Word};
use num_traits::{One, Zero};
use proptest::prelude::*;

fn sixteenths() -> impl Strategy<Value = Rational> {
    (0i64..=16).prop_map(|n| rat(n, 16))
}

fn interval() -> impl Strategy<Value = Interval> {
    (sixteenths(), sixteenths()).prop_map(|(a, b)| if a <= b { Interval::new(a, b) } else { Interval::new(b, a) })
}

fn union() -> impl Strategy<Value = IntervalUnion> {
    prop::collection::vec(interval(), 1..6).prop_map(IntervalUnion::from_intervals)
}

/// One to four maps with ratios in {1/2, 1/3, 1/4} and translations on a
/// grid, so exact overlaps are common.
fn linear_system() -> impl Strategy<Value = Vec<Similarity1D>> {
    prop::collection::vec((2i64..=4, 0i64..=12), 1..=4).prop_map(|v| {
        v.into_iter()
            .map(|(d, t)| {
                let r = rat(1, d);
                let room = int(1) - &r;
                Similarity1D::new(r, room * rat(t, 12))
            })
            .collect()
    })
}

fn planar_system() -> impl Strategy<Value = IFSSystem> {
    prop::collection::vec((2i64..=3, 4i64..=6, 0i64..=4, 0i64..=4), 1..=4).prop_map(|v| {
        let mut maps: Vec<AffineMap2D> = v
            .into_iter()
            .map(|(a, b, u, w)| {
                let (alpha, beta) = (rat(1, a), rat(1, b));
                let u = (int(1) - &alpha) * rat(u, 4);
                let w = (int(1) - &beta) * rat(w, 4);
                AffineMap2D::new(alpha, beta, u, w).unwrap()
            })
            .collect();
        maps.sort();
        maps.dedup();
        IFSSystem::new(maps).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unions_are_sorted_and_separated(ivs in prop::collection::vec(interval(), 0..8), x in sixteenths()) {
        let u = IntervalUnion::from_intervals(ivs.clone());
        for w in u.intervals().windows(2) {
            prop_assert!(w[0].hi < w[1].lo);
        }
        for iv in u.intervals() {
            prop_assert!(iv.lo <= iv.hi);
        }
        prop_assert_eq!(u.contains_point(&x), ivs.iter().any(|iv| iv.contains(&x)));
    }

    #[test]
    fn union_is_commutative(a in union(), b in union()) {
        prop_assert_eq!(a.union(&b), b.union(&a));
        prop_assert!(a.union(&b).contains_union(&a));
    }

    #[test]
    fn hausdorff_triangle(a in union(), b in union(), c in union()) {
        let ab = hausdorff_distance(&a, &b).unwrap();
        let bc = hausdorff_distance(&b, &c).unwrap();
        let ac = hausdorff_distance(&a, &c).unwrap();
        prop_assert!(ac <= ab + bc);
    }

    #[test]
    fn coarsening_composes(cells in prop::collection::vec((0u64..256, 0u64..256), 1..60), m1 in 0u32..=8, m2 in 0u32..=8) {
        let g = GridCover::new(8, cells);
        let (hi, lo) = (m1.max(m2), m1.min(m2));
        prop_assert_eq!(g.coarsen(hi).unwrap().coarsen(lo).unwrap(), g.coarsen(lo).unwrap());
        let up = g.coarsen(7).unwrap();
        prop_assert!(up.len() <= g.len() && g.len() <= 4 * up.len());
    }

    #[test]
    fn stopping_sets_partition(maps in linear_system(), e in 1u32..=5) {
        let ratios: Vec<Rational> = maps.iter().map(|s| s.ratio.clone()).collect();
        let r = rat(1, 1 << e);
        let words = stopping_words(&ratios, &r).unwrap();
        let amin = ratios.iter().min().unwrap();
        // a uniformly random sequence passes through exactly one word
        let k = ratios.len() as i64;
        let mut mass = Rational::zero();
        for w in &words {
            let a: Rational = w.indices().iter().map(|&i| ratios[i].clone()).product();
            prop_assert!(amin * &r < a && a <= r);
            mass += rat(1, k).pow(w.len() as i32);
        }
        prop_assert_eq!(mass, Rational::one());
        for (i, a) in words.iter().enumerate() {
            for b in &words[i + 1..] {
                prop_assert!(!a.is_prefix_of(b) && !b.is_prefix_of(a));
            }
        }
    }

    #[test]
    fn composition_keeps_domination(sys in planar_system(), w in prop::collection::vec(0usize..4, 1..8)) {
        let w = Word(w.into_iter().map(|i| i % sys.len()).collect());
        let t = sys.compose_word(&w).unwrap();
        prop_assert!(t.beta < t.alpha);
        let (a, b) = w.indices().split_at(w.len() / 2);
        let split = sys.compose_word(&Word(a.to_vec())).unwrap().compose(&sys.compose_word(&Word(b.to_vec())).unwrap());
        prop_assert_eq!(split, t);
    }

    #[test]
    fn similarity_dimension_is_monotone(maps in linear_system()) {
        let ratios: Vec<Rational> = maps.iter().map(|s| s.ratio.clone()).collect();
        let s = similarity_dimension(&ratios).unwrap();
        let mut more = ratios.clone();
        more.push(rat(1, 5));
        prop_assert!(similarity_dimension(&more).unwrap() > s);
        let less: Vec<Rational> = ratios.iter().map(|r| r * rat(9, 10)).collect();
        // one map has dimension 0 at any ratio
        if ratios.len() > 1 {
            prop_assert!(similarity_dimension(&less).unwrap() < s);
        }
    }

    #[test]
    fn fast_t_r_matches_oracle(maps in linear_system(), e in 1u32..=4) {
        let r = rat(1, 1 << e);
        prop_assume!(oracle::stopping_word_count(&maps, &r, 400).is_some());
        let fast = t_r_count(&maps, &r, &projected_cover(&maps, &r).unwrap()).unwrap();
        prop_assert!(fast >= 1);
        prop_assert_eq!(fast, oracle::t_r(&maps, &r));
    }

    #[test]
    fn t_r_drops_on_sub_systems(maps in linear_system(), e in 1u32..=4) {
        prop_assume!(maps.len() > 1);
        let r = rat(1, 1 << e);
        let sub = &maps[..maps.len() - 1];
        let full = t_r_count(&maps, &r, &projected_cover(&maps, &r).unwrap()).unwrap();
        prop_assert!(t_r_count(sub, &r, &projected_cover(sub, &r).unwrap()).unwrap() <= full);
    }

    #[test]
    fn fast_delta_matches_oracle(maps in linear_system(), n in 1usize..=4) {
        prop_assume!(maps.len().pow(n as u32) <= 300);
        let fast = esc_delta(&maps, n).unwrap().map(|(d, _)| d);
        prop_assert_eq!(fast, oracle::delta(&maps, n));
    }

    #[test]
    fn finer_covers_refine(sys in planar_system(), e in 1u32..=4) {
        let coarse = attractor_cover(&sys, &rat(1, 1 << e)).unwrap();
        let fine = attractor_cover(&sys, &rat(1, 1 << (e + 1))).unwrap();
        for f in &fine.rects {
            prop_assert!(coarse.rects.iter().any(|c| c.contains_rect(f)));
        }
    }
}

#[test]
fn classes_partition_words() {
    for sys in random_systems(10, 7) {
        for n in 1..=3 {
            let total: usize = fibre_classes(&sys, n).unwrap().values().map(Vec::len).sum();
            assert_eq!(total, sys.len().pow(n as u32));
        }
    }
}
