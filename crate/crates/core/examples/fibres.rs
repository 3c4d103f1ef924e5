//! Symbolic fibres of the six-map system: classes of level-2 words, the
//! approximants along a periodic prefix and their certified distances.

use affine_dim::fibres::{fibre_approximant, fibre_classes, fibre_limit_bound, OmegaPrefix};
use affine_dim::gallery::gallery_get;
use affine_dim::interval::pseudo_distance;
use affine_dim::rational::{format_rational, to_f64};
use affine_dim::{IntervalUnion, Word};

fn main() -> affine_dim::Result<()> {
    let sys = gallery_get("six-map-quarter")?.system().expect("planar");
    for (key, words) in fibre_classes(&sys, 2)? {
        let names: Vec<String> = words.iter().map(|w| w.to_string()).collect();
        println!("x -> {} x + {}: {}", format_rational(&key.ratio), format_rational(&key.translate), names.join(" "));
    }
    let unit = IntervalUnion::unit();
    let mut prev: Option<IntervalUnion> = None;
    for k in 1..=8 {
        let p = OmegaPrefix::periodic(&sys, &Word(vec![0, 3]), k)?;
        let e = fibre_approximant(&sys, &p, &unit)?;
        let gap = match &prev {
            Some(q) => format!("{:.3e}", to_f64(&pseudo_distance(q, &e)?)),
            None => "-".into(),
        };
        println!(
            "k = {k}: {} intervals, length {}, step {gap}, bound {:.3e}",
            e.len(),
            format_rational(&e.total_length()),
            to_f64(&fibre_limit_bound(&sys, &unit, k))
        );
        prev = Some(e);
    }
    Ok(())
}
