//! Named example systems with their known dimensions.
//!
//! Parameters that would be irrational are replaced by nearby rationals;
//! those entries say in `caveats` which conclusions survive the swap.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ifs::{AffineMap2D, IFSSystem, Similarity1D};
use crate::rational::{int, rat, Rational};
use crate::source::{AttractorSource, CoverSource, LinearSource, ProductSource};

/// The set a gallery entry describes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum GallerySet {
    /// Attractor of a dominated rectangular system.
    Planar { maps: Vec<AffineMap2D> },
    /// Attractor of a similarity system on the line.
    Linear { maps: Vec<Similarity1D> },
    /// `X × Y` for two linear attractors. Not itself a dominated system.
    Product { x: Vec<Similarity1D>, y: Vec<Similarity1D> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnownValue {
    pub quantity: String,
    pub expression: String,
    pub value: f64,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GallerySystem {
    pub name: String,
    pub set: GallerySet,
    pub known_values: Vec<KnownValue>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub caveats: String,
}

impl GallerySystem {
    /// The planar system, if the entry has one. Linear entries are lifted
    /// with [`IFSSystem::from_linear`].
    pub fn system(&self) -> Option<IFSSystem> {
        match &self.set {
            GallerySet::Planar { maps } => IFSSystem::new(maps.clone()).ok(),
            GallerySet::Linear { maps } => IFSSystem::from_linear(maps).ok(),
            GallerySet::Product { .. } => None,
        }
    }

    pub fn is_planar(&self) -> bool {
        !matches!(self.set, GallerySet::Linear { .. })
    }

    /// Horizontal projection: the projected maps of a planar system, the
    /// maps of a linear one, the first factor of a product.
    pub fn projection(&self) -> Vec<Similarity1D> {
        match &self.set {
            GallerySet::Planar { maps } => maps.iter().map(AffineMap2D::project).collect(),
            GallerySet::Linear { maps } => maps.clone(),
            GallerySet::Product { x, .. } => x.clone(),
        }
    }

    pub fn source(&self) -> Result<Box<dyn CoverSource>> {
        Ok(match &self.set {
            GallerySet::Planar { maps } => Box::new(AttractorSource::new(IFSSystem::new(maps.clone())?)),
            GallerySet::Linear { maps } => Box::new(LinearSource::new(maps.clone())?),
            GallerySet::Product { x, y } => {
                Box::new(ProductSource::new(LinearSource::new(x.clone())?, LinearSource::new(y.clone())?)?)
            }
        })
    }

    pub fn known(&self, quantity: &str) -> Option<&KnownValue> {
        self.known_values.iter().find(|k| k.quantity == quantity)
    }

    /// Checks the maps: planar ones through [`IFSSystem::new`], linear ones
    /// for ratios in `(0, 1)` and images inside `[0, 1]`.
    pub fn validate(&self) -> Result<()> {
        let linear = |maps: &[Similarity1D]| -> Result<()> {
            if maps.is_empty() {
                return Err(Error::Validation(format!("{}: empty map list", self.name)));
            }
            for m in maps {
                let s = Similarity1D::contraction(m.ratio.clone(), m.translate.clone())?;
                let (lo, hi) = s.unit_image();
                if lo < int(0) || hi > int(1) {
                    return Err(Error::Validation(format!("{}: {s} leaves [0, 1]", self.name)));
                }
            }
            Ok(())
        };
        match &self.set {
            GallerySet::Planar { maps } => IFSSystem::new(maps.clone()).map(|_| ()),
            GallerySet::Linear { maps } => linear(maps),
            GallerySet::Product { x, y } => linear(x).and_then(|_| linear(y)),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("gallery entries serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let g: GallerySystem = serde_json::from_str(s)?;
        g.validate()?;
        Ok(g)
    }
}

fn known(quantity: &str, expression: &str, value: f64, note: &str) -> KnownValue {
    KnownValue { quantity: quantity.into(), expression: expression.into(), value, note: note.into() }
}

fn sim(r: Rational, t: Rational) -> Similarity1D {
    Similarity1D::new(r, t)
}

fn map(a: Rational, b: Rational, u: Rational, v: Rational) -> AffineMap2D {
    AffineMap2D::new(a, b, u, v).expect("gallery maps are valid")
}

/// `{λx, λx + λ - λ², λx + 1 - λ}`.
pub fn phi_lambda(l: &Rational) -> Vec<Similarity1D> {
    let one = int(1);
    vec![sim(l.clone(), int(0)), sim(l.clone(), l - l * l), sim(l.clone(), &one - l)]
}

/// `{f ∘ g : f ∈ Φ_{λ1}, g ∈ Φ_{λ2}}`, nine maps of ratio `λ1 λ2`.
pub fn phi_composite(l1: &Rational, l2: &Rational) -> Vec<Similarity1D> {
    let mut out = Vec::new();
    for f in phi_lambda(l1) {
        for g in phi_lambda(l2) {
            out.push(f.compose(&g));
        }
    }
    out
}

/// Columns `x/2` and `x/2 + 1/2` carrying `Φ_{λ1}` and `Φ_{λ2}` vertically,
/// ordered left, right, left, right, left, right.
pub fn six_map(l1: &Rational, l2: &Rational) -> Vec<AffineMap2D> {
    let half = rat(1, 2);
    let one = int(1);
    let col = |u: Rational, l: &Rational, v: Rational| map(half.clone(), l.clone(), u, v);
    vec![
        col(int(0), l1, &one - l1),
        col(half.clone(), l2, &one - l2),
        col(int(0), l1, l1 - l1 * l1),
        col(half.clone(), l2, l2 - l2 * l2),
        col(int(0), l1, int(0)),
        col(half.clone(), l2, int(0)),
    ]
}

fn cantor_third() -> Vec<Similarity1D> {
    vec![sim(rat(1, 3), int(0)), sim(rat(1, 3), rat(2, 3))]
}

fn halves() -> Vec<Similarity1D> {
    vec![sim(rat(1, 2), int(0)), sim(rat(1, 2), rat(1, 2))]
}

/// Translation of the middle map of the strong separation example: base-9
/// digits `0 8 0 8 8 0 8 8 8 0 8 8` (a Cantor endpoint) plus `1/(2·9^12)`.
pub fn ss_esc_translation() -> Rational {
    let digits = [0i64, 8, 0, 8, 8, 0, 8, 8, 8, 0, 8, 8];
    let mut t = int(0);
    let mut p = int(1);
    for d in digits {
        p /= int(9);
        t += &p * int(d);
    }
    t + &p / int(2)
}

fn phi_dim() -> f64 {
    ((3.0 + 5f64.sqrt()) / 2.0).ln() / 4f64.ln()
}

/// Every gallery entry, in a fixed order.
pub fn gallery_list() -> Vec<GallerySystem> {
    let q = rat(1, 4);
    let pd = phi_dim();
    let cd = 2f64.ln() / 3f64.ln();
    let phi_expr = "log((3+sqrt5)/2)/log 4";
    vec![
        GallerySystem {
            name: "six-map-quarter".into(),
            set: GallerySet::Planar { maps: six_map(&q, &q) },
            known_values: vec![
                known("dimA", &format!("1 + {phi_expr}"), 1.0 + pd, "product of [0,1] with the attractor of Φ_{1/4}"),
                known("fibre-dimA", phi_expr, pd, "every fibre is the attractor of Φ_{1/4}"),
                known("dimAs", &format!("1 + {phi_expr}"), 1.0 + pd, "constant for 1/2 ≤ θ < 1: WSC self-similar fibres"),
                known("dimB", &format!("1 + {phi_expr}"), 1.0 + pd, "Ahlfors regular product"),
            ],
            caveats: String::new(),
        },
        GallerySystem {
            name: "six-map-mixed".into(),
            set: GallerySet::Planar { maps: six_map(&q, &rat(1, 8)) },
            known_values: vec![],
            caveats: "no closed form; fibres depend on the column sequence".into(),
        },
        GallerySystem {
            name: "phi-quarter".into(),
            set: GallerySet::Linear { maps: phi_lambda(&q) },
            known_values: vec![
                known("dimB", phi_expr, pd, "exact overlap (0,2) ~ (1,0); distinct maps grow like ((3+sqrt5)/2)^n"),
                known("dimqA", phi_expr, pd, "WSC, so Ahlfors regular"),
                known("dimA", phi_expr, pd, "WSC, so Ahlfors regular"),
            ],
            caveats: String::new(),
        },
        GallerySystem {
            name: "phi-product-quarter".into(),
            set: GallerySet::Linear { maps: phi_composite(&q, &q) },
            known_values: vec![known("dimB", phi_expr, pd, "same attractor as Φ_{1/4}")],
            caveats: String::new(),
        },
        GallerySystem {
            name: "phi-mixed-surrogate".into(),
            set: GallerySet::Linear { maps: phi_composite(&rat(199, 2000), &rat(20, 199)) },
            known_values: vec![],
            caveats: "λ1 = 199/2000 and λ2 = 20/199 (product 1/100) stand in for parameters chosen by a limiting \
                      argument; only finite-depth separation diagnostics are meaningful, not WSC failure itself"
                .into(),
        },
        GallerySystem {
            name: "pu-surrogate".into(),
            set: GallerySet::Planar {
                maps: vec![
                    map(rat(70, 99), rat(1, 3), int(0), int(0)),
                    map(rat(70, 99), rat(1, 3), rat(29, 99), rat(2, 3)),
                ],
            },
            known_values: vec![known(
                "formula-dimA",
                "1 + 0",
                1.0,
                "projection has no exact overlaps, so every fibre is a point",
            )],
            caveats: "horizontal ratio 70/99 replaces 1/sqrt2, whose inverse is a Garsia number; the value \
                      1 + log(2β)/(-log α) needs that algebraic property and is not claimed for the surrogate"
                .into(),
        },
        GallerySystem {
            name: "ss-esc-N9".into(),
            set: GallerySet::Planar {
                maps: vec![
                    map(rat(1, 9), rat(1, 16), int(0), int(0)),
                    map(rat(1, 9), rat(1, 16), ss_esc_translation(), rat(15, 32)),
                    map(rat(1, 9), rat(1, 16), rat(8, 9), rat(15, 16)),
                ],
            },
            known_values: vec![
                known("dimH", "log 3/log 9", 0.5, "strong separation, fibres are points"),
                known("dimqA", "log 3/log 9", 0.5, "no exact overlaps in the projection, point fibres"),
                known("formula-dimAs", "1/2 + 0", 0.5, "projection similarity dimension plus point fibres"),
            ],
            caveats: "rational middle translation t (close to a Cantor endpoint) replaces an irrational one: \
                      exact overlaps are only excluded to the tested depth, and dimA >= 1 cannot be seen at \
                      finite scales; vertical ratio 1/16 keeps θ0 = log 9/log 16 below 0.8"
                .into(),
        },
        GallerySystem {
            name: "cantor-third".into(),
            set: GallerySet::Linear { maps: cantor_third() },
            known_values: vec![
                known("dimB", "log 2/log 3", cd, "self-similar with the open set condition"),
                known("dimA", "log 2/log 3", cd, "Ahlfors regular"),
                known("dimqA", "log 2/log 3", cd, "Ahlfors regular"),
            ],
            caveats: String::new(),
        },
        GallerySystem {
            name: "cantor-product".into(),
            set: GallerySet::Product { x: cantor_third(), y: cantor_third() },
            known_values: vec![known("dimA", "2 log 2/log 3", 2.0 * cd, "Assouad dimension adds over self-similar products")],
            caveats: String::new(),
        },
        GallerySystem {
            name: "interval-x-cantor".into(),
            set: GallerySet::Product { x: halves(), y: cantor_third() },
            known_values: vec![
                known("dimA", "1 + log 2/log 3", 1.0 + cd, "product law"),
                known("dimAs", "1 + log 2/log 3", 1.0 + cd, "Ahlfors regular, spectrum constant"),
            ],
            caveats: String::new(),
        },
        GallerySystem {
            name: "gatzouras-lalley".into(),
            set: GallerySet::Planar {
                maps: vec![
                    map(rat(1, 2), q.clone(), int(0), int(0)),
                    map(rat(1, 2), q.clone(), int(0), rat(3, 4)),
                    map(rat(1, 2), q.clone(), rat(1, 2), int(0)),
                    map(rat(1, 2), q.clone(), rat(1, 2), rat(3, 4)),
                ],
            },
            known_values: vec![known("dimA", "1 + log 2/log 4", 1.5, "fibre maps satisfy the open set condition")],
            caveats: String::new(),
        },
        GallerySystem {
            name: "full-square".into(),
            set: GallerySet::Product { x: halves(), y: halves() },
            known_values: vec![known("dimA", "2", 2.0, "the unit square"), known("dimB", "2", 2.0, "the unit square")],
            caveats: String::new(),
        },
        GallerySystem {
            name: "unit-interval".into(),
            set: GallerySet::Linear { maps: halves() },
            known_values: vec![known("dimB", "1", 1.0, "the unit interval"), known("dimA", "1", 1.0, "the unit interval")],
            caveats: String::new(),
        },
    ]
}

pub fn gallery_get(name: &str) -> Result<GallerySystem> {
    gallery_list()
        .into_iter()
        .find(|g| g.name == name)
        .ok_or_else(|| Error::Validation(format!("no gallery system named {name:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::separation::{esc_delta, exact_overlap_exists};

    #[test]
    fn entries_validate_and_are_named_uniquely() {
        let g = gallery_list();
        assert!(g.len() >= 6);
        let mut names: Vec<_> = g.iter().map(|s| s.name.clone()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), g.len());
        for s in &g {
            s.validate().unwrap();
            for k in &s.known_values {
                assert!(!k.note.is_empty());
            }
        }
    }

    #[test]
    fn required_entries() {
        let six = gallery_get("six-map-quarter").unwrap();
        assert!((six.known("dimA").unwrap().value - 1.6942).abs() < 1e-4);
        assert_eq!(gallery_get("ss-esc-N9").unwrap().known("dimH").unwrap().value, 0.5);
        assert!((gallery_get("cantor-third").unwrap().known("dimB").unwrap().value - 0.6309).abs() < 1e-4);
        assert!(gallery_get("nope").is_err());
    }

    #[test]
    fn surrogates_carry_caveats() {
        for n in ["pu-surrogate", "ss-esc-N9", "phi-mixed-surrogate"] {
            assert!(!gallery_get(n).unwrap().caveats.is_empty());
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        for g in gallery_list() {
            let back = GallerySystem::from_json(&g.to_json()).unwrap();
            assert_eq!(back, g);
        }
    }

    #[test]
    fn ss_esc_parameters() {
        let t = ss_esc_translation();
        assert!(t > int(0) && t < rat(1, 9));
        // denominator 2·9^12, so not a 9-adic rational
        assert_eq!(t.denom() % 2u32, 0u32.into());
        let g = gallery_get("ss-esc-N9").unwrap();
        let sys = g.system().unwrap();
        assert!(sys.theta0() < 0.8);
        let p = sys.projected();
        assert!(exact_overlap_exists(&p, 5).unwrap().is_none());
        assert!(esc_delta(&p, 4).unwrap().unwrap().0 > int(0));
    }

    #[test]
    fn six_map_layout() {
        let m = six_map(&rat(1, 4), &rat(1, 8));
        assert_eq!(m[0].v, rat(3, 4));
        assert_eq!(m[3].v, rat(7, 64));
        assert_eq!(m[5].u, rat(1, 2));
    }
}
