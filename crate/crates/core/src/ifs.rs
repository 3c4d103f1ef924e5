//! Dominated rectangular systems `T_i(x, y) = (alpha_i x + u_i, beta_i y + v_i)`
//! with exact rational parameters, their words, and the two 1-D factors of
//! every map: the projected similarity `x -> alpha x + u` and the fibred
//! similarity `y -> beta y + v`.

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Budget, Error, Result};
use crate::rational::{format_rational, in_open_unit, ln_abs, serde_str, Rational};

/// A 1-D similarity `x -> ratio * x + translate` with positive ratio.
///
/// Equality is exact equality of the two rationals, so two similarities
/// compare equal iff they are the same function. This is what makes the
/// projected semigroup decidable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Similarity1D {
    #[serde(with = "serde_str")]
    pub ratio: Rational,
    #[serde(with = "serde_str")]
    pub translate: Rational,
}

impl Similarity1D {
    pub fn new(ratio: Rational, translate: Rational) -> Self {
        Similarity1D { ratio, translate }
    }

    /// A contraction with `ratio` in `(0, 1)`.
    pub fn contraction(ratio: Rational, translate: Rational) -> Result<Self> {
        if !in_open_unit(&ratio) {
            return Err(Error::Validation(format!(
                "similarity ratio {} not in (0, 1)",
                format_rational(&ratio)
            )));
        }
        Ok(Similarity1D { ratio, translate })
    }

    pub fn identity() -> Self {
        Similarity1D { ratio: Rational::one(), translate: Rational::zero() }
    }

    pub fn is_identity(&self) -> bool {
        self.ratio.is_one() && self.translate.is_zero()
    }

    pub fn apply(&self, x: &Rational) -> Rational {
        &self.ratio * x + &self.translate
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Similarity1D) -> Similarity1D {
        Similarity1D {
            ratio: &self.ratio * &inner.ratio,
            translate: &self.ratio * &inner.translate + &self.translate,
        }
    }

    /// Image of `[0, 1]`.
    pub fn unit_image(&self) -> (Rational, Rational) {
        (self.translate.clone(), &self.translate + &self.ratio)
    }

    /// The unique fixed point `translate / (1 - ratio)`; `None` for ratio 1.
    pub fn fixed_point(&self) -> Option<Rational> {
        let denom = Rational::one() - &self.ratio;
        (!denom.is_zero()).then(|| &self.translate / denom)
    }
}

impl fmt::Display for Similarity1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x -> {}*x + {}", format_rational(&self.ratio), format_rational(&self.translate))
    }
}

/// One generator `T(x, y) = (alpha x + u, beta y + v)`.
///
/// Validated generators satisfy `0 < beta < alpha < 1` and map the unit
/// square into itself. The empty word composes to the identity record
/// (`alpha = beta = 1`), which [`AffineMap2D::is_identity`] reports and which
/// [`IFSSystem::new`] rejects.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AffineMap2D {
    #[serde(with = "serde_str")]
    pub alpha: Rational,
    #[serde(with = "serde_str")]
    pub beta: Rational,
    #[serde(with = "serde_str")]
    pub u: Rational,
    #[serde(with = "serde_str")]
    pub v: Rational,
}

impl AffineMap2D {
    /// Validates the domination and unit-square invariants.
    pub fn new(alpha: Rational, beta: Rational, u: Rational, v: Rational) -> Result<Self> {
        let map = AffineMap2D { alpha, beta, u, v };
        map.validate()?;
        Ok(map)
    }

    pub fn identity() -> Self {
        AffineMap2D {
            alpha: Rational::one(),
            beta: Rational::one(),
            u: Rational::zero(),
            v: Rational::zero(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.alpha.is_one() && self.beta.is_one() && self.u.is_zero() && self.v.is_zero()
    }

    /// Checks every generator invariant; the message names the violated
    /// inequality.
    pub fn validate(&self) -> Result<()> {
        let f = format_rational;
        let fail = |what: String| Err(Error::Validation(what));
        if self.is_identity() {
            return fail("identity record is not a contraction".into());
        }
        if !self.beta.is_positive() {
            return fail(format!("0 < beta violated (beta = {})", f(&self.beta)));
        }
        if self.beta >= self.alpha {
            return fail(format!(
                "beta < alpha violated (alpha = {}, beta = {})",
                f(&self.alpha),
                f(&self.beta)
            ));
        }
        if self.alpha >= Rational::one() {
            return fail(format!("alpha < 1 violated (alpha = {})", f(&self.alpha)));
        }
        if self.u.is_negative() || self.u > Rational::one() - &self.alpha {
            return fail(format!(
                "0 <= u <= 1 - alpha violated (u = {}, alpha = {})",
                f(&self.u),
                f(&self.alpha)
            ));
        }
        if self.v.is_negative() || self.v > Rational::one() - &self.beta {
            return fail(format!(
                "0 <= v <= 1 - beta violated (v = {}, beta = {})",
                f(&self.v),
                f(&self.beta)
            ));
        }
        Ok(())
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &AffineMap2D) -> AffineMap2D {
        AffineMap2D {
            alpha: &self.alpha * &inner.alpha,
            beta: &self.beta * &inner.beta,
            u: &self.alpha * &inner.u + &self.u,
            v: &self.beta * &inner.v + &self.v,
        }
    }

    pub fn apply(&self, x: &Rational, y: &Rational) -> (Rational, Rational) {
        (&self.alpha * x + &self.u, &self.beta * y + &self.v)
    }

    /// The projected similarity `S` with `S ∘ π = π ∘ T`.
    pub fn project(&self) -> Similarity1D {
        Similarity1D::new(self.alpha.clone(), self.u.clone())
    }

    /// The fibred similarity `F` with `F ∘ π̄ = π̄ ∘ T`.
    pub fn fibre_map(&self) -> Similarity1D {
        Similarity1D::new(self.beta.clone(), self.v.clone())
    }

    /// Fixed point of the map (a point of the attractor for generators).
    pub fn fixed_point(&self) -> Option<(Rational, Rational)> {
        Some((self.project().fixed_point()?, self.fibre_map().fixed_point()?))
    }
}

impl fmt::Display for AffineMap2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let g = format_rational;
        write!(
            f,
            "(x, y) -> ({}*x + {}, {}*y + {})",
            g(&self.alpha),
            g(&self.u),
            g(&self.beta),
            g(&self.v)
        )
    }
}

/// Free-standing form of [`AffineMap2D::project`].
pub fn project(map: &AffineMap2D) -> Similarity1D {
    map.project()
}

/// Free-standing form of [`AffineMap2D::fibre_map`].
pub fn fibre_map(map: &AffineMap2D) -> Similarity1D {
    map.fibre_map()
}

/// A finite word over the alphabet of generator indices (0-based).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(pub Vec<usize>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn push(&mut self, i: usize) {
        self.0.push(i);
    }

    /// `self` followed by `other`.
    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.0.starts_with(&self.0)
    }

    /// Checks every index against an alphabet of `len` symbols.
    pub fn check(&self, len: usize) -> Result<()> {
        match self.0.iter().find(|&&i| i >= len) {
            Some(&index) => Err(Error::InvalidWord { index, len }),
            None => Ok(()),
        }
    }
}

impl From<Vec<usize>> for Word {
    fn from(v: Vec<usize>) -> Self {
        Word(v)
    }
}

impl<const N: usize> From<[usize; N]> for Word {
    fn from(v: [usize; N]) -> Self {
        Word(v.to_vec())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, ")")
    }
}

/// A dominated rectangular system together with its derived extremes.
#[derive(Clone, Debug, PartialEq)]
pub struct IFSSystem {
    maps: Vec<AffineMap2D>,
    alpha_max: Rational,
    alpha_min: Rational,
    beta_max: Rational,
    beta_min: Rational,
    theta0: f64,
}

impl IFSSystem {
    pub fn new(maps: Vec<AffineMap2D>) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::Validation("a system needs at least one map".into()));
        }
        for (i, m) in maps.iter().enumerate() {
            m.validate().map_err(|e| match e {
                Error::Validation(msg) => Error::Validation(format!("map {i}: {msg}")),
                other => other,
            })?;
        }
        let pick = |f: fn(&AffineMap2D) -> &Rational, max: bool| {
            let it = maps.iter().map(f);
            if max { it.max() } else { it.min() }.unwrap().clone()
        };
        let theta0 = maps
            .iter()
            .map(|m| ln_abs(&m.alpha) / ln_abs(&m.beta))
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(IFSSystem {
            alpha_max: pick(|m| &m.alpha, true),
            alpha_min: pick(|m| &m.alpha, false),
            beta_max: pick(|m| &m.beta, true),
            beta_min: pick(|m| &m.beta, false),
            theta0,
            maps,
        })
    }

    /// Embeds a 1-D similarity system as the flat planar system
    /// `(x, y) -> (r x + t, (r/3) y)`, whose attractor is `K × {0}`.
    ///
    /// Covering numbers of the embedded set in the sup norm equal those of
    /// the 1-D attractor. The factor `1/3` keeps vertical sizes off the
    /// dyadic grid lines for dyadic ratios.
    pub fn from_linear(maps: &[Similarity1D]) -> Result<Self> {
        let three = Rational::from_integer(3.into());
        Self::new(
            maps.iter()
                .map(|s| AffineMap2D::new(s.ratio.clone(), &s.ratio / &three, s.translate.clone(), Rational::zero()))
                .collect::<Result<_>>()?,
        )
    }

    pub fn maps(&self) -> &[AffineMap2D] {
        &self.maps
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn alpha_max(&self) -> &Rational {
        &self.alpha_max
    }

    pub fn alpha_min(&self) -> &Rational {
        &self.alpha_min
    }

    pub fn beta_max(&self) -> &Rational {
        &self.beta_max
    }

    pub fn beta_min(&self) -> &Rational {
        &self.beta_min
    }

    /// `max_i log(alpha_i) / log(beta_i)`, the left end of the range where
    /// the spectrum formula applies.
    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn alphas(&self) -> Vec<Rational> {
        self.maps.iter().map(|m| m.alpha.clone()).collect()
    }

    /// The projected system `{S_i}` in generator order (duplicates kept).
    pub fn projected(&self) -> Vec<Similarity1D> {
        self.maps.iter().map(AffineMap2D::project).collect()
    }

    /// The fibred maps `{F_i}` in generator order.
    pub fn fibred(&self) -> Vec<Similarity1D> {
        self.maps.iter().map(AffineMap2D::fibre_map).collect()
    }

    /// `T_σ = T_{i_1} ∘ … ∘ T_{i_n}`; the empty word gives the identity record.
    pub fn compose_word(&self, word: &Word) -> Result<AffineMap2D> {
        word.check(self.len())?;
        Ok(word
            .indices()
            .iter()
            .fold(AffineMap2D::identity(), |acc, &i| acc.compose(&self.maps[i])))
    }

    /// Projected similarity of a word.
    pub fn project_word(&self, word: &Word) -> Result<Similarity1D> {
        word.check(self.len())?;
        Ok(word
            .indices()
            .iter()
            .fold(Similarity1D::identity(), |acc, &i| acc.compose(&self.maps[i].project())))
    }

    /// Fibred similarity of a word.
    pub fn fibre_word(&self, word: &Word) -> Result<Similarity1D> {
        word.check(self.len())?;
        Ok(word
            .indices()
            .iter()
            .fold(Similarity1D::identity(), |acc, &i| acc.compose(&self.maps[i].fibre_map())))
    }

    pub fn to_file(&self) -> SystemFile {
        SystemFile { maps: self.maps.clone() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("system serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: SystemFile = serde_json::from_str(s)?;
        IFSSystem::new(file.maps)
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Free-standing form of [`IFSSystem::compose_word`].
pub fn compose_word(system: &IFSSystem, word: &Word) -> Result<AffineMap2D> {
    system.compose_word(word)
}

/// On-disk system definition:
/// `{"maps":[{"alpha":"1/2","beta":"1/4","u":"0","v":"3/4"}, ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemFile {
    pub maps: Vec<AffineMap2D>,
}

/// The stopping set `Λ_r`: words with `α_σ ≤ r < α_{σ⁻}`, in lexicographic
/// order.
///
/// Enumeration is a depth-first expansion pruned as soon as the product
/// drops to `r`, so the work is proportional to the size of the output.
pub fn stopping_words(ratios: &[Rational], r: &Rational) -> Result<Vec<Word>> {
    stopping_words_capped(ratios, r, crate::error::default_cap())
}

pub fn stopping_words_capped(ratios: &[Rational], r: &Rational, cap: u64) -> Result<Vec<Word>> {
    if !in_open_unit(r) {
        return Err(Error::domain(format!("stopping scale r = {} must lie in (0, 1)", format_rational(r))));
    }
    if ratios.is_empty() {
        return Err(Error::domain("stopping set of an empty ratio list"));
    }
    if let Some(bad) = ratios.iter().find(|q| !in_open_unit(q)) {
        return Err(Error::domain(format!("ratio {} not in (0, 1)", format_rational(bad))));
    }
    let mut budget = Budget::new("stopping words", cap);
    let mut out = Vec::new();
    let mut word = Vec::new();
    descend(ratios, r, &Rational::one(), &mut word, &mut out, &mut budget)?;
    Ok(out)
}

fn descend(
    ratios: &[Rational],
    r: &Rational,
    product: &Rational,
    word: &mut Vec<usize>,
    out: &mut Vec<Word>,
    budget: &mut Budget,
) -> Result<()> {
    for (i, a) in ratios.iter().enumerate() {
        let p = product * a;
        word.push(i);
        if &p <= r {
            budget.spend(1)?;
            out.push(Word(word.clone()));
        } else {
            descend(ratios, r, &p, word, out, budget)?;
        }
        word.pop();
    }
    Ok(())
}
