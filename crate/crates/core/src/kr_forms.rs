//! Kumpera-Ruiz normal forms built from prolongation words, the chained
//! form, and derived-flag dimensions at a point.

use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::field_algebra::{PolyVectorField, Polynomial, VectorField};
use crate::linalg::{numeric_rank, RANK_TOL};
use crate::scalar::{format_rational, parse_rational, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum KrTag {
    Regular(Rational),
    Singular,
}

impl KrTag {
    pub fn regular0() -> Self {
        KrTag::Regular(Rational::zero())
    }

    pub fn is_singular(&self) -> bool {
        matches!(self, KrTag::Singular)
    }
}

impl fmt::Display for KrTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KrTag::Regular(c) => write!(f, "R({})", format_rational(c)),
            KrTag::Singular => write!(f, "S"),
        }
    }
}

/// Sequence of prolongations applied to the Pfaff-Darboux form on R^3.
///
/// Written as dot-separated tags, e.g. `R(0).S.R(1/2)`; the empty string is
/// the empty word.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct KrWord {
    pub steps: Vec<KrTag>,
}

impl KrWord {
    pub fn new(steps: Vec<KrTag>) -> Self {
        Self { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Dimension of the space the normal form lives on.
    pub fn dimension(&self) -> usize {
        3 + self.steps.len()
    }

    /// Singular flags per step; two words with the same pattern differ only
    /// in their regular constants.
    pub fn pattern(&self) -> Vec<bool> {
        self.steps.iter().map(KrTag::is_singular).collect()
    }

    /// Every word of exactly `len` steps over `alphabet`, in lexicographic
    /// order of alphabet positions.
    pub fn enumerate(alphabet: &[KrTag], len: usize) -> Vec<KrWord> {
        let mut out = vec![KrWord::default()];
        for _ in 0..len {
            out = out
                .into_iter()
                .flat_map(|w| {
                    alphabet.iter().map(move |t| {
                        let mut s = w.steps.clone();
                        s.push(t.clone());
                        KrWord::new(s)
                    })
                })
                .collect();
        }
        out
    }
}

impl fmt::Display for KrWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.steps.iter().enumerate() {
            if i > 0 {
                write!(f, ".")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

impl FromStr for KrWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: String| Error::InvalidWord {
            input: s.to_string(),
            reason,
        };
        let s_trim = s.trim();
        if s_trim.is_empty() {
            return Ok(KrWord::default());
        }
        let mut steps = Vec::new();
        for tok in s_trim.split('.') {
            let tok = tok.trim();
            if tok == "S" {
                steps.push(KrTag::Singular);
            } else if let Some(inner) = tok.strip_prefix("R(").and_then(|r| r.strip_suffix(')')) {
                let c =
                    parse_rational(inner).ok_or_else(|| bad(format!("bad constant `{inner}`")))?;
                steps.push(KrTag::Regular(c));
            } else {
                return Err(bad(format!("unknown tag `{tok}` (expected `S` or `R(c)`)")));
            }
        }
        Ok(KrWord { steps })
    }
}

impl Serialize for KrWord {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for KrWord {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The pair `(k1, k2)` of a KR normal form together with its word.
#[derive(Clone, Debug, PartialEq)]
pub struct KrPair {
    pub k1: PolyVectorField,
    pub k2: PolyVectorField,
    pub word: KrWord,
}

impl KrPair {
    pub fn dim(&self) -> usize {
        self.k1.dim()
    }

    pub fn fields(&self) -> [PolyVectorField; 2] {
        [self.k1.clone(), self.k2.clone()]
    }
}

/// `(d/dx3, x3 d/dx2 + d/dx1)` on R^3.
pub fn kappa3() -> KrPair {
    let n = 3;
    let k2 = PolyVectorField::new(vec![
        Polynomial::one(n),
        Polynomial::var(n, 2),
        Polynomial::zero(n),
    ])
    .expect("three components on R^3");
    KrPair {
        k1: PolyVectorField::unit(n, 2),
        k2,
        word: KrWord::default(),
    }
}

pub fn prolong(pair: &KrPair, tag: KrTag) -> KrPair {
    let n = pair.dim() + 1;
    let xn = Polynomial::var(n, n - 1);
    let l1 = pair.k1.lift();
    let l2 = pair.k2.lift();
    let k2 = match &tag {
        KrTag::Regular(c) => {
            let coef = &xn + &Polynomial::constant(n, c.clone());
            l1.mul_fn(&coef).and_then(|f| f.add(&l2))
        }
        KrTag::Singular => l2.mul_fn(&xn).and_then(|f| l1.add(&f)),
    }
    .expect("lifted fields share the new dimension");
    let mut word = pair.word.clone();
    word.steps.push(tag);
    KrPair {
        k1: PolyVectorField::unit(n, n - 1),
        k2,
        word,
    }
}

pub fn build_kr(word: &KrWord) -> KrPair {
    word.steps
        .iter()
        .fold(kappa3(), |p, t| prolong(&p, t.clone()))
}

/// The Goursat chained form `x_n d/dx_{n-1} + ... + x3 d/dx2 + d/dx1` with
/// `d/dx_n`.
pub fn chained_form(n: usize) -> Result<KrPair> {
    if n < 3 {
        return Err(Error::InvalidInput(format!(
            "chained form needs n >= 3, got {n}"
        )));
    }
    Ok(build_kr(&KrWord::new(vec![KrTag::regular0(); n - 3])))
}

/// `[dim D^(0)(p), ..., dim D^(depth)(p)]` for the distribution spanned by
/// `fields`.
///
/// Each level keeps only a subset of fields independent at `p`, then adds
/// brackets of pairs in which at least one field is new at that level. For
/// a distribution of constant rank near `p` (every Goursat structure) this
/// spans the same space as bracketing all sections.
pub fn derived_flag_dims<F: VectorField>(
    fields: &[F],
    point: &[f64],
    depth: usize,
) -> Result<Vec<usize>> {
    let mut kept: Vec<F> = Vec::new();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    select_independent(fields.to_vec(), point, &mut kept, &mut basis)?;
    let mut dims = vec![kept.len()];
    let mut new_from = 0;
    for _ in 0..depth {
        let level_end = kept.len();
        let mut candidates = Vec::new();
        for j in new_from..level_end {
            for i in 0..j {
                candidates.push(kept[i].bracket(&kept[j])?);
            }
        }
        select_independent(candidates, point, &mut kept, &mut basis)?;
        new_from = level_end;
        dims.push(kept.len());
    }
    Ok(dims)
}

/// Decides the rank of `kept + candidates` at `point` once, on the whole
/// matrix, then moves that many candidates into `kept` by pivoted
/// Gram-Schmidt (largest relative residual first). `basis` is an
/// orthonormal basis of the kept values.
fn select_independent<F: VectorField>(
    candidates: Vec<F>,
    point: &[f64],
    kept: &mut Vec<F>,
    basis: &mut Vec<Vec<f64>>,
) -> Result<()> {
    let mut pool: Vec<(F, Vec<f64>)> = Vec::with_capacity(candidates.len());
    for c in candidates {
        let v = c.eval(point)?;
        pool.push((c, v));
    }
    let mut rows = basis.clone();
    rows.extend(pool.iter().map(|(_, v)| v.clone()));
    let target = numeric_rank(&rows, RANK_TOL)?;
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    while basis.len() < target {
        let mut best: Option<(usize, f64, Vec<f64>)> = None;
        for (k, (_, v)) in pool.iter().enumerate() {
            let norm = dot(v, v).sqrt();
            if norm == 0.0 {
                continue;
            }
            let mut r = v.clone();
            // two passes keep the residual orthogonal in floating point
            for _ in 0..2 {
                for q in basis.iter() {
                    let c = dot(&r, q);
                    r.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
                }
            }
            let rel = dot(&r, &r).sqrt() / norm;
            if best.as_ref().is_none_or(|b| rel > b.1) {
                best = Some((k, rel, r));
            }
        }
        let Some((k, _, r)) = best else { break };
        let rn = dot(&r, &r).sqrt();
        basis.push(r.into_iter().map(|x| x / rn).collect());
        kept.push(pool.swap_remove(k).0);
    }
    Ok(())
}

/// Flag dimensions of a KR pair with the default depth `n - 2`.
pub fn kr_flag_dims(pair: &KrPair, point: &[f64]) -> Result<Vec<usize>> {
    crate::error::check_dim(pair.dim(), point.len())?;
    derived_flag_dims(&pair.fields(), point, pair.dim() - 2)
}
