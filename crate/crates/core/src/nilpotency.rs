//! Lie algebra generated by a pair of polynomial fields: exact bracket
//! closure, lower central series and Engel-style ad checks.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field_algebra::{Exponents, PolyVectorField, Polynomial, VectorField};
use crate::kr_forms::{KrPair, KrWord};
use crate::linalg::{Echelon, SparseVec};
use crate::scalar::Rational;

pub const DEFAULT_MAX_DIM: usize = 200;

/// Maps `(component, monomial)` pairs to columns so that fields can be row
/// reduced as plain coefficient vectors.
#[derive(Debug, Default)]
struct Frame {
    columns: HashMap<(usize, Exponents), usize>,
}

impl Frame {
    fn vector(&mut self, f: &PolyVectorField) -> SparseVec {
        let mut out = SparseVec::new();
        for (i, comp) in f.components().iter().enumerate() {
            for (e, c) in comp.terms() {
                let next = self.columns.len();
                let col = *self.columns.entry((i, e.clone())).or_insert(next);
                out.insert(col, c.clone());
            }
        }
        out
    }
}

/// A basis of a finite-dimensional Lie algebra of polynomial fields with its
/// structure constants.
#[derive(Clone, Debug)]
pub struct LieBasis {
    pub elements: Vec<PolyVectorField>,
    /// Indices of the generating fields among `elements`.
    pub generators: Vec<usize>,
    /// `(i, j)` with `i < j` to the coordinates of `[e_i, e_j]`.
    pub bracket_table: BTreeMap<(usize, usize), SparseVec>,
}

impl LieBasis {
    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    /// Coordinates of `[e_i, e_j]` for any `i, j`.
    pub fn bracket_coords(&self, i: usize, j: usize) -> SparseVec {
        use std::cmp::Ordering;
        match i.cmp(&j) {
            Ordering::Equal => SparseVec::new(),
            Ordering::Less => self.bracket_table[&(i, j)].clone(),
            Ordering::Greater => self.bracket_table[&(j, i)]
                .iter()
                .map(|(k, v)| (*k, -v))
                .collect(),
        }
    }

    /// `sum_k coords[k] * e_k` as a field.
    pub fn combine(&self, coords: &SparseVec) -> PolyVectorField {
        let dim = self.elements[0].dim();
        coords
            .iter()
            .fold(PolyVectorField::zero(dim), |acc, (k, c)| {
                acc.add(&self.elements[*k].scale(c))
                    .expect("basis fields share a dimension")
            })
    }

    /// `ad_{e_i}(v)` for a vector `v` in basis coordinates.
    pub fn ad(&self, i: usize, v: &SparseVec) -> SparseVec {
        let mut out = SparseVec::new();
        for (j, cj) in v {
            for (k, ck) in self.bracket_coords(i, *j) {
                let e = out.entry(k).or_insert_with(Rational::zero);
                *e += cj * ck;
                if e.is_zero() {
                    out.remove(&k);
                }
            }
        }
        out
    }
}

pub fn generate_algebra(pair: &KrPair, max_dim: usize) -> Result<LieBasis> {
    generate_algebra_from(&pair.fields(), max_dim)
}

/// Closes the span of `generators` under brackets.
///
/// Pairs are visited breadth-first in insertion order (`i < j`, `j`
/// ascending), so the basis and table are reproducible.
pub fn generate_algebra_from(generators: &[PolyVectorField], max_dim: usize) -> Result<LieBasis> {
    if max_dim < 2 {
        return Err(Error::InvalidInput(format!(
            "max_dim must be >= 2, got {max_dim}"
        )));
    }
    let mut frame = Frame::default();
    let mut ech = Echelon::new();
    let mut basis = LieBasis {
        elements: Vec::new(),
        generators: Vec::new(),
        bracket_table: BTreeMap::new(),
    };
    for g in generators {
        if ech.insert(frame.vector(g)) {
            basis.generators.push(basis.elements.len());
            basis.elements.push(g.clone());
        }
    }
    let mut j = 0;
    while j < basis.elements.len() {
        for i in 0..j {
            let b = basis.elements[i].bracket(&basis.elements[j])?;
            let v = frame.vector(&b);
            let coords = if ech.insert(v.clone()) {
                let idx = basis.elements.len();
                basis.elements.push(b);
                if basis.elements.len() > max_dim {
                    return Err(Error::BudgetExceeded {
                        what: "Lie algebra dimension",
                        size: basis.elements.len(),
                        limit: max_dim,
                    });
                }
                SparseVec::from([(idx, Rational::one())])
            } else {
                ech.coordinates(&v)
                    .expect("dependent vector lies in the span")
            };
            basis.bracket_table.insert((i, j), coords);
        }
        j += 1;
    }
    Ok(basis)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CentralSeries {
    /// `dim D_0, dim D_1, ...` up to the first zero (nilpotent) or the first
    /// repeated value (not nilpotent).
    pub dims: Vec<usize>,
    pub nilindex: Option<usize>,
    /// Basis vectors of each `D_k`, in element coordinates.
    #[serde(skip)]
    pub subspaces: Vec<Vec<SparseVec>>,
}

/// Lower central series `D_k = [g, D_{k-1}]` computed from structure
/// constants.
pub fn lower_central_series(basis: &LieBasis) -> CentralSeries {
    let d = basis.dim();
    let mut current: Vec<SparseVec> = (0..d)
        .map(|k| SparseVec::from([(k, Rational::one())]))
        .collect();
    let mut dims = vec![d];
    let mut subspaces = vec![current.clone()];
    loop {
        if current.is_empty() {
            let nilindex = Some(dims.len() - 1);
            return CentralSeries {
                dims,
                nilindex,
                subspaces,
            };
        }
        let mut ech = Echelon::new();
        let mut next = Vec::new();
        for i in 0..d {
            for v in &current {
                let w = basis.ad(i, v);
                if ech.insert(w.clone()) {
                    next.push(w);
                }
            }
        }
        let prev = *dims.last().unwrap();
        dims.push(next.len());
        subspaces.push(next.clone());
        if next.len() == prev {
            return CentralSeries {
                dims,
                nilindex: None,
                subspaces,
            };
        }
        current = next;
    }
}

/// Smallest `m >= 1` with `(ad_{e_index})^m = 0`.
pub fn ad_nilpotency_check(basis: &LieBasis, index: usize) -> Result<usize> {
    let d = basis.dim();
    if index >= d {
        return Err(Error::InvalidInput(format!(
            "basis index {index} out of range for dimension {d}"
        )));
    }
    let mut images: Vec<SparseVec> = (0..d)
        .map(|k| SparseVec::from([(k, Rational::one())]))
        .collect();
    for m in 1..=d.max(1) {
        images = images
            .iter()
            .map(|v| basis.ad(index, v))
            .filter(|v| !v.is_empty())
            .collect();
        if images.is_empty() {
            return Ok(m);
        }
    }
    Err(Error::NotNilpotent { index, dim: d })
}

#[derive(Clone, Debug, Serialize)]
pub struct NilpotencyReport {
    pub word: KrWord,
    pub space_dimension: usize,
    pub dimension: usize,
    pub lower_central_series: Vec<usize>,
    pub nilindex: Option<usize>,
    /// Nilpotency order of `ad` for each generator (`k1`, `k2`); `null` when
    /// not nilpotent.
    pub ad_orders: Vec<Option<usize>>,
    pub basis: Vec<String>,
}

pub fn nilpotency_report(pair: &KrPair, max_dim: usize) -> Result<NilpotencyReport> {
    let basis = generate_algebra(pair, max_dim)?;
    let lcs = lower_central_series(&basis);
    let ad_orders = basis
        .generators
        .iter()
        .map(|&g| ad_nilpotency_check(&basis, g).ok())
        .collect();
    Ok(NilpotencyReport {
        word: pair.word.clone(),
        space_dimension: pair.dim(),
        dimension: basis.dim(),
        lower_central_series: lcs.dims,
        nilindex: lcs.nilindex,
        ad_orders,
        basis: basis.elements.iter().map(|e| e.to_string()).collect(),
    })
}

/// `{x d/dx, d/dx}` on the line: a two-dimensional solvable algebra that is
/// not nilpotent.
pub fn affine_line_fields() -> [PolyVectorField; 2] {
    let x = Polynomial::var(1, 0);
    [
        PolyVectorField::new(vec![x]).expect("one component"),
        PolyVectorField::unit(1, 0),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kr_forms::kappa3;

    #[test]
    fn heisenberg() {
        let b = generate_algebra(&kappa3(), 10).unwrap();
        assert_eq!(b.dim(), 3);
        let lcs = lower_central_series(&b);
        assert_eq!(lcs.dims, vec![3, 1, 0]);
        assert_eq!(lcs.nilindex, Some(2));
        assert_eq!(ad_nilpotency_check(&b, 0).unwrap(), 2);
        assert_eq!(ad_nilpotency_check(&b, 2).unwrap(), 1);
    }

    #[test]
    fn affine_line_is_not_nilpotent() {
        let b = generate_algebra_from(&affine_line_fields(), 10).unwrap();
        assert_eq!(b.dim(), 2);
        let lcs = lower_central_series(&b);
        assert_eq!(lcs.nilindex, None);
        assert_eq!(lcs.dims, vec![2, 1, 1]);
        assert!(matches!(
            ad_nilpotency_check(&b, 0),
            Err(Error::NotNilpotent { .. })
        ));
    }

    #[test]
    fn budget_is_reported() {
        let pair = crate::kr_forms::chained_form(5).unwrap();
        assert!(matches!(
            generate_algebra(&pair, 3),
            Err(Error::BudgetExceeded { .. })
        ));
    }
}
