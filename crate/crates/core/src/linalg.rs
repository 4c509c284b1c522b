//! Rank decisions: numeric (SVD at a point) and exact (rational row
//! reduction).

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::Rational;

/// Relative singular-value threshold for numeric rank.
pub const RANK_TOL: f64 = 1e-8;

/// Singular values within this factor of the threshold (either side) make
/// the rank decision ambiguous.
pub const AMBIGUITY_FACTOR: f64 = 100.0;

/// Numeric rank of the matrix whose rows are `rows`.
///
/// Counts singular values above `tol * sigma_max`. A singular value ratio
/// inside `[tol / AMBIGUITY_FACTOR, tol * AMBIGUITY_FACTOR]` is reported as
/// [`Error::AmbiguousRank`].
pub fn numeric_rank(rows: &[Vec<f64>], tol: f64) -> Result<usize> {
    let Some(ncols) = rows.first().map(Vec::len) else {
        return Ok(0);
    };
    let m = DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]);
    let sv = m.svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return Ok(0);
    }
    let mut rank = 0;
    for s in sv.iter() {
        let ratio = s / smax;
        if ratio > tol / AMBIGUITY_FACTOR && ratio < tol * AMBIGUITY_FACTOR {
            return Err(Error::AmbiguousRank { ratio });
        }
        if ratio > tol {
            rank += 1;
        }
    }
    Ok(rank)
}

pub type SparseVec = BTreeMap<usize, Rational>;

fn axpy(dst: &mut SparseVec, a: &Rational, x: &SparseVec) {
    for (k, v) in x {
        let e = dst.entry(*k).or_insert_with(Rational::zero);
        *e += a * v;
        if e.is_zero() {
            dst.remove(k);
        }
    }
}

/// Incremental exact row echelon form over the rationals.
///
/// Each inserted independent vector becomes element `0, 1, 2, …`; every
/// stored row remembers its expression in terms of those elements so that
/// vectors in the span can be written in element coordinates.
#[derive(Clone, Debug, Default)]
pub struct Echelon {
    // pivot column -> (row with unit pivot, row as combination of elements)
    rows: BTreeMap<usize, (SparseVec, SparseVec)>,
    elements: usize,
}

impl Echelon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.elements
    }

    /// Returns the residual of `v` after elimination and the combination of
    /// elements that was subtracted (`v = residual + combo · elements`).
    pub fn reduce(&self, mut v: SparseVec) -> (SparseVec, SparseVec) {
        let mut combo = SparseVec::new();
        let mut cursor = 0usize;
        while let Some((&k, coef)) = v.range(cursor..).next() {
            if let Some((row, row_combo)) = self.rows.get(&k) {
                let lambda = coef.clone();
                axpy(&mut v, &-lambda.clone(), row);
                axpy(&mut combo, &lambda, row_combo);
            }
            cursor = k + 1;
        }
        (v, combo)
    }

    pub fn contains(&self, v: &SparseVec) -> bool {
        self.reduce(v.clone()).0.is_empty()
    }

    /// Coordinates of `v` in terms of the inserted elements, or `None` if
    /// `v` is outside their span.
    pub fn coordinates(&self, v: &SparseVec) -> Option<SparseVec> {
        let (res, combo) = self.reduce(v.clone());
        res.is_empty().then_some(combo)
    }

    /// Inserts `v` if it is independent of the current elements.
    pub fn insert(&mut self, v: SparseVec) -> bool {
        let (mut res, mut combo) = self.reduce(v);
        let Some((&pivot, lead)) = res.iter().next() else {
            return false;
        };
        let inv = Rational::one() / lead.clone();
        // row = (v - combo·elements) / lead, and v is the new element
        for c in combo.values_mut() {
            *c = -(&*c) * &inv;
        }
        combo.insert(self.elements, inv.clone());
        for c in res.values_mut() {
            *c *= &inv;
        }
        self.rows.insert(pivot, (res, combo));
        self.elements += 1;
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio};

    fn sv(entries: &[(usize, i64)]) -> SparseVec {
        entries.iter().map(|&(k, v)| (k, int(v))).collect()
    }

    #[test]
    fn echelon_detects_dependence_and_coordinates() {
        let mut e = Echelon::new();
        let a = sv(&[(0, 1), (1, 2)]);
        let b = sv(&[(1, 1), (2, 3)]);
        assert!(e.insert(a.clone()));
        assert!(e.insert(b.clone()));
        // 2a - 3b
        let mut c = SparseVec::new();
        axpy(&mut c, &int(2), &a);
        axpy(&mut c, &int(-3), &b);
        assert!(!e.insert(c.clone()));
        let coords = e.coordinates(&c).unwrap();
        assert_eq!(coords.get(&0), Some(&int(2)));
        assert_eq!(coords.get(&1), Some(&int(-3)));
        assert!(e.coordinates(&sv(&[(5, 1)])).is_none());
        assert_eq!(e.rank(), 2);
    }

    #[test]
    fn echelon_with_fractional_pivots() {
        let mut e = Echelon::new();
        assert!(e.insert(sv(&[(3, 2), (4, 1)])));
        assert!(e.insert(sv(&[(0, 3), (3, 1)])));
        let v: SparseVec = [(0, ratio(3, 2)), (3, ratio(3, 2)), (4, ratio(1, 2))]
            .into_iter()
            .collect();
        let coords = e.coordinates(&v).unwrap();
        assert_eq!(coords.get(&0), Some(&ratio(1, 2)));
        assert_eq!(coords.get(&1), Some(&ratio(1, 2)));
    }

    #[test]
    fn numeric_rank_basic() {
        let rows = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![1.0, 1.0, 0.0],
        ];
        assert_eq!(numeric_rank(&rows, RANK_TOL).unwrap(), 2);
        assert_eq!(numeric_rank(&[vec![0.0, 0.0]], RANK_TOL).unwrap(), 0);
        let amb = vec![vec![1.0, 0.0], vec![0.0, 1e-8]];
        assert!(matches!(
            numeric_rank(&amb, RANK_TOL),
            Err(Error::AmbiguousRank { .. })
        ));
    }
}
