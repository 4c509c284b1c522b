//! Steering in KR coordinates with polynomial controls
//! `u1 = a_0 + a_1 t + ... + a_{d-2} t^{d-2}`, `u2 = b0` on `[0, 1]`.
//!
//! KR normal forms are strictly upper triangular (`x_i'` only involves
//! `x_j` with `j > i`), so the endpoint is obtained by integrating from the
//! last coordinate down to the first with exact polynomial
//! antiderivatives.

mod two_trailer;

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::field_algebra::Polynomial;
use crate::kr_forms::{build_kr, KrPair, KrWord};
use crate::scalar::{Rational, Scalar};

pub use two_trailer::{
    parabola_rhs, plan, reachable, solve_two_trailer, ControlLaw, RootChoice, SteeringPlan,
    TwoTrailerQuadratic,
};

/// Longest KR word accepted by [`endpoint_map`].
pub const MAX_WORD_LEN: usize = 4;

/// Limit on the total number of terms in an endpoint map.
pub const MAX_TERMS: usize = 2_000_000;

/// Endpoint `x(1)` of a KR system as exact polynomials in the control
/// coefficients and the initial state.
///
/// Variable layout: `a_0 .. a_{d-2}` (coefficients of `u1`), then `b0`,
/// then `x0_1 .. x0_d`.
#[derive(Clone, Debug, PartialEq)]
pub struct EndpointMap {
    pub dim: usize,
    pub polys: Vec<Polynomial>,
}

impl EndpointMap {
    pub fn num_u1_coeffs(&self) -> usize {
        self.dim - 1
    }

    pub fn num_vars(&self) -> usize {
        2 * self.dim
    }

    pub fn var_a(&self, k: usize) -> usize {
        assert!(k < self.num_u1_coeffs());
        k
    }

    pub fn var_b0(&self) -> usize {
        self.dim - 1
    }

    pub fn var_x0(&self, i: usize) -> usize {
        assert!(i < self.dim);
        self.dim + i
    }

    fn point<T: Scalar>(&self, a: &[T], b0: &T, x0: &[T]) -> Result<Vec<T>> {
        crate::error::check_dim(self.num_u1_coeffs(), a.len())?;
        crate::error::check_dim(self.dim, x0.len())?;
        let mut p = a.to_vec();
        p.push(b0.clone());
        p.extend_from_slice(x0);
        Ok(p)
    }

    pub fn eval<T: Scalar>(&self, a: &[T], b0: &T, x0: &[T]) -> Result<Vec<T>> {
        let p = self.point(a, b0, x0)?;
        Ok(self.polys.iter().map(|q| q.eval(&p)).collect())
    }

    /// Fixes the initial state to `x0`.
    pub fn with_initial(&self, x0: &[Rational]) -> Result<EndpointMap> {
        crate::error::check_dim(self.dim, x0.len())?;
        let polys = self
            .polys
            .iter()
            .map(|p| {
                x0.iter()
                    .enumerate()
                    .fold(p.clone(), |acc, (i, v)| acc.substitute(self.var_x0(i), v))
            })
            .collect();
        Ok(EndpointMap {
            dim: self.dim,
            polys,
        })
    }

    /// Groups the terms of coordinate `i` by their exponents in the `u1`
    /// coefficients, evaluating the remaining variables (`b0`, `x0`).
    pub fn collect_in_u1<T: Scalar>(
        &self,
        i: usize,
        b0: &T,
        x0: &[T],
    ) -> Result<BTreeMap<Vec<u32>, T>> {
        crate::error::check_dim(self.dim, x0.len())?;
        let m = self.num_u1_coeffs();
        let mut rest = vec![b0.clone()];
        rest.extend_from_slice(x0);
        let mut out: BTreeMap<Vec<u32>, T> = BTreeMap::new();
        for (e, c) in self.polys[i].terms() {
            let mut v = T::from_rational(c);
            for (x, &k) in rest.iter().zip(&e[m..]) {
                for _ in 0..k {
                    v = v * x.clone();
                }
            }
            let key = e[..m].to_vec();
            let slot = out.entry(key).or_insert_with(T::zero);
            *slot = slot.clone() + v;
        }
        Ok(out)
    }
}

pub fn endpoint_map_for_word(word: &KrWord) -> Result<EndpointMap> {
    if word.len() > MAX_WORD_LEN {
        return Err(Error::BudgetExceeded {
            what: "KR word length",
            size: word.len(),
            limit: MAX_WORD_LEN,
        });
    }
    endpoint_map(&build_kr(word))
}

/// Integrates `x' = u1 k1(x) + u2 k2(x)` symbolically on `[0, 1]`.
pub fn endpoint_map(pair: &KrPair) -> Result<EndpointMap> {
    let d = pair.dim();
    let nv = 2 * d + 1;
    let t = nv - 1;
    let m = d - 1;
    let b0 = Polynomial::var(nv, m);
    let mut u1 = Polynomial::zero(nv);
    for k in 0..m {
        let tk = Polynomial::monomial(
            nv,
            unit_exp(nv, t, k as u32),
            Rational::from_integer(1.into()),
        );
        u1 = &u1 + &(&Polynomial::var(nv, k) * &tk);
    }
    let mut xt: Vec<Option<Polynomial>> = vec![None; d];
    let mut terms = 0usize;
    for i in (0..d).rev() {
        let k2 = pair.k2.component(i);
        if let Some(j) = (0..=i).find(|&j| k2.depends_on(j)) {
            return Err(Error::NotTriangular {
                component: i + 1,
                var: j + 1,
            });
        }
        let k1 = pair.k1.component(i);
        if let Some(j) = (0..d).find(|&j| k1.depends_on(j)) {
            return Err(Error::NotTriangular {
                component: i + 1,
                var: j + 1,
            });
        }
        let images: Vec<Polynomial> = xt
            .iter()
            .map(|p| p.clone().unwrap_or_else(|| Polynomial::zero(nv)))
            .collect();
        let mut rate = &b0 * &k2.compose(&images);
        if let Some(c) = k1.as_constant() {
            rate = &rate + &u1.scale(&c);
        }
        let xi = &Polynomial::var(nv, d + i) + &rate.antiderivative(t);
        terms += xi.num_terms();
        if terms > MAX_TERMS {
            return Err(Error::BudgetExceeded {
                what: "endpoint polynomial terms",
                size: terms,
                limit: MAX_TERMS,
            });
        }
        xt[i] = Some(xi);
    }
    let mut at_one: Vec<Polynomial> = (0..nv - 1).map(|k| Polynomial::var(nv - 1, k)).collect();
    at_one.push(Polynomial::one(nv - 1));
    let polys = xt
        .into_iter()
        .map(|p| p.expect("every coordinate integrated").compose(&at_one))
        .collect();
    Ok(EndpointMap { dim: d, polys })
}

fn unit_exp(n: usize, var: usize, k: u32) -> Vec<u32> {
    let mut e = vec![0; n];
    e[var] = k;
    e
}

/// Solves the square system `m x = rhs` by Gaussian elimination with
/// pivoting on the largest magnitude entry.
pub(crate) fn solve_linear<T: Scalar>(mut m: Vec<Vec<T>>, mut rhs: Vec<T>) -> Result<Vec<T>> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&a, &b| {
                m[a][col]
                    .abs()
                    .partial_cmp(&m[b][col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("non-empty range");
        if m[piv][col].is_zero() {
            return Err(Error::Unreachable(
                "linear stage of the endpoint system is singular".into(),
            ));
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col].clone() / m[col][col].clone();
            for c in col..n {
                let v = m[col][c].clone() * f.clone();
                m[r][c] = m[r][c].clone() - v;
            }
            let v = rhs[col].clone() * f;
            rhs[r] = rhs[r].clone() - v;
        }
    }
    let mut x = vec![T::zero(); n];
    for r in (0..n).rev() {
        let mut acc = rhs[r].clone();
        for c in r + 1..n {
            acc = acc - m[r][c].clone() * x[c].clone();
        }
        x[r] = acc / m[r][r].clone();
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kr_forms::kappa3;
    use crate::scalar::{int, ratio};

    #[test]
    fn heisenberg_endpoint() {
        // x3' = u1 = a0 + a1 t, x2' = x3 b0, x1' = b0
        let e = endpoint_map(&kappa3()).unwrap();
        let x = e
            .eval(&[int(2), int(0)], &int(3), &[int(0), int(0), int(0)])
            .unwrap();
        assert_eq!(x, vec![int(3), int(3), int(2)]);
        let x = e
            .eval(&[int(0), int(0)], &int(0), &[int(1), ratio(1, 2), int(7)])
            .unwrap();
        assert_eq!(x, vec![int(1), ratio(1, 2), int(7)]);
    }

    #[test]
    fn linear_solve() {
        let m = vec![vec![int(0), int(1)], vec![int(2), int(1)]];
        let x = solve_linear(m, vec![int(3), int(5)]).unwrap();
        assert_eq!(x, vec![int(1), int(3)]);
    }
}
