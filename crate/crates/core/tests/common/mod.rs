//! Test-side polynomial vector fields, kept separate from the library types
//! so they can serve as an oracle.
#![allow(dead_code)]

use std::collections::BTreeMap;

use num_traits::Zero;

use kr_steer::field_algebra::PolyVectorField;
use kr_steer::kr_forms::{KrTag, KrWord};
use kr_steer::scalar::{int, Rational};

pub type Poly = BTreeMap<Vec<u32>, Rational>;
pub type Field = Vec<Poly>;

pub fn add_term(p: &mut Poly, e: Vec<u32>, c: Rational) {
    let slot = p.entry(e.clone()).or_insert_with(Rational::zero);
    *slot += c;
    if slot.is_zero() {
        p.remove(&e);
    }
}

pub fn mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = Poly::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let e = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
            add_term(&mut out, e, ca * cb);
        }
    }
    out
}

pub fn partial(p: &Poly, v: usize) -> Poly {
    let mut out = Poly::new();
    for (e, c) in p {
        if e[v] > 0 {
            let mut e2 = e.clone();
            e2[v] -= 1;
            add_term(&mut out, e2, c * Rational::from_integer(e[v].into()));
        }
    }
    out
}

pub fn bracket(f: &Field, g: &Field) -> Field {
    let n = f.len();
    (0..n)
        .map(|i| {
            let mut out = Poly::new();
            for j in 0..n {
                for (e, c) in mul(&f[j], &partial(&g[i], j)) {
                    add_term(&mut out, e, c);
                }
                for (e, c) in mul(&g[j], &partial(&f[i], j)) {
                    add_term(&mut out, e, -c);
                }
            }
            out
        })
        .collect()
}

pub fn monomial(n: usize, var: Option<usize>, c: Rational) -> Poly {
    let mut e = vec![0; n];
    if let Some(v) = var {
        e[v] = 1;
    }
    Poly::from([(e, c)])
}

pub fn extend(f: &Field) -> Field {
    let mut out: Field = f
        .iter()
        .map(|p| {
            p.iter()
                .map(|(e, c)| ([e.clone(), vec![0]].concat(), c.clone()))
                .collect()
        })
        .collect();
    out.push(Poly::new());
    out
}

pub fn scale_by(f: &Field, p: &Poly) -> Field {
    f.iter().map(|c| mul(c, p)).collect()
}

pub fn sum(a: &Field, b: &Field) -> Field {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let mut out = x.clone();
            for (e, c) in y {
                add_term(&mut out, e.clone(), c.clone());
            }
            out
        })
        .collect()
}

/// Oracle KR pair for a word, built from the prolongation rules.
pub fn oracle_kr(word: &KrWord) -> (Field, Field) {
    let one = |n| monomial(n, None, int(1));
    let mut k1: Field = vec![Poly::new(), Poly::new(), one(3)];
    let mut k2: Field = vec![one(3), monomial(3, Some(2), int(1)), Poly::new()];
    for t in &word.steps {
        let n = k1.len() + 1;
        let (l1, l2) = (extend(&k1), extend(&k2));
        let xn = monomial(n, Some(n - 1), int(1));
        k2 = match t {
            KrTag::Regular(c) => {
                let mut coef = xn.clone();
                add_term(&mut coef, vec![0; n], c.clone());
                sum(&scale_by(&l1, &coef), &l2)
            }
            KrTag::Singular => sum(&l1, &scale_by(&l2, &xn)),
        };
        k1 = (0..n)
            .map(|i| if i == n - 1 { one(n) } else { Poly::new() })
            .collect();
    }
    (k1, k2)
}

pub fn from_library(f: &PolyVectorField) -> Field {
    f.components()
        .iter()
        .map(|p| p.terms().map(|(e, c)| (e.clone(), c.clone())).collect())
        .collect()
}

/// Polynomial in `t` with rational coefficients, lowest degree first.
pub type Series = Vec<Rational>;

fn series_mul(a: &Series, b: &Series) -> Series {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Rational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn series_add(a: &mut Series, b: &Series) {
    if a.len() < b.len() {
        a.resize(b.len(), Rational::zero());
    }
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

/// Substitutes the trajectories `xs` into a polynomial in the state.
fn compose(p: &Poly, xs: &[Series]) -> Series {
    let mut out = Series::new();
    for (e, c) in p {
        let mut term = vec![c.clone()];
        for (x, &k) in xs.iter().zip(e) {
            for _ in 0..k {
                term = series_mul(&term, x);
            }
        }
        series_add(&mut out, &term);
    }
    out
}

/// Exact solution at `t = 1` of `x' = u1(t) k1(x) + u2 k2(x)` for a
/// triangular pair, with `u1(t) = sum u1[k] t^k` and constant `u2`.
///
/// Picard iteration on polynomials in `t`: each pass fixes at least one
/// more coordinate, so `dim` passes give the exact trajectory.
pub fn integrate_exact(
    k1: &Field,
    k2: &Field,
    u1: &[Rational],
    u2: &Rational,
    x0: &[Rational],
) -> Vec<Rational> {
    let d = x0.len();
    let mut xs: Vec<Series> = x0.iter().map(|v| vec![v.clone()]).collect();
    for _ in 0..=d {
        xs = (0..d)
            .map(|i| {
                let mut rate = series_mul(&compose(&k1[i], &xs), &u1.to_vec());
                series_add(
                    &mut rate,
                    &series_mul(&compose(&k2[i], &xs), &vec![u2.clone()]),
                );
                let mut x = vec![x0[i].clone()];
                for (k, c) in rate.iter().enumerate() {
                    x.push(c / Rational::from_integer((k as i64 + 1).into()));
                }
                x
            })
            .collect();
    }
    xs.iter()
        .map(|x| x.iter().fold(Rational::zero(), |acc, c| acc + c))
        .collect()
}
