//! Two-trailer steering: the KR system
//!
//! ```text
//! x1' = x5 u2,  x2' = x5 x3 u2,  x3' = x5 x4 u2,  x4' = u2,  x5' = u1
//! ```
//!
//! under `u1 = a2 + a3 t + a4 t^2 + a5 t^3`, `u2 = a1`. The conditions on
//! `x1, x3, x4, x5` are linear in the coefficients, leaving a quadratic in
//! `a2` for `x2`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::{endpoint_map_for_word, solve_linear, EndpointMap};
use crate::conversion::{two_trailer_chain, two_trailer_map, window_index};
use crate::error::{check_dim, Error, Result};
use crate::kr_forms::{KrTag, KrWord};
use crate::scalar::{ratio, Scalar};
use crate::trailer::Configuration;

fn two_trailer_endpoint() -> &'static EndpointMap {
    static MAP: OnceLock<EndpointMap> = OnceLock::new();
    MAP.get_or_init(|| {
        endpoint_map_for_word(&KrWord::new(vec![KrTag::regular0(), KrTag::Singular]))
            .expect("two-trailer word is within budget")
    })
}

/// `u1(t) = sum u1[k] t^k`, `u2(t) = u2` on `[0, horizon]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlLaw<T> {
    pub u1: Vec<T>,
    pub u2: T,
    pub horizon: f64,
}

impl ControlLaw<f64> {
    pub fn at(&self, t: f64) -> (f64, f64) {
        let u1 = self.u1.iter().rev().fold(0.0, |acc, c| acc * t + c);
        (u1, self.u2)
    }
}

impl<T: Scalar> ControlLaw<T> {
    pub fn to_f64(&self) -> ControlLaw<f64> {
        ControlLaw {
            u1: self.u1.iter().map(Scalar::to_f64).collect(),
            u2: self.u2.to_f64(),
            horizon: self.horizon,
        }
    }
}

/// The reduced problem: `a3, a4, a5 = alpha + beta a2` and
/// `qa a2^2 + qb a2 + qc = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoTrailerQuadratic<T> {
    pub a1: T,
    pub alpha: [T; 3],
    pub beta: [T; 3],
    pub qa: T,
    pub qb: T,
    pub qc: T,
}

type Affine<T> = (T, T);

fn aff_mul<T: Scalar>(x: &Affine<T>, y: &Affine<T>) -> [T; 3] {
    [
        x.0.clone() * y.0.clone(),
        x.0.clone() * y.1.clone() + x.1.clone() * y.0.clone(),
        x.1.clone() * y.1.clone(),
    ]
}

impl<T: Scalar> TwoTrailerQuadratic<T> {
    /// Reduces the endpoint conditions `x(0) = p`, `x(1) = q`.
    pub fn new(p: &[T], q: &[T]) -> Result<Self> {
        check_dim(5, p.len())?;
        check_dim(5, q.len())?;
        let map = two_trailer_endpoint();
        let a1 = q[3].clone() - p[3].clone();
        if a1.is_zero() {
            return Err(Error::AbnormalDirection);
        }
        let unit = |k: usize| {
            let mut e = vec![0u32; 4];
            e[k] = 1;
            e
        };
        let mut m = Vec::new();
        let mut rhs_alpha = Vec::new();
        let mut rhs_beta = Vec::new();
        for r in [0usize, 2, 4] {
            let coll = map.collect_in_u1(r, &a1, p)?;
            debug_assert!(coll.keys().all(|e| e.iter().sum::<u32>() <= 1));
            let get = |e: &Vec<u32>| coll.get(e).cloned().unwrap_or_else(T::zero);
            let constant = get(&vec![0; 4]);
            m.push((1..4).map(|k| get(&unit(k))).collect::<Vec<T>>());
            rhs_alpha.push(q[r].clone() - constant);
            rhs_beta.push(-get(&unit(0)));
        }
        let alpha = solve_linear(m.clone(), rhs_alpha)?;
        let beta = solve_linear(m, rhs_beta)?;
        let vars: [Affine<T>; 4] = [
            (T::zero(), T::one()),
            (alpha[0].clone(), beta[0].clone()),
            (alpha[1].clone(), beta[1].clone()),
            (alpha[2].clone(), beta[2].clone()),
        ];
        let mut quad = [T::zero(), T::zero(), T::zero()];
        for (e, c) in map.collect_in_u1(1, &a1, p)? {
            let idx: Vec<usize> = e
                .iter()
                .enumerate()
                .flat_map(|(k, &n)| std::iter::repeat_n(k, n as usize))
                .collect();
            let poly = match idx.as_slice() {
                [] => [T::one(), T::zero(), T::zero()],
                [i] => [vars[*i].0.clone(), vars[*i].1.clone(), T::zero()],
                [i, j] => aff_mul(&vars[*i], &vars[*j]),
                _ => unreachable!("x2 endpoint is quadratic in the u1 coefficients"),
            };
            for (slot, v) in quad.iter_mut().zip(poly) {
                *slot = slot.clone() + c.clone() * v;
            }
        }
        let [c0, c1, c2] = quad;
        Ok(Self {
            a1,
            alpha: [alpha[0].clone(), alpha[1].clone(), alpha[2].clone()],
            beta: [beta[0].clone(), beta[1].clone(), beta[2].clone()],
            qa: c2,
            qb: c1,
            qc: c0 - q[1].clone(),
        })
    }

    pub fn discriminant(&self) -> T {
        self.qb.clone() * self.qb.clone()
            - T::from_rational(&ratio(4, 1)) * self.qa.clone() * self.qc.clone()
    }

    /// Real roots in `a2`, sorted by increasing magnitude; a double root is
    /// returned once. Exact scalars need a perfect-square discriminant.
    pub fn roots(&self) -> Result<Vec<T>> {
        if self.qa.is_zero() {
            if self.qb.is_zero() {
                return Err(Error::Unreachable("the a2 equation is degenerate".into()));
            }
            return Ok(vec![-self.qc.clone() / self.qb.clone()]);
        }
        let disc = self.discriminant();
        if disc.is_negative() {
            return Err(Error::Unreachable(format!(
                "negative discriminant {:e} in the a2 quadratic",
                disc.to_f64()
            )));
        }
        let two_a = self.qa.clone() + self.qa.clone();
        if disc.is_zero() {
            return Ok(vec![-self.qb.clone() / two_a]);
        }
        let s = disc.try_sqrt().ok_or_else(|| {
            Error::InvalidInput(
                "discriminant is not a perfect square; solve in floating point".into(),
            )
        })?;
        let mut r = vec![
            (-self.qb.clone() - s.clone()) / two_a.clone(),
            (-self.qb.clone() + s) / two_a,
        ];
        r.sort_by(|x, y| {
            x.abs()
                .partial_cmp(&y.abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        Ok(r)
    }

    pub fn controls(&self, a2: &T) -> ControlLaw<T> {
        let mut u1 = vec![a2.clone()];
        for k in 0..3 {
            u1.push(self.alpha[k].clone() + self.beta[k].clone() * a2.clone());
        }
        ControlLaw {
            u1,
            u2: self.a1.clone(),
            horizon: 1.0,
        }
    }
}

/// Controls steering the two-trailer KR system from the origin to `q`,
/// one per real root, smallest `|a2|` first.
pub fn solve_two_trailer<T: Scalar>(q: &[T]) -> Result<Vec<ControlLaw<T>>> {
    let zero = vec![T::zero(); 5];
    let quad = TwoTrailerQuadratic::new(&zero, q)?;
    Ok(quad.roots()?.iter().map(|r| quad.controls(r)).collect())
}

/// Right-hand side `R(q)` of the reachability parabola.
pub fn parabola_rhs<T: Scalar>(q: &[T]) -> Result<T> {
    check_dim(5, q.len())?;
    let (q1, q3, q4, q5) = (q[0].clone(), q[2].clone(), q[3].clone(), q[4].clone());
    if q4.is_zero() {
        return Err(Error::AbnormalDirection);
    }
    let r = |n, d| T::from_rational(&ratio(n, d));
    let lin = -r(3, 14) * q3.clone() + r(1, 252) * q4.clone() * q4.clone() * q5.clone();
    Ok(r(5, 63) * q4.clone() * q1.clone() * q1.clone()
        + lin * q1
        + r(5, 7) * q3.clone() * q3.clone() / q4.clone()
        - r(1, 84) * q3 * q4.clone() * q5.clone()
        + r(1, 4032) * q4.clone() * q4.clone() * q4 * q5.clone() * q5)
}

/// Whether `q` is reachable from the origin with the polynomial controls.
///
/// The `a2` quadratic has leading coefficient `q4^3 / 55440`, so the
/// inequality against the parabola flips when `q4 < 0`.
pub fn reachable<T: Scalar>(q: &[T]) -> Result<bool> {
    let rhs = parabola_rhs(q)?;
    Ok(if q[3].is_positive() {
        q[1] >= rhs
    } else {
        q[1] <= rhs
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootChoice {
    #[default]
    MinAbs,
    MaxAbs,
}

/// A solved two-trailer steering problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteeringPlan {
    pub n: usize,
    pub horizon: f64,
    pub zeta0: Configuration,
    #[serde(rename = "zetaT")]
    pub zeta_t: Configuration,
    /// Index of the domain window shared by both configurations.
    pub window: i64,
    pub x0: Vec<f64>,
    #[serde(rename = "xT")]
    pub x_t: Vec<f64>,
    pub controls: ControlLaw<f64>,
    pub a2_roots: Vec<f64>,
    pub root_choice: RootChoice,
    pub discriminant: f64,
}

/// Plans a two-trailer maneuver from `zeta0` to `zeta_t`.
///
/// Both configurations must lie in the same window of the closed-form
/// domain. The initial KR state need not be the origin: the reduction is
/// done for general initial points.
pub fn plan(
    zeta0: &Configuration,
    zeta_t: &Configuration,
    choice: RootChoice,
) -> Result<SteeringPlan> {
    check_dim(2, zeta0.n())?;
    check_dim(2, zeta_t.n())?;
    let s0 = zeta0.state();
    let st = zeta_t.state();
    let k0 = window_index(&s0)?;
    let kt = window_index(&st)?;
    if k0 != kt {
        return Err(Error::WindowMismatch {
            initial: k0,
            terminal: kt,
        });
    }
    two_trailer_chain(zeta0)?;
    let x0 = two_trailer_map(&s0)?;
    let xt = two_trailer_map(&st)?;
    let quad = TwoTrailerQuadratic::new(&x0, &xt)?;
    let roots = quad.roots()?;
    let a2 = match choice {
        RootChoice::MinAbs => roots[0],
        RootChoice::MaxAbs => *roots.last().expect("at least one root"),
    };
    Ok(SteeringPlan {
        n: 2,
        horizon: 1.0,
        zeta0: zeta0.clone(),
        zeta_t: zeta_t.clone(),
        window: k0,
        x0: x0.to_vec(),
        x_t: xt.to_vec(),
        controls: quad.controls(&a2),
        a2_roots: roots,
        root_choice: choice,
        discriminant: quad.discriminant(),
    })
}
