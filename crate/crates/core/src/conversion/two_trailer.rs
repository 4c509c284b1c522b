//! Closed-form conversion of the two-trailer system near the singular locus
//! `theta2 - theta1 = +-pi/2`, and its domain of validity.
//!
//! With relative angles `t0 = theta0`, `t1 = theta1 - theta0`,
//! `t2 = theta2 - theta1` the last coordinate reads
//! `x5 = a cos t2 / (b cos t2 + c sin t2)` where
//!
//! ```text
//! a = cos^4 t0 cos t1
//! b = 3 tan t0 tan t1 sin t1 - sec^2 t1 sin t1
//! c = sec^2 t1
//! ```
//!
//! `x5` has period `pi` in `t2` and is a diffeomorphism from each window
//! `(gamma + k pi, gamma + (k + 1) pi)` onto the real line.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use super::{build_chain_with_branches, Branch, ConversionChain};
use crate::error::{check_dim, Error, Result};
use crate::field_algebra::POLE_EPS;
use crate::trailer::{angle_diff, Configuration};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TildeAngles {
    pub t0: f64,
    pub t1: f64,
    pub t2: f64,
}

impl TildeAngles {
    pub fn from_state(state: &[f64]) -> Result<Self> {
        check_dim(5, state.len())?;
        Ok(Self {
            t0: state[2],
            t1: angle_diff(state[3], state[2]),
            t2: angle_diff(state[4], state[3]),
        })
    }
}

/// `gamma < delta` consecutive zeros of `b cos t2 + c sin t2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DomainWindow {
    pub gamma: f64,
    pub delta: f64,
}

fn check_chart(t0: f64, t1: f64) -> Result<()> {
    if !(t0.abs() < FRAC_PI_2 && t1.abs() < FRAC_PI_2) {
        return Err(Error::OutsideDomain(format!(
            "relative angles ({t0}, {t1}) must lie in (-pi/2, pi/2)"
        )));
    }
    Ok(())
}

pub fn two_trailer_abc(t0: f64, t1: f64) -> Result<(f64, f64, f64)> {
    check_chart(t0, t1)?;
    let sec1 = 1.0 / t1.cos();
    let a = t0.cos().powi(4) * t1.cos();
    let b = 3.0 * t0.tan() * t1.tan() * t1.sin() - sec1 * sec1 * t1.sin();
    let c = sec1 * sec1;
    Ok((a, b, c))
}

/// The window with `gamma` in `(-pi/2, pi/2)`.
pub fn domain_window(t0: f64, t1: f64) -> Result<DomainWindow> {
    let (_, b, c) = two_trailer_abc(t0, t1)?;
    // c > 0, so this is the principal arctangent of -b/c
    let gamma = (-b).atan2(c);
    Ok(DomainWindow {
        gamma,
        delta: gamma + PI,
    })
}

/// Index `k` of the window `(gamma + k pi, delta + k pi)` containing the
/// state's `t2`. Since `t2` is an angle, windows `k` and `k + 2` coincide and
/// the index is reported in `{0, 1}`. Boundary points (poles of `x5`) are
/// outside every window.
pub fn window_index(state: &[f64]) -> Result<i64> {
    let t = TildeAngles::from_state(state)?;
    let w = domain_window(t.t0, t.t1)?;
    let s = (t.t2 - w.gamma) / PI;
    let k = s.floor();
    let off = (s - k) * PI;
    if off.min(PI - off) < 1e-12 {
        return Err(Error::OutsideDomain(format!(
            "theta2 - theta1 = {} is on a window boundary",
            t.t2
        )));
    }
    Ok((k as i64).rem_euclid(2))
}

/// The closed-form coordinates `x1..x5` of a two-trailer state.
pub fn two_trailer_map(state: &[f64]) -> Result<[f64; 5]> {
    let t = TildeAngles::from_state(state)?;
    check_chart(t.t0, t.t1)?;
    let (th0, d1, d2) = (t.t0, t.t1, t.t2);
    let sec0 = 1.0 / th0.cos();
    let sec1 = 1.0 / d1.cos();
    let num = th0.cos().powi(4) * d1.cos() * d2.cos();
    let den = 3.0 * th0.tan() * d1.tan() * d1.sin() * d2.cos()
        + sec1 * sec1 * (d2.sin() - d1.sin() * d2.cos());
    if den.abs() < POLE_EPS {
        return Err(Error::Pole { component: 4 });
    }
    Ok([
        state[0],
        state[1],
        th0.tan(),
        sec0.powi(3) * d1.tan(),
        num / den,
    ])
}

/// The configuration in window `k` whose closed-form coordinates are `x`.
pub fn two_trailer_inverse(x: &[f64], k: i64) -> Result<Configuration> {
    check_dim(5, x.len())?;
    let t0 = x[2].atan();
    let t1 = (x[3] * t0.cos().powi(3)).atan();
    let (a, b, c) = two_trailer_abc(t0, t1)?;
    let w = domain_window(t0, t1)?;
    // any solution of tan t2 = (a - x5 b) / (x5 c), shifted into the window
    let raw = (a - x[4] * b).atan2(x[4] * c);
    let lo = w.gamma + k as f64 * PI;
    let t2 = lo + (raw - lo).rem_euclid(PI);
    let th1 = t0 + t1;
    Configuration::new(x[0], x[1], vec![t0, th1, th1 + t2])
}

/// The symbolic chain with branches (tan, regular, singular), which is the
/// closed form above on its whole domain; `base` only anchors the
/// degeneracy checks.
pub fn two_trailer_chain(base: &Configuration) -> Result<ConversionChain> {
    check_dim(2, base.n())?;
    build_chain_with_branches(base, &[Branch::Tan, Branch::Regular, Branch::Singular])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn window_at_origin() {
        let w = domain_window(0.0, 0.0).unwrap();
        assert_eq!(w.gamma, 0.0);
        assert_eq!(w.delta, PI);
    }

    #[test]
    fn inverse_round_trip() {
        let s = [0.3, -0.2, 0.1, -0.3, 1.2];
        let x = two_trailer_map(&s).unwrap();
        let k = window_index(&s).unwrap();
        let back = two_trailer_inverse(&x, k).unwrap().state();
        for i in 0..5 {
            assert!((back[i] - s[i]).abs() < 1e-12, "{back:?} vs {s:?}");
        }
    }

    #[test]
    fn figure_windows_agree() {
        let a = [0.0, 0.0, 0.0, 0.0, FRAC_PI_4];
        let b = [0.0, 1.0, 0.0, FRAC_PI_4, 3.0 * FRAC_PI_4];
        let c = [0.0, 0.0, 0.0, -FRAC_PI_4, 0.0];
        assert_eq!(window_index(&a).unwrap(), 0);
        assert_eq!(window_index(&b).unwrap(), 0);
        assert_eq!(window_index(&c).unwrap(), 0);
    }
}
