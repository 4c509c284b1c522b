//! Kinematics of a unicycle towing `n` trailers with unit hitch lengths.
//!
//! State order is `(xi1, xi2, theta0, ..., thetaN)`: `(xi1, xi2)` is the
//! axle midpoint of the last trailer, `theta0` its heading, and `thetaN` the
//! heading of the towing car. The car's steering input is `v1 = thetaN'`,
//! its speed `v2`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field_algebra::{Expr, SmoothExprField, VectorField};

/// Default tolerance (radians) for deciding that an angle sits on the
/// singular locus.
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-9;

/// Maps an angle to `(-pi, pi]`. Angles already in range are returned
/// unchanged, so normalizing twice is the identity.
pub fn normalize_angle(x: f64) -> f64 {
    if x > -PI && x <= PI {
        return x;
    }
    let r = x.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Difference `a - b` reduced to `(-pi, pi]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    normalize_angle(a - b)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub xi1: f64,
    pub xi2: f64,
    pub thetas: Vec<f64>,
}

impl Configuration {
    /// Builds a configuration with normalized angles. `thetas` must hold
    /// `theta0 .. thetaN` (at least one angle).
    pub fn new(xi1: f64, xi2: f64, thetas: Vec<f64>) -> Result<Self> {
        if thetas.is_empty() {
            return Err(Error::InvalidInput(
                "a configuration needs at least theta0".into(),
            ));
        }
        let all = std::iter::once(&xi1)
            .chain(std::iter::once(&xi2))
            .chain(&thetas);
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "configuration entries must be finite".into(),
            ));
        }
        Ok(Self {
            xi1,
            xi2,
            thetas: thetas.into_iter().map(normalize_angle).collect(),
        })
    }

    /// From a state vector `(xi1, xi2, theta0, ..., thetaN)`.
    pub fn from_state(state: &[f64]) -> Result<Self> {
        if state.len() < 3 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                got: state.len(),
            });
        }
        Self::new(state[0], state[1], state[2..].to_vec())
    }

    /// Re-applies angle normalization (useful after deserializing).
    pub fn normalized(&self) -> Result<Self> {
        Self::new(self.xi1, self.xi2, self.thetas.clone())
    }

    /// Number of trailers.
    pub fn n(&self) -> usize {
        self.thetas.len() - 1
    }

    pub fn state(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.thetas.len() + 2);
        v.push(self.xi1);
        v.push(self.xi2);
        v.extend_from_slice(&self.thetas);
        v
    }
}

/// Which stages of a configuration sit on the singular locus.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SingularityPattern {
    /// `theta0 = +-pi/2`: the tan chart fails and the cot chart is used.
    pub base: bool,
    /// `flags[i-1]` is set when `theta_i - theta_{i-1} = +-pi/2`.
    pub flags: Vec<bool>,
}

fn near_half_pi(angle: f64, tol: f64) -> bool {
    let r = (angle - FRAC_PI_2).rem_euclid(PI);
    r.min(PI - r) <= tol
}

pub fn classify(p: &Configuration, tol: f64) -> SingularityPattern {
    SingularityPattern {
        base: near_half_pi(p.thetas[0], tol),
        flags: p
            .thetas
            .windows(2)
            .map(|w| near_half_pi(w[1] - w[0], tol))
            .collect(),
    }
}

/// Index of `theta_i` in the state vector.
pub fn theta_index(i: usize) -> usize {
    i + 2
}

/// `(tau1, tau2)` on `R^{n+3}` built inductively from the unicycle.
pub fn trailer_fields(n: usize) -> (SmoothExprField, SmoothExprField) {
    let th0 = Expr::var(theta_index(0));
    let mut tau1 = SmoothExprField::unit(3, 2);
    let mut tau2 =
        SmoothExprField::new(vec![th0.cos(), th0.sin(), Expr::zero()]).expect("unicycle field");
    for i in 1..=n {
        let d = Expr::var(theta_index(i)) - Expr::var(theta_index(i - 1));
        let lifted1 = tau1.lift().mul_fn(&d.sin());
        let lifted2 = tau2.lift().mul_fn(&d.cos());
        tau2 = lifted1.add(&lifted2).expect("same dimension");
        tau1 = SmoothExprField::unit(i + 3, theta_index(i));
    }
    (tau1, tau2)
}

/// `tau1(state) v1 + tau2(state) v2`, evaluated directly.
///
/// Speeds propagate from the car backwards: trailer `i-1` moves with
/// `cos(theta_i - theta_{i-1})` times the speed of trailer `i`.
pub fn trailer_rhs(state: &[f64], v1: f64, v2: f64) -> Result<Vec<f64>> {
    if state.len() < 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: state.len(),
        });
    }
    let n = state.len() - 3;
    let mut out = vec![0.0; state.len()];
    out[theta_index(n)] = v1;
    let mut w = v2;
    for i in (1..=n).rev() {
        let d = state[theta_index(i)] - state[theta_index(i - 1)];
        out[theta_index(i - 1)] = d.sin() * w;
        w *= d.cos();
    }
    let th0 = state[2];
    out[0] = th0.cos() * w;
    out[1] = th0.sin() * w;
    Ok(out)
}
