//! Closed-loop simulation of planned maneuvers with fixed-step RK4.

mod export;
mod scenario;

use serde::Serialize;

pub use export::{angle_svg, path_svg, trajectory_csv};
pub use scenario::{
    bundled_scenario, run_scenario, ScenarioOutcome, ScenarioSpec, BUNDLED_SCENARIOS,
};

use crate::conversion::{two_trailer_chain, window_index, ConversionChain};
use crate::error::{check_dim, Error, Result};
use crate::field_algebra::VectorField;
use crate::kr_forms::KrPair;
use crate::planner::SteeringPlan;
use crate::trailer::{angle_diff, normalize_angle, trailer_rhs, Configuration};

pub const DEFAULT_STEPS: usize = 10_000;

/// Terminal error (max-norm, angles mod 2 pi) accepted by [`verify_plan`].
pub const ENDPOINT_TOL: f64 = 1e-6;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Trailer states `(xi1, xi2, theta0, ..., thetaN)`.
    pub states: Vec<Vec<f64>>,
    /// `(v1, v2)` applied at each sample time.
    pub v: Vec<(f64, f64)>,
    /// `(u1, u2)` at each sample time, when the trajectory comes from a plan.
    pub u: Vec<(f64, f64)>,
}

impl Trajectory {
    pub fn terminal(&self) -> &[f64] {
        self.states
            .last()
            .expect("trajectory has at least one sample")
    }
}

fn rk4_step<F>(f: &mut F, t: f64, y: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    let axpy = |a: &[f64], k: &[f64], s: f64| -> Vec<f64> {
        a.iter().zip(k).map(|(a, k)| a + s * k).collect()
    };
    let k1 = f(t, y)?;
    let k2 = f(t + h / 2.0, &axpy(y, &k1, h / 2.0))?;
    let k3 = f(t + h / 2.0, &axpy(y, &k2, h / 2.0))?;
    let k4 = f(t + h, &axpy(y, &k3, h))?;
    Ok((0..y.len())
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Integrates the trailer kinematics under state feedback
/// `(v1, v2) = controls(t, state)` on `[0, horizon]`.
pub fn integrate<F>(
    zeta0: &Configuration,
    mut controls: F,
    horizon: f64,
    steps: usize,
) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64]) -> Result<(f64, f64)>,
{
    if steps == 0 || !(horizon > 0.0) {
        return Err(Error::InvalidInput(
            "integration needs steps >= 1 and a positive horizon".into(),
        ));
    }
    let h = horizon / steps as f64;
    let mut y = zeta0.state();
    let mut traj = Trajectory::default();
    let mut rhs = |t: f64, s: &[f64]| -> Result<Vec<f64>> {
        let (v1, v2) = controls(t, s)?;
        trailer_rhs(s, v1, v2)
    };
    for k in 0..=steps {
        let t = k as f64 * h;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { t });
        }
        traj.times.push(t);
        traj.states.push(y.clone());
        if k == steps {
            break;
        }
        y = rk4_step(&mut rhs, t, &y, h)?;
        for a in &mut y[2..] {
            *a = normalize_angle(*a);
        }
    }
    for (t, s) in traj.times.clone().iter().zip(&traj.states) {
        traj.v.push(controls(*t, s)?);
    }
    Ok(traj)
}

/// Integrates a KR system `x' = u1 k1 + u2 k2` with open-loop controls.
pub fn integrate_kr<F>(
    pair: &KrPair,
    x0: &[f64],
    u: F,
    horizon: f64,
    steps: usize,
) -> Result<Vec<Vec<f64>>>
where
    F: Fn(f64) -> (f64, f64),
{
    check_dim(pair.dim(), x0.len())?;
    if steps == 0 || !(horizon > 0.0) {
        return Err(Error::InvalidInput(
            "integration needs steps >= 1 and a positive horizon".into(),
        ));
    }
    let h = horizon / steps as f64;
    let mut f = |t: f64, x: &[f64]| -> Result<Vec<f64>> {
        let (u1, u2) = u(t);
        let a = pair.k1.eval(x)?;
        let b = pair.k2.eval(x)?;
        Ok(a.iter().zip(&b).map(|(a, b)| u1 * a + u2 * b).collect())
    };
    let mut out = vec![x0.to_vec()];
    let mut x = x0.to_vec();
    for k in 0..steps {
        x = rk4_step(&mut f, k as f64 * h, &x, h)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                t: (k + 1) as f64 * h,
            });
        }
        out.push(x.clone());
    }
    Ok(out)
}

/// Max-norm distance between trailer states, angles compared mod 2 pi.
pub fn state_error(a: &[f64], b: &[f64]) -> f64 {
    let pos = (a[0] - b[0]).abs().max((a[1] - b[1]).abs());
    a[2..]
        .iter()
        .zip(&b[2..])
        .map(|(x, y)| angle_diff(*x, *y).abs())
        .fold(pos, f64::max)
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub steps: usize,
    pub terminal: Configuration,
    /// Terminal trailer-state error against the plan's target.
    pub trailer_error: f64,
    /// Terminal KR-coordinate error against the plan's `xT`.
    pub kr_error: f64,
    /// Largest mismatch between the mapped trailer trajectory and an
    /// independent integration of the KR system.
    pub kr_track_error: f64,
    pub stayed_in_domain: bool,
    pub first_violation: Option<f64>,
    pub passed: bool,
}

/// Simulates the trailer system under the plan's controls, mapped through
/// the inverse feedback along the actual state.
pub fn verify_plan(plan: &SteeringPlan, steps: usize) -> Result<(VerifyReport, Trajectory)> {
    let chain = two_trailer_chain(&plan.zeta0)?;
    let law = plan.controls.clone();
    let horizon = plan.horizon;
    let feedback = |chain: &ConversionChain, t: f64, s: &[f64]| -> Result<(f64, f64)> {
        let (u1, u2) = law.at(t);
        let inv = chain
            .inverse_feedback(s)
            .map_err(|e| Error::OutsideDomain(format!("feedback undefined at t = {t}: {e}")))?;
        Ok(inv.apply(u1, u2))
    };
    let mut traj = integrate(&plan.zeta0, |t, s| feedback(&chain, t, s), horizon, steps)?;
    traj.u = traj.times.iter().map(|&t| law.at(t)).collect();

    let mut first_violation = None;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        if window_index(s).ok() != Some(plan.window) {
            first_violation = Some(*t);
            break;
        }
    }

    let kr = integrate_kr(chain.kr_pair(), &plan.x0, |t| law.at(t), horizon, steps)?;
    let mut kr_track_error = 0.0f64;
    for (s, x) in traj.states.iter().zip(&kr) {
        let m = chain.forward_map(s)?;
        for (a, b) in m.iter().zip(x) {
            kr_track_error = kr_track_error.max((a - b).abs());
        }
    }

    let end = traj.terminal().to_vec();
    let trailer_error = state_error(&end, &plan.zeta_t.state());
    let x_end = chain.forward_map(&end)?;
    let kr_error = x_end
        .iter()
        .zip(&plan.x_t)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let stayed = first_violation.is_none();
    let report = VerifyReport {
        steps,
        terminal: Configuration::from_state(&end)?,
        trailer_error,
        kr_error,
        kr_track_error,
        stayed_in_domain: stayed,
        first_violation,
        passed: stayed && trailer_error < ENDPOINT_TOL,
    };
    Ok((report, traj))
}
