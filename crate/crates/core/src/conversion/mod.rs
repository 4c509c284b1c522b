//! Conversion of the n-trailer system into Kumpera-Ruiz normal form around
//! an arbitrary configuration, plus the inverse (universality)
//! construction.
//!
//! Stage 0 maps the unicycle onto the Pfaff-Darboux form; each further stage
//! adds one coordinate `x_{i+3}` and updates the feedback functions
//! `(nu_i, eta_i, mu_i)` so that, on the trailer fields,
//!
//! ```text
//! phi_* tau1 = nu  * k1
//! phi_* tau2 = eta * k1 + mu * k2
//! ```

mod two_trailer;

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

pub use two_trailer::{
    domain_window, two_trailer_abc, two_trailer_chain, two_trailer_inverse, two_trailer_map,
    window_index, DomainWindow, TildeAngles,
};

use crate::error::{check_dim, Error, Result};
use crate::field_algebra::{dag_size, Expr, SmoothExprField, Tape, VectorField};
use crate::kr_forms::{build_kr, KrPair, KrTag, KrWord};
use crate::trailer::{
    classify, theta_index, trailer_fields, trailer_rhs, Configuration, DEFAULT_CLASSIFY_TOL,
};

/// `|nu|` or `|mu|` at or below this value at the base point means the
/// stage formulas do not apply there.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Limit on distinct expression nodes across all chain functions.
pub const NODE_CAP: usize = 1_000_000;

/// Absolute central-difference step of the pushforward check.
pub const FD_STEP: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Stage 0 with `x3 = tan(theta0)`.
    Tan,
    /// Stage 0 with `x3 = cot(theta0)`, used when `theta0 = +-pi/2`.
    Cot,
    Regular,
    Singular,
}

/// Feedback values `u1 = nu v1 + eta v2`, `u2 = mu v2` at one state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Feedback {
    pub nu: f64,
    pub eta: f64,
    pub mu: f64,
}

/// Inverse feedback `v1 = nu_hat u1 + eta_hat u2`, `v2 = mu_hat u2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InverseFeedback {
    pub nu_hat: f64,
    pub eta_hat: f64,
    pub mu_hat: f64,
}

impl Feedback {
    pub fn apply(&self, v1: f64, v2: f64) -> (f64, f64) {
        (self.nu * v1 + self.eta * v2, self.mu * v2)
    }

    pub fn inverse(&self) -> Result<InverseFeedback> {
        if self.nu.abs() <= DEGENERACY_TOL || self.mu.abs() <= DEGENERACY_TOL {
            return Err(Error::DegenerateStage {
                stage: usize::MAX,
                which: if self.nu.abs() <= DEGENERACY_TOL {
                    "nu"
                } else {
                    "mu"
                },
                value: if self.nu.abs() <= DEGENERACY_TOL {
                    self.nu
                } else {
                    self.mu
                },
            });
        }
        Ok(InverseFeedback {
            nu_hat: 1.0 / self.nu,
            eta_hat: -self.eta / (self.mu * self.nu),
            mu_hat: 1.0 / self.mu,
        })
    }
}

impl InverseFeedback {
    pub fn apply(&self, u1: f64, u2: f64) -> (f64, f64) {
        (self.nu_hat * u1 + self.eta_hat * u2, self.mu_hat * u2)
    }
}

/// Coordinate and feedback functions taking the `n`-trailer system to a KR
/// normal form near `base_point`.
#[derive(Clone, Debug)]
pub struct ConversionChain {
    pub n: usize,
    pub base_point: Configuration,
    pub branches: Vec<Branch>,
    /// `x1 .. x_{n+3}` as functions of the trailer state.
    pub x_funcs: Vec<Expr>,
    pub mu: Vec<Expr>,
    pub nu: Vec<Expr>,
    pub eta: Vec<Expr>,
    /// Realized normal form; regular stages carry the constant 0 and the
    /// coordinates are not recentred, so `x(p)` may be nonzero.
    pub kr_target: KrWord,
    kr: KrPair,
    x_tape: Tape,
    fb_tape: Tape,
    // L_tau1 x and L_tau2 x, compiled on first use
    lie_tape: OnceLock<Tape>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainReport {
    pub n: usize,
    pub base_point: Configuration,
    pub branches: Vec<Branch>,
    pub kr_word: KrWord,
    pub x_at_base: Vec<f64>,
    pub nu_at_base: Vec<f64>,
    pub eta_at_base: Vec<f64>,
    pub mu_at_base: Vec<f64>,
    pub expression_nodes: usize,
}

/// Branches chosen by the singularity pattern of `p`.
pub fn branches_for(p: &Configuration) -> Vec<Branch> {
    let pat = classify(p, DEFAULT_CLASSIFY_TOL);
    let mut b = vec![if pat.base { Branch::Cot } else { Branch::Tan }];
    b.extend(
        pat.flags
            .iter()
            .map(|&s| if s { Branch::Singular } else { Branch::Regular }),
    );
    b
}

pub fn build_chain(n: usize, p: &Configuration) -> Result<ConversionChain> {
    check_dim(n, p.n())?;
    build_chain_with_branches(p, &branches_for(p))
}

struct Stages {
    x: Vec<Expr>,
    mu: Vec<Expr>,
    nu: Vec<Expr>,
    eta: Vec<Expr>,
}

fn check_branches(n: usize, branches: &[Branch]) -> Result<()> {
    if branches.len() != n + 1 {
        return Err(Error::InvalidInput(format!(
            "expected {} branches for {n} trailers, got {}",
            n + 1,
            branches.len()
        )));
    }
    if !matches!(branches[0], Branch::Tan | Branch::Cot) {
        return Err(Error::InvalidInput(
            "stage 0 must be the tan or cot branch".into(),
        ));
    }
    if branches[1..]
        .iter()
        .any(|b| !matches!(b, Branch::Regular | Branch::Singular))
    {
        return Err(Error::InvalidInput(
            "stages 1.. must be regular or singular".into(),
        ));
    }
    Ok(())
}

fn build_stages(branches: &[Branch]) -> Result<Stages> {
    let n = branches.len() - 1;
    let xi1 = Expr::var(0);
    let xi2 = Expr::var(1);
    let th0 = Expr::var(theta_index(0));
    let (mut x, mu0, nu0) = match branches[0] {
        Branch::Tan => (vec![xi1, xi2, th0.tan()], th0.cos(), th0.sec().pow(2)),
        Branch::Cot => (vec![xi2, xi1, th0.cot()], th0.sin(), -th0.csc().pow(2)),
        _ => unreachable!("validated by check_branches"),
    };
    let mut mu = vec![mu0];
    let mut nu = vec![nu0];
    let mut eta = vec![Expr::zero()];
    for i in 1..=n {
        let d = Expr::var(theta_index(i)) - Expr::var(theta_index(i - 1));
        let (s, c) = (d.sin(), d.cos());
        // pushforward of tau2^i before normalization: p k1 + q k2
        let p = &(&s * &nu[i - 1]) + &(&c * &eta[i - 1]);
        let q = &c * &mu[i - 1];
        let (xi, mui) = match branches[i] {
            Branch::Regular => (&p / &q, q),
            Branch::Singular => (&q / &p, p),
            _ => unreachable!("validated by check_branches"),
        };
        let (_, tau2) = trailer_fields(i);
        nu.push(xi.diff(theta_index(i)));
        eta.push(tau2.lie_derivative(&xi)?);
        mu.push(mui);
        x.push(xi);
        let size = dag_size(&x) + dag_size(&nu) + dag_size(&eta) + dag_size(&mu);
        if size > NODE_CAP {
            return Err(Error::BudgetExceeded {
                what: "conversion expression nodes",
                size,
                limit: NODE_CAP,
            });
        }
    }
    Ok(Stages { x, mu, nu, eta })
}

fn kr_word_for(branches: &[Branch]) -> KrWord {
    KrWord::new(
        branches[1..]
            .iter()
            .map(|b| {
                if *b == Branch::Singular {
                    KrTag::Singular
                } else {
                    KrTag::regular0()
                }
            })
            .collect(),
    )
}

/// Builds the chain with explicitly chosen branches, checking that every
/// `nu_i` and `mu_i` is nonzero at `p` and that `p` is not a pole.
pub fn build_chain_with_branches(
    p: &Configuration,
    branches: &[Branch],
) -> Result<ConversionChain> {
    let n = p.n();
    check_branches(n, branches)?;
    let st = build_stages(branches)?;
    let state = p.state();
    let nu_tape = Tape::compile(&st.nu);
    let mu_tape = Tape::compile(&st.mu);
    for (which, tape) in [("nu", &nu_tape), ("mu", &mu_tape)] {
        let vals = tape.eval(&state)?;
        if let Some(stage) = vals.iter().position(|v| v.abs() <= DEGENERACY_TOL) {
            return Err(Error::DegenerateStage {
                stage,
                which,
                value: vals[stage],
            });
        }
    }
    let x_tape = Tape::compile(&st.x);
    x_tape.eval(&state)?;
    let fb_tape = Tape::compile(&[st.nu[n].clone(), st.eta[n].clone(), st.mu[n].clone()]);
    let kr_target = kr_word_for(branches);
    Ok(ConversionChain {
        n,
        base_point: p.clone(),
        branches: branches.to_vec(),
        x_funcs: st.x,
        mu: st.mu,
        nu: st.nu,
        eta: st.eta,
        kr: build_kr(&kr_target),
        kr_target,
        x_tape,
        fb_tape,
        lie_tape: OnceLock::new(),
    })
}

impl ConversionChain {
    pub fn dim(&self) -> usize {
        self.n + 3
    }

    pub fn kr_pair(&self) -> &KrPair {
        &self.kr
    }

    /// KR coordinates of a trailer state.
    pub fn forward_map(&self, state: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), state.len())?;
        self.x_tape.eval(state)
    }

    /// Same as [`forward_map`](Self::forward_map) with caller-owned buffers.
    pub fn forward_map_into(
        &self,
        state: &[f64],
        scratch: &mut Vec<f64>,
        out: &mut [f64],
    ) -> Result<()> {
        check_dim(self.dim(), state.len())?;
        self.x_tape.eval_into(state, scratch, out)
    }

    /// Last-stage feedback `(nu_n, eta_n, mu_n)` at a state.
    pub fn feedback(&self, state: &[f64]) -> Result<Feedback> {
        check_dim(self.dim(), state.len())?;
        let v = self.fb_tape.eval(state)?;
        Ok(Feedback {
            nu: v[0],
            eta: v[1],
            mu: v[2],
        })
    }

    pub fn inverse_feedback(&self, state: &[f64]) -> Result<InverseFeedback> {
        self.feedback(state)?.inverse().map_err(|e| match e {
            Error::DegenerateStage { which, value, .. } => Error::DegenerateStage {
                stage: self.n,
                which,
                value,
            },
            e => e,
        })
    }

    /// Largest Euclidean mismatch in the two pushforward identities at
    /// `state`, with the Jacobian of the forward map taken by central
    /// differences of step [`FD_STEP`].
    pub fn pushforward_residual(&self, state: &[f64]) -> Result<f64> {
        let d = self.dim();
        let x = self.forward_map(state)?;
        let mut jac = vec![vec![0.0; d]; d];
        let mut probe = state.to_vec();
        for j in 0..d {
            probe[j] = state[j] + FD_STEP;
            let plus = self.forward_map(&probe)?;
            probe[j] = state[j] - FD_STEP;
            let minus = self.forward_map(&probe)?;
            probe[j] = state[j];
            for i in 0..d {
                jac[i][j] = (plus[i] - minus[i]) / (2.0 * FD_STEP);
            }
        }
        let t1 = trailer_rhs(state, 1.0, 0.0)?;
        let t2 = trailer_rhs(state, 0.0, 1.0)?;
        let apply = |t: &[f64]| -> Vec<f64> {
            jac.iter()
                .map(|row| row.iter().zip(t).map(|(a, b)| a * b).sum())
                .collect()
        };
        self.identity_mismatch(state, &x, &apply(&t1), &apply(&t2))
    }

    /// Same identities with the pushforward taken symbolically (Lie
    /// derivatives of the coordinate functions), so the only error left is
    /// rounding. The derivative expressions are built on the first call.
    pub fn pushforward_residual_exact(&self, state: &[f64]) -> Result<f64> {
        let x = self.forward_map(state)?;
        let tape = self.lie_tape.get_or_init(|| {
            let (t1, t2) = trailer_fields(self.n);
            let mut outs = Vec::with_capacity(2 * self.dim());
            for f in [&t1, &t2] {
                for xi in &self.x_funcs {
                    outs.push(
                        f.lie_derivative(xi)
                            .expect("coordinate functions match the field dimension"),
                    );
                }
            }
            Tape::compile(&outs)
        });
        let v = tape.eval(state)?;
        let (j1, j2) = v.split_at(self.dim());
        self.identity_mismatch(state, &x, j1, j2)
    }

    fn identity_mismatch(&self, state: &[f64], x: &[f64], j1: &[f64], j2: &[f64]) -> Result<f64> {
        let fb = self.feedback(state)?;
        let k1 = self.kr.k1.eval(x)?;
        let k2 = self.kr.k2.eval(x)?;
        let mut r1 = 0.0f64;
        let mut r2 = 0.0f64;
        for i in 0..self.dim() {
            r1 += (j1[i] - fb.nu * k1[i]).powi(2);
            r2 += (j2[i] - fb.eta * k1[i] - fb.mu * k2[i]).powi(2);
        }
        Ok(r1.sqrt().max(r2.sqrt()))
    }

    /// The trailer fields this chain converts, as symbolic fields.
    pub fn trailer_fields(&self) -> (SmoothExprField, SmoothExprField) {
        trailer_fields(self.n)
    }

    pub fn report(&self) -> Result<ChainReport> {
        let s = self.base_point.state();
        Ok(ChainReport {
            n: self.n,
            base_point: self.base_point.clone(),
            branches: self.branches.clone(),
            kr_word: self.kr_target.clone(),
            x_at_base: self.forward_map(&s)?,
            nu_at_base: Tape::compile(&self.nu).eval(&s)?,
            eta_at_base: Tape::compile(&self.eta).eval(&s)?,
            mu_at_base: Tape::compile(&self.mu).eval(&s)?,
            expression_nodes: dag_size(&self.x_funcs)
                + dag_size(&self.nu)
                + dag_size(&self.eta)
                + dag_size(&self.mu),
        })
    }
}

/// A configuration at which the trailer system realizes `word` with KR
/// coordinates equal to `y`.
///
/// Singular slots of `y` must be exactly zero; the corresponding angle is
/// set a quarter turn from the previous one. Regular angles use the
/// principal arctangent. Stage 0 always uses the tan chart, which puts the
/// last trailer's axle at `(y1, y2)`.
pub fn universal_point(word: &KrWord, y: &[f64]) -> Result<Configuration> {
    let n = word.len();
    check_dim(n + 3, y.len())?;
    for (i, t) in word.steps.iter().enumerate() {
        if t.is_singular() && y[i + 3] != 0.0 {
            return Err(Error::NonzeroSingularCoordinate {
                index: i + 4,
                value: y[i + 3],
            });
        }
    }
    let mut branches = vec![Branch::Tan];
    branches.extend(word.steps.iter().map(|t| {
        if t.is_singular() {
            Branch::Singular
        } else {
            Branch::Regular
        }
    }));
    let st = build_stages(&branches)?;
    let mut state = vec![0.0; n + 3];
    state[0] = y[0];
    state[1] = y[1];
    state[2] = y[2].atan();
    for i in 1..=n {
        let prev = state[theta_index(i - 1)];
        let th = if branches[i] == Branch::Singular {
            prev + std::f64::consts::FRAC_PI_2
        } else {
            let fb = Tape::compile(&[
                st.nu[i - 1].clone(),
                st.eta[i - 1].clone(),
                st.mu[i - 1].clone(),
            ])
            .eval(&state)?;
            let (nu, eta, mu) = (fb[0], fb[1], fb[2]);
            if nu.abs() <= DEGENERACY_TOL {
                return Err(Error::DegenerateStage {
                    stage: i - 1,
                    which: "nu",
                    value: nu,
                });
            }
            ((mu * y[i + 2] - eta) / nu).atan() + prev
        };
        state[theta_index(i)] = th;
    }
    Configuration::from_state(&state)
}
