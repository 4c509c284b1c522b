//! Vector-field algebra over two representations: exact polynomial fields
//! (where Kumpera-Ruiz forms and their Lie algebras live) and closed-form
//! trigonometric fields (the trailer kinematics and conversion functions).

mod expr;
mod polynomial;

use std::fmt;

pub use expr::{dag_size, Expr, Node, Tape, POLE_EPS};
pub use polynomial::{Exponents, Polynomial};

use crate::error::{check_dim, Error, Result};
use crate::scalar::{format_rational, Rational};

/// Operations shared by both field representations.
pub trait VectorField: Clone + Sized {
    /// Scalar functions the field acts on by Lie derivative.
    type Function;

    fn dim(&self) -> usize;

    /// Jacobi-Lie bracket `[f, g] = (Dg) f - (Df) g`.
    fn bracket(&self, other: &Self) -> Result<Self>;

    /// Appends a zero component; existing components ignore the new variable.
    fn lift(&self) -> Self;

    fn lie_derivative(&self, h: &Self::Function) -> Result<Self::Function>;

    fn eval(&self, point: &[f64]) -> Result<Vec<f64>>;
}

pub fn lie_bracket<F: VectorField>(f: &F, g: &F) -> Result<F> {
    f.bracket(g)
}

pub fn lift<F: VectorField>(f: &F) -> F {
    f.lift()
}

pub fn lie_derivative<F: VectorField>(f: &F, h: &F::Function) -> Result<F::Function> {
    f.lie_derivative(h)
}

pub fn eval_field<F: VectorField>(f: &F, point: &[f64]) -> Result<Vec<f64>> {
    f.eval(point)
}

/// Polynomial vector field on `R^dim`, one polynomial component per
/// coordinate, each in `dim` variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PolyVectorField {
    components: Vec<Polynomial>,
}

impl PolyVectorField {
    pub fn new(components: Vec<Polynomial>) -> Result<Self> {
        let dim = components.len();
        if dim == 0 {
            return Err(Error::InvalidInput(
                "vector field needs at least one component".into(),
            ));
        }
        for c in &components {
            check_dim(dim, c.nvars())?;
        }
        Ok(Self { components })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            components: vec![Polynomial::zero(dim); dim],
        }
    }

    /// The coordinate field `d/dx_{i+1}`.
    pub fn unit(dim: usize, i: usize) -> Self {
        let mut f = Self::zero(dim);
        f.components[i] = Polynomial::one(dim);
        f
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &Polynomial {
        &self.components[i]
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Polynomial::is_zero)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// Multiplies every component by the function `h`.
    pub fn mul_fn(&self, h: &Polynomial) -> Result<Self> {
        check_dim(self.dim(), h.nvars())?;
        Ok(Self {
            components: self.components.iter().map(|c| c * h).collect(),
        })
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self {
            components: self.components.iter().map(|p| p.scale(c)).collect(),
        }
    }
}

impl VectorField for PolyVectorField {
    type Function = Polynomial;

    fn dim(&self) -> usize {
        self.components.len()
    }

    fn bracket(&self, other: &Self) -> Result<Self> {
        let n = self.dim();
        check_dim(n, other.dim())?;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = Polynomial::zero(n);
            for j in 0..n {
                let fj = &self.components[j];
                if !fj.is_zero() && other.components[i].depends_on(j) {
                    acc = &acc + &(fj * &other.components[i].partial(j));
                }
                let gj = &other.components[j];
                if !gj.is_zero() && self.components[i].depends_on(j) {
                    acc = &acc - &(gj * &self.components[i].partial(j));
                }
            }
            out.push(acc);
        }
        Ok(Self { components: out })
    }

    fn lift(&self) -> Self {
        let n = self.dim() + 1;
        let mut components: Vec<Polynomial> = self.components.iter().map(|c| c.extend(n)).collect();
        components.push(Polynomial::zero(n));
        Self { components }
    }

    fn lie_derivative(&self, h: &Polynomial) -> Result<Polynomial> {
        let n = self.dim();
        check_dim(n, h.nvars())?;
        let mut acc = Polynomial::zero(n);
        for (j, fj) in self.components.iter().enumerate() {
            if !fj.is_zero() && h.depends_on(j) {
                acc = &acc + &(fj * &h.partial(j));
            }
        }
        Ok(acc)
    }

    fn eval(&self, point: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), point.len())?;
        let v: Vec<f64> = self.components.iter().map(|c| c.eval_f64(point)).collect();
        match v.iter().position(|x| !x.is_finite()) {
            Some(component) => Err(Error::Pole { component }),
            None => Ok(v),
        }
    }
}

impl fmt::Display for PolyVectorField {
    /// `x4*d/dx3 + x3*d/dx2 + d/dx1`, highest coordinate first.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.components.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match c.as_constant() {
                Some(k) if k == Rational::from_integer(1.into()) => write!(f, "d/dx{}", i + 1)?,
                Some(k) => write!(f, "{}*d/dx{}", format_rational(&k), i + 1)?,
                None if c.num_terms() == 1 => write!(f, "{}*d/dx{}", c, i + 1)?,
                None => write!(f, "({})*d/dx{}", c, i + 1)?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Vector field with closed-form expression components.
#[derive(Clone, Debug)]
pub struct SmoothExprField {
    components: Vec<Expr>,
}

impl SmoothExprField {
    pub fn new(components: Vec<Expr>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidInput(
                "vector field needs at least one component".into(),
            ));
        }
        let dim = components.len();
        for c in &components {
            if let Some(v) = c.max_var() {
                if v >= dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: v + 1,
                    });
                }
            }
        }
        Ok(Self { components })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            components: vec![Expr::zero(); dim],
        }
    }

    pub fn unit(dim: usize, i: usize) -> Self {
        let mut f = Self::zero(dim);
        f.components[i] = Expr::one();
        f
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &Expr {
        &self.components[i]
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn mul_fn(&self, h: &Expr) -> Self {
        Self {
            components: self.components.iter().map(|c| h * c).collect(),
        }
    }

    pub fn compile(&self) -> Tape {
        Tape::compile(&self.components)
    }

    /// Distinct expression nodes across all components.
    pub fn node_count(&self) -> usize {
        dag_size(&self.components)
    }
}

impl VectorField for SmoothExprField {
    type Function = Expr;

    fn dim(&self) -> usize {
        self.components.len()
    }

    fn bracket(&self, other: &Self) -> Result<Self> {
        let n = self.dim();
        check_dim(n, other.dim())?;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = Expr::zero();
            for j in 0..n {
                let fj = &self.components[j];
                if !fj.is_zero() {
                    acc = acc + fj * &other.components[i].diff(j);
                }
                let gj = &other.components[j];
                if !gj.is_zero() {
                    acc = acc - gj * &self.components[i].diff(j);
                }
            }
            out.push(acc);
        }
        Ok(Self { components: out })
    }

    fn lift(&self) -> Self {
        let mut components = self.components.clone();
        components.push(Expr::zero());
        Self { components }
    }

    fn lie_derivative(&self, h: &Expr) -> Result<Expr> {
        let n = self.dim();
        if let Some(v) = h.max_var() {
            if v >= n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: v + 1,
                });
            }
        }
        let mut acc = Expr::zero();
        for (j, fj) in self.components.iter().enumerate() {
            if !fj.is_zero() {
                acc = acc + fj * &h.diff(j);
            }
        }
        Ok(acc)
    }

    fn eval(&self, point: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), point.len())?;
        self.compile().eval(point)
    }
}
