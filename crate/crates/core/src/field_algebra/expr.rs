//! Closed-form expressions over trigonometric functions.
//!
//! An [`Expr`] is an immutable, reference-counted DAG: cloning is cheap and
//! subexpressions are shared, so the derivatives taken by the conversion
//! recursion grow linearly instead of exponentially. Only local rewrite rules
//! are applied at construction (`0+e`, `1*e`, `0*e`, `e^1`, `e/1`, folding of
//! two constants); there is no canonical simplification.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::scalar::{format_rational, rational_to_f64, Rational};

/// Absolute threshold below which a denominator (explicit or inside
/// tan/sec/cot/csc or a negative power) is treated as a pole.
pub const POLE_EPS: f64 = 1e-12;

#[derive(Debug)]
pub enum Node {
    Const(Rational),
    Var(usize),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Pow(Expr, i32),
    Sin(Expr),
    Cos(Expr),
    Tan(Expr),
    Sec(Expr),
    Csc(Expr),
    Cot(Expr),
    Atan(Expr),
}

#[derive(Clone, Debug)]
pub struct Expr(Arc<Node>);

impl Expr {
    fn wrap(node: Node) -> Self {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    fn key(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn constant(c: Rational) -> Self {
        Self::wrap(Node::Const(c))
    }

    pub fn int(v: i64) -> Self {
        Self::constant(Rational::from_integer(v.into()))
    }

    pub fn zero() -> Self {
        Self::int(0)
    }

    pub fn one() -> Self {
        Self::int(1)
    }

    pub fn var(index: usize) -> Self {
        Self::wrap(Node::Var(index))
    }

    pub fn as_const(&self) -> Option<&Rational> {
        match self.node() {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const().is_some_and(|c| c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.as_const().is_some_and(|c| c.is_one())
    }

    pub fn pow(&self, k: i32) -> Self {
        if k == 0 {
            return Self::one();
        }
        if k == 1 {
            return self.clone();
        }
        if let Some(c) = self.as_const() {
            if !(k < 0 && c.is_zero()) {
                return Self::constant(num_traits::pow::Pow::pow(c, k));
            }
        }
        Self::wrap(Node::Pow(self.clone(), k))
    }

    pub fn sin(&self) -> Self {
        Self::wrap(Node::Sin(self.clone()))
    }
    pub fn cos(&self) -> Self {
        Self::wrap(Node::Cos(self.clone()))
    }
    pub fn tan(&self) -> Self {
        Self::wrap(Node::Tan(self.clone()))
    }
    pub fn sec(&self) -> Self {
        Self::wrap(Node::Sec(self.clone()))
    }
    pub fn csc(&self) -> Self {
        Self::wrap(Node::Csc(self.clone()))
    }
    pub fn cot(&self) -> Self {
        Self::wrap(Node::Cot(self.clone()))
    }
    pub fn atan(&self) -> Self {
        Self::wrap(Node::Atan(self.clone()))
    }

    pub fn recip(&self) -> Self {
        Self::one() / self.clone()
    }

    /// Number of distinct nodes in the DAG.
    pub fn node_count(&self) -> usize {
        count_nodes(std::slice::from_ref(self))
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        let mut seen = HashSet::new();
        let mut stack = vec![self.clone()];
        let mut best: Option<usize> = None;
        while let Some(e) = stack.pop() {
            if !seen.insert(e.key()) {
                continue;
            }
            if let Node::Var(i) = e.node() {
                best = Some(best.map_or(*i, |b| b.max(*i)));
            }
            stack.extend(e.children().into_iter().cloned());
        }
        best
    }

    fn children(&self) -> Vec<&Expr> {
        match self.node() {
            Node::Const(_) | Node::Var(_) => vec![],
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => vec![a, b],
            Node::Pow(a, _)
            | Node::Sin(a)
            | Node::Cos(a)
            | Node::Tan(a)
            | Node::Sec(a)
            | Node::Csc(a)
            | Node::Cot(a)
            | Node::Atan(a) => vec![a],
        }
    }

    /// Partial derivative with respect to variable `var`.
    pub fn diff(&self, var: usize) -> Expr {
        let mut memo = HashMap::new();
        self.diff_memo(var, &mut memo)
    }

    fn diff_memo(&self, var: usize, memo: &mut HashMap<usize, Expr>) -> Expr {
        if let Some(d) = memo.get(&self.key()) {
            return d.clone();
        }
        let d = match self.node() {
            Node::Const(_) => Expr::zero(),
            Node::Var(i) => {
                if *i == var {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Add(a, b) => a.diff_memo(var, memo) + b.diff_memo(var, memo),
            Node::Sub(a, b) => a.diff_memo(var, memo) - b.diff_memo(var, memo),
            Node::Mul(a, b) => {
                let da = a.diff_memo(var, memo);
                let db = b.diff_memo(var, memo);
                da * b.clone() + a.clone() * db
            }
            Node::Div(a, b) => {
                let da = a.diff_memo(var, memo);
                let db = b.diff_memo(var, memo);
                if db.is_zero() {
                    da / b.clone()
                } else {
                    (da * b.clone() - a.clone() * db) / b.pow(2)
                }
            }
            Node::Pow(a, k) => {
                let da = a.diff_memo(var, memo);
                Expr::int(*k as i64) * a.pow(k - 1) * da
            }
            Node::Sin(a) => a.cos() * a.diff_memo(var, memo),
            Node::Cos(a) => -(a.sin() * a.diff_memo(var, memo)),
            Node::Tan(a) => a.sec().pow(2) * a.diff_memo(var, memo),
            Node::Sec(a) => a.sec() * a.tan() * a.diff_memo(var, memo),
            Node::Csc(a) => -(a.csc() * a.cot() * a.diff_memo(var, memo)),
            Node::Cot(a) => -(a.csc().pow(2) * a.diff_memo(var, memo)),
            Node::Atan(a) => a.diff_memo(var, memo) / (Expr::one() + a.pow(2)),
        };
        memo.insert(self.key(), d.clone());
        d
    }

    /// One-shot evaluation. Prefer [`Tape`] for repeated evaluation.
    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        Tape::compile(std::slice::from_ref(self))
            .eval(point)
            .map(|v| v[0])
    }

    /// Renders the expression with the given variable names (falls back to
    /// `x{i+1}` for indices without a name). The output expands shared
    /// subexpressions, so it can be much larger than [`Expr::node_count`].
    pub fn display_with<'a>(&'a self, names: &'a [&'a str]) -> impl fmt::Display + 'a {
        Named { expr: self, names }
    }
}

fn count_nodes(roots: &[Expr]) -> usize {
    let mut seen = HashSet::new();
    let mut stack: Vec<Expr> = roots.to_vec();
    while let Some(e) = stack.pop() {
        if seen.insert(e.key()) {
            stack.extend(e.children().into_iter().cloned());
        }
    }
    seen.len()
}

/// Distinct node count across several expressions (shared nodes counted once).
pub fn dag_size(roots: &[Expr]) -> usize {
    count_nodes(roots)
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        if let (Some(a), Some(b)) = (self.as_const(), rhs.as_const()) {
            return Expr::constant(a + b);
        }
        Expr::wrap(Node::Add(self, rhs))
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        if rhs.is_zero() {
            return self;
        }
        if let (Some(a), Some(b)) = (self.as_const(), rhs.as_const()) {
            return Expr::constant(a - b);
        }
        if self.is_zero() {
            return -rhs;
        }
        Expr::wrap(Node::Sub(self, rhs))
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        if self.is_zero() || rhs.is_zero() {
            return Expr::zero();
        }
        if self.is_one() {
            return rhs;
        }
        if rhs.is_one() {
            return self;
        }
        if let (Some(a), Some(b)) = (self.as_const(), rhs.as_const()) {
            return Expr::constant(a * b);
        }
        Expr::wrap(Node::Mul(self, rhs))
    }
}

impl Div for Expr {
    type Output = Expr;
    /// # Panics
    /// If the denominator is the literal constant zero.
    fn div(self, rhs: Expr) -> Expr {
        assert!(!rhs.is_zero(), "division by the literal zero constant");
        if self.is_zero() {
            return Expr::zero();
        }
        if rhs.is_one() {
            return self;
        }
        if let (Some(a), Some(b)) = (self.as_const(), rhs.as_const()) {
            return Expr::constant(a / b);
        }
        Expr::wrap(Node::Div(self, rhs))
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        if let Some(c) = self.as_const() {
            return Expr::constant(-c);
        }
        Expr::int(-1) * self
    }
}

macro_rules! forward_ref_binop {
    ($tr:ident, $m:ident) => {
        impl $tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                self.clone().$m(rhs.clone())
            }
        }
    };
}
forward_ref_binop!(Add, add);
forward_ref_binop!(Sub, sub);
forward_ref_binop!(Mul, mul);
forward_ref_binop!(Div, div);

struct Named<'a> {
    expr: &'a Expr,
    names: &'a [&'a str],
}

impl Named<'_> {
    fn write(&self, e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let func = |f: &mut fmt::Formatter<'_>, name: &str, a: &Expr| -> fmt::Result {
            write!(f, "{name}(")?;
            self.write(a, f)?;
            write!(f, ")")
        };
        let bin = |f: &mut fmt::Formatter<'_>, op: &str, a: &Expr, b: &Expr| -> fmt::Result {
            write!(f, "(")?;
            self.write(a, f)?;
            write!(f, " {op} ")?;
            self.write(b, f)?;
            write!(f, ")")
        };
        match e.node() {
            Node::Const(c) => {
                if c.is_negative() {
                    write!(f, "({})", format_rational(c))
                } else {
                    write!(f, "{}", format_rational(c))
                }
            }
            Node::Var(i) => match self.names.get(*i) {
                Some(n) => write!(f, "{n}"),
                None => write!(f, "x{}", i + 1),
            },
            Node::Add(a, b) => bin(f, "+", a, b),
            Node::Sub(a, b) => bin(f, "-", a, b),
            Node::Mul(a, b) => bin(f, "*", a, b),
            Node::Div(a, b) => bin(f, "/", a, b),
            Node::Pow(a, k) => {
                self.write(a, f)?;
                if *k < 0 {
                    write!(f, "^({k})")
                } else {
                    write!(f, "^{k}")
                }
            }
            Node::Sin(a) => func(f, "sin", a),
            Node::Cos(a) => func(f, "cos", a),
            Node::Tan(a) => func(f, "tan", a),
            Node::Sec(a) => func(f, "sec", a),
            Node::Csc(a) => func(f, "csc", a),
            Node::Cot(a) => func(f, "cot", a),
            Node::Atan(a) => func(f, "atan", a),
        }
    }
}

impl fmt::Display for Named<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(self.expr, f)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display_with(&[]))
    }
}

#[derive(Clone, Copy, Debug)]
enum Op {
    Const(f64),
    Var(u32),
    Add(u32, u32),
    Sub(u32, u32),
    Mul(u32, u32),
    Div(u32, u32),
    Pow(u32, i32),
    Sin(u32),
    Cos(u32),
    Tan(u32),
    Sec(u32),
    Csc(u32),
    Cot(u32),
    Atan(u32),
}

/// Straight-line program evaluating several expressions at once, with shared
/// subexpressions computed a single time.
///
/// Poles and non-finite intermediates poison every node that depends on
/// them; an output reading a poisoned value is reported as
/// [`Error::Pole`] with its output index.
#[derive(Clone, Debug)]
pub struct Tape {
    ops: Vec<Op>,
    outputs: Vec<u32>,
    min_vars: usize,
}

impl Tape {
    pub fn compile(roots: &[Expr]) -> Tape {
        let mut index: HashMap<usize, u32> = HashMap::new();
        let mut ops = Vec::new();
        let mut min_vars = 0usize;
        // iterative post-order
        let mut stack: Vec<(Expr, bool)> = roots.iter().rev().map(|e| (e.clone(), false)).collect();
        while let Some((e, expanded)) = stack.pop() {
            if index.contains_key(&e.key()) {
                continue;
            }
            if !expanded {
                stack.push((e.clone(), true));
                for c in e.children().into_iter().rev() {
                    if !index.contains_key(&c.key()) {
                        stack.push((c.clone(), false));
                    }
                }
                continue;
            }
            let at = |x: &Expr| index[&x.key()];
            let op = match e.node() {
                Node::Const(c) => Op::Const(rational_to_f64(c)),
                Node::Var(i) => {
                    min_vars = min_vars.max(i + 1);
                    Op::Var(*i as u32)
                }
                Node::Add(a, b) => Op::Add(at(a), at(b)),
                Node::Sub(a, b) => Op::Sub(at(a), at(b)),
                Node::Mul(a, b) => Op::Mul(at(a), at(b)),
                Node::Div(a, b) => Op::Div(at(a), at(b)),
                Node::Pow(a, k) => Op::Pow(at(a), *k),
                Node::Sin(a) => Op::Sin(at(a)),
                Node::Cos(a) => Op::Cos(at(a)),
                Node::Tan(a) => Op::Tan(at(a)),
                Node::Sec(a) => Op::Sec(at(a)),
                Node::Csc(a) => Op::Csc(at(a)),
                Node::Cot(a) => Op::Cot(at(a)),
                Node::Atan(a) => Op::Atan(at(a)),
            };
            index.insert(e.key(), ops.len() as u32);
            ops.push(op);
        }
        let outputs = roots.iter().map(|e| index[&e.key()]).collect();
        Tape {
            ops,
            outputs,
            min_vars,
        }
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn eval(&self, point: &[f64]) -> Result<Vec<f64>> {
        let mut scratch = Vec::with_capacity(self.ops.len());
        let mut out = vec![0.0; self.outputs.len()];
        self.eval_into(point, &mut scratch, &mut out)?;
        Ok(out)
    }

    /// Evaluates into `out`, reusing `scratch` across calls.
    pub fn eval_into(&self, point: &[f64], scratch: &mut Vec<f64>, out: &mut [f64]) -> Result<()> {
        if point.len() < self.min_vars {
            return Err(Error::DimensionMismatch {
                expected: self.min_vars,
                got: point.len(),
            });
        }
        scratch.clear();
        let poisoned = f64::NAN;
        let guard = |d: f64| d.abs() < POLE_EPS;
        for op in &self.ops {
            let v = &scratch;
            let r = match *op {
                Op::Const(c) => c,
                Op::Var(i) => point[i as usize],
                Op::Add(a, b) => v[a as usize] + v[b as usize],
                Op::Sub(a, b) => v[a as usize] - v[b as usize],
                Op::Mul(a, b) => v[a as usize] * v[b as usize],
                Op::Div(a, b) => {
                    let d = v[b as usize];
                    if guard(d) {
                        poisoned
                    } else {
                        v[a as usize] / d
                    }
                }
                Op::Pow(a, k) => {
                    let base = v[a as usize];
                    if k < 0 && guard(base) {
                        poisoned
                    } else {
                        base.powi(k)
                    }
                }
                Op::Sin(a) => v[a as usize].sin(),
                Op::Cos(a) => v[a as usize].cos(),
                Op::Tan(a) => {
                    let (s, c) = v[a as usize].sin_cos();
                    if guard(c) {
                        poisoned
                    } else {
                        s / c
                    }
                }
                Op::Sec(a) => {
                    let c = v[a as usize].cos();
                    if guard(c) {
                        poisoned
                    } else {
                        1.0 / c
                    }
                }
                Op::Csc(a) => {
                    let s = v[a as usize].sin();
                    if guard(s) {
                        poisoned
                    } else {
                        1.0 / s
                    }
                }
                Op::Cot(a) => {
                    let (s, c) = v[a as usize].sin_cos();
                    if guard(s) {
                        poisoned
                    } else {
                        c / s
                    }
                }
                Op::Atan(a) => v[a as usize].atan(),
            };
            scratch.push(if r.is_finite() { r } else { poisoned });
        }
        for (k, (&o, slot)) in self.outputs.iter().zip(out.iter_mut()).enumerate() {
            let r = scratch[o as usize];
            if r.is_nan() {
                return Err(Error::Pole { component: k });
            }
            *slot = r;
        }
        Ok(())
    }
}
