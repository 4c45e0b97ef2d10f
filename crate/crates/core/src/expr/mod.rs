//! Real-valued expressions in complex variables `z1..zn` and their
//! second-order Wirtinger jets.
//!
//! Every variable `z_j` is treated as an independent pair `(z_j, conj z_j)`.
//! Differentiation is formal in both halves, so the first and second
//! Wirtinger derivatives come out of a single forward pass without any
//! finite differencing.

mod jet;
mod parse;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::domains::psi;

pub use jet::Jet;

/// Imaginary residue above which an expression is not considered real.
pub const REAL_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at column {column}: {message}")]
    Syntax { column: usize, message: String },
    #[error("unknown identifier `{name}` at column {column}")]
    UnknownIdentifier { name: String, column: usize },
    #[error("variable z{index} out of range (expression has {nvars} variables)")]
    VariableOutOfRange { index: usize, nvars: usize },
    #[error("expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("expression is not real-valued: imaginary part {imag:e}")]
    NotReal { imag: f64 },
    #[error("non-finite value encountered while evaluating the expression")]
    NonFinite,
    #[error("expression needs at least 1 variable")]
    NoVariables,
}

/// Expression tree node. Variables are stored 0-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(Complex64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Pow(Box<Node>, u32),
    Re(Box<Node>),
    Im(Box<Node>),
    Abs2(Box<Node>),
    Conj(Box<Node>),
    /// `r * psi(x / r)`: the C^3 even sextic smoothing of `|x|` (see [`psi`]).
    Psi {
        arg: Box<Node>,
        radius: f64,
    },
    /// `1/2 psi_r(a - b) + 1/2 (a + b)`, evaluated as `max(a, b)` outside the band `|a - b| < r`.
    SmoothMax {
        a: Box<Node>,
        b: Box<Node>,
        radius: f64,
    },
}

/// A parsed expression over `nvars` complex variables.
#[derive(Debug, Clone, PartialEq)]
pub struct DefiningExpr {
    root: Node,
    nvars: usize,
}

/// Value and Wirtinger derivatives up to order two at a point.
///
/// `dzdzbar[(j, k)]` is `d^2 f / dz_j dzbar_k`.
#[derive(Debug, Clone)]
pub struct Jet2 {
    pub value: Complex64,
    pub dz: DVector<Complex64>,
    pub dzbar: DVector<Complex64>,
    pub dzdzbar: DMatrix<Complex64>,
    pub dzdz: DMatrix<Complex64>,
    pub dzbardzbar: DMatrix<Complex64>,
}

impl Jet2 {
    pub fn nvars(&self) -> usize {
        self.dz.len()
    }

    /// Real gradient `(d/dx_1, d/dy_1, ..., d/dx_n, d/dy_n)` of a real function.
    pub fn real_gradient(&self) -> Vec<f64> {
        // df/dx = 2 Re(df/dz), df/dy = -2 Im(df/dz) for real f.
        let mut g = Vec::with_capacity(2 * self.nvars());
        for d in self.dz.iter() {
            g.push(2.0 * d.re);
            g.push(-2.0 * d.im);
        }
        g
    }
}

impl DefiningExpr {
    pub fn new(root: Node, nvars: usize) -> Result<Self, ExprError> {
        if nvars == 0 {
            return Err(ExprError::NoVariables);
        }
        if let Some(max) = max_var(&root) {
            if max >= nvars {
                return Err(ExprError::VariableOutOfRange {
                    index: max + 1,
                    nvars,
                });
            }
        }
        Ok(Self { root, nvars })
    }

    pub fn parse(text: &str, nvars: usize) -> Result<Self, ExprError> {
        parse_expr(text, nvars)
    }

    pub fn constant(c: f64, nvars: usize) -> Self {
        Self {
            root: Node::Const(Complex64::new(c, 0.0)),
            nvars,
        }
    }

    /// The variable `z_{index+1}`.
    pub fn var(index: usize, nvars: usize) -> Self {
        assert!(index < nvars, "variable index out of range");
        Self {
            root: Node::Var(index),
            nvars,
        }
    }

    /// `|z_1|^2 + ... + |z_n|^2`.
    pub fn norm2(nvars: usize) -> Self {
        let root = (0..nvars)
            .map(|j| Node::Abs2(Box::new(Node::Var(j))))
            .reduce(|a, b| Node::Add(Box::new(a), Box::new(b)))
            .expect("nvars >= 1");
        Self { root, nvars }
    }

    pub fn node(&self) -> &Node {
        &self.root
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Same expression, viewed as a function of `nvars` variables.
    pub fn with_nvars(&self, nvars: usize) -> Result<Self, ExprError> {
        Self::new(self.root.clone(), nvars)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            root: Node::Mul(
                Box::new(Node::Const(Complex64::new(c, 0.0))),
                Box::new(self.root.clone()),
            ),
            nvars: self.nvars,
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        Self {
            root: Node::Pow(Box::new(self.root.clone()), k),
            nvars: self.nvars,
        }
    }

    pub fn re(&self) -> Self {
        Self {
            root: Node::Re(Box::new(self.root.clone())),
            nvars: self.nvars,
        }
    }

    pub fn im(&self) -> Self {
        Self {
            root: Node::Im(Box::new(self.root.clone())),
            nvars: self.nvars,
        }
    }

    pub fn abs2(&self) -> Self {
        Self {
            root: Node::Abs2(Box::new(self.root.clone())),
            nvars: self.nvars,
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            root: Node::Conj(Box::new(self.root.clone())),
            nvars: self.nvars,
        }
    }

    /// `r * psi(self / r)`.
    pub fn psi(&self, radius: f64) -> Self {
        Self {
            root: Node::Psi {
                arg: Box::new(self.root.clone()),
                radius,
            },
            nvars: self.nvars,
        }
    }

    /// Smooth maximum of `self` and `other` with band half-width `radius`.
    pub fn smooth_max(&self, other: &Self, radius: f64) -> Self {
        Self {
            root: Node::SmoothMax {
                a: Box::new(self.root.clone()),
                b: Box::new(other.root.clone()),
                radius,
            },
            nvars: self.nvars.max(other.nvars),
        }
    }

    /// Substitute `z_j -> sum_k map[(j, k)] z_k`, i.e. compose with a linear map.
    pub fn compose_linear(&self, map: &DMatrix<Complex64>) -> Self {
        assert_eq!(map.nrows(), self.nvars);
        assert_eq!(map.ncols(), self.nvars);
        fn go(node: &Node, map: &DMatrix<Complex64>) -> Node {
            let b = |n: &Node| Box::new(go(n, map));
            match node {
                Node::Const(c) => Node::Const(*c),
                Node::Var(j) => (0..map.ncols())
                    .filter(|&k| map[(*j, k)] != Complex64::new(0.0, 0.0))
                    .map(|k| Node::Mul(Box::new(Node::Const(map[(*j, k)])), Box::new(Node::Var(k))))
                    .reduce(|a, c| Node::Add(Box::new(a), Box::new(c)))
                    .unwrap_or(Node::Const(Complex64::new(0.0, 0.0))),
                Node::Neg(a) => Node::Neg(b(a)),
                Node::Add(x, y) => Node::Add(b(x), b(y)),
                Node::Sub(x, y) => Node::Sub(b(x), b(y)),
                Node::Mul(x, y) => Node::Mul(b(x), b(y)),
                Node::Pow(x, k) => Node::Pow(b(x), *k),
                Node::Re(a) => Node::Re(b(a)),
                Node::Im(a) => Node::Im(b(a)),
                Node::Abs2(a) => Node::Abs2(b(a)),
                Node::Conj(a) => Node::Conj(b(a)),
                Node::Psi { arg, radius } => Node::Psi {
                    arg: b(arg),
                    radius: *radius,
                },
                Node::SmoothMax { a, b: c, radius } => Node::SmoothMax {
                    a: b(a),
                    b: b(c),
                    radius: *radius,
                },
            }
        }
        Self {
            root: go(&self.root, map),
            nvars: self.nvars,
        }
    }

    fn check_point(&self, p: &[Complex64]) -> Result<(), ExprError> {
        if p.len() != self.nvars {
            return Err(ExprError::DimensionMismatch {
                expected: self.nvars,
                got: p.len(),
            });
        }
        Ok(())
    }

    pub fn eval_complex(&self, p: &[Complex64]) -> Result<Complex64, ExprError> {
        self.check_point(p)?;
        let v = eval_node(&self.root, p);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(ExprError::NonFinite);
        }
        Ok(v)
    }

    /// Evaluate a real-valued expression.
    pub fn eval_real(&self, p: &[Complex64]) -> Result<f64, ExprError> {
        let v = self.eval_complex(p)?;
        if v.im.abs() > REAL_TOL * v.re.abs().max(1.0) {
            return Err(ExprError::NotReal { imag: v.im });
        }
        Ok(v.re)
    }

    /// Value, gradient and Hessian in the formal variables `(z, conj z)`.
    pub fn jet(&self, p: &[Complex64]) -> Result<Jet, ExprError> {
        self.check_point(p)?;
        let j = jet::eval_jet(&self.root, p);
        if !j.is_finite() {
            return Err(ExprError::NonFinite);
        }
        Ok(j)
    }
}

pub fn parse_expr(text: &str, nvars: usize) -> Result<DefiningExpr, ExprError> {
    if nvars == 0 {
        return Err(ExprError::NoVariables);
    }
    let root = parse::Parser::new(text, nvars, &[]).parse()?;
    Ok(DefiningExpr { root, nvars })
}

/// Parse with extra identifiers bound to variables, e.g. `("s", 0)` makes
/// `s` an alias of `z1`.
pub fn parse_expr_with_aliases(
    text: &str,
    nvars: usize,
    aliases: &[(&str, usize)],
) -> Result<DefiningExpr, ExprError> {
    if nvars == 0 {
        return Err(ExprError::NoVariables);
    }
    let root = parse::Parser::new(text, nvars, aliases).parse()?;
    Ok(DefiningExpr { root, nvars })
}

pub fn eval_real(e: &DefiningExpr, p: &[Complex64]) -> Result<f64, ExprError> {
    e.eval_real(p)
}

/// First and second Wirtinger derivatives of `e` at `p`.
pub fn wirtinger_jet2(e: &DefiningExpr, p: &[Complex64]) -> Result<Jet2, ExprError> {
    let j = e.jet(p)?;
    Ok(j.into_jet2())
}

fn max_var(node: &Node) -> Option<usize> {
    match node {
        Node::Const(_) => None,
        Node::Var(j) => Some(*j),
        Node::Neg(a)
        | Node::Pow(a, _)
        | Node::Re(a)
        | Node::Im(a)
        | Node::Abs2(a)
        | Node::Conj(a) => max_var(a),
        Node::Psi { arg, .. } => max_var(arg),
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::SmoothMax { a, b, .. } => {
            match (max_var(a), max_var(b)) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            }
        }
    }
}

fn eval_node(node: &Node, p: &[Complex64]) -> Complex64 {
    match node {
        Node::Const(c) => *c,
        Node::Var(j) => p[*j],
        Node::Neg(a) => -eval_node(a, p),
        Node::Add(a, b) => eval_node(a, p) + eval_node(b, p),
        Node::Sub(a, b) => eval_node(a, p) - eval_node(b, p),
        Node::Mul(a, b) => eval_node(a, p) * eval_node(b, p),
        Node::Pow(a, k) => eval_node(a, p).powu(*k),
        Node::Re(a) => Complex64::new(eval_node(a, p).re, 0.0),
        Node::Im(a) => Complex64::new(eval_node(a, p).im, 0.0),
        Node::Abs2(a) => Complex64::new(eval_node(a, p).norm_sqr(), 0.0),
        Node::Conj(a) => eval_node(a, p).conj(),
        Node::Psi { arg, radius } => {
            let x = eval_node(arg, p).re;
            Complex64::new(psi::psi_r(x, *radius).value, 0.0)
        }
        Node::SmoothMax { a, b, radius } => {
            let (x, y) = (eval_node(a, p).re, eval_node(b, p).re);
            Complex64::new(psi::smooth_max_value(x, y, *radius), 0.0)
        }
    }
}

impl fmt::Display for DefiningExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(&self.root, f)
    }
}

fn write_real(x: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    // `{:?}` is the shortest representation that round-trips.
    if x < 0.0 || (x == 0.0 && x.is_sign_negative()) {
        write!(f, "(-{:?})", -x)
    } else {
        write!(f, "{:?}", x)
    }
}

fn write_node(node: &Node, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match node {
        Node::Const(c) => {
            if c.im == 0.0 {
                write_real(c.re, f)
            } else {
                f.write_str("(")?;
                write_real(c.re, f)?;
                f.write_str("+")?;
                write_real(c.im, f)?;
                f.write_str("*i)")
            }
        }
        Node::Var(j) => write!(f, "z{}", j + 1),
        Node::Neg(a) => {
            f.write_str("(-")?;
            write_node(a, f)?;
            f.write_str(")")
        }
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) => {
            let op = match node {
                Node::Add(..) => "+",
                Node::Sub(..) => "-",
                _ => "*",
            };
            f.write_str("(")?;
            write_node(a, f)?;
            f.write_str(op)?;
            write_node(b, f)?;
            f.write_str(")")
        }
        Node::Pow(a, k) => {
            f.write_str("(")?;
            write_node(a, f)?;
            write!(f, "^{})", k)
        }
        Node::Re(a) | Node::Im(a) | Node::Abs2(a) | Node::Conj(a) => {
            let name = match node {
                Node::Re(_) => "re",
                Node::Im(_) => "im",
                Node::Abs2(_) => "abs2",
                _ => "conj",
            };
            write!(f, "{}(", name)?;
            write_node(a, f)?;
            f.write_str(")")
        }
        Node::Psi { arg, radius } => {
            f.write_str("psi(")?;
            write_node(arg, f)?;
            f.write_str(", ")?;
            write_real(*radius, f)?;
            f.write_str(")")
        }
        Node::SmoothMax { a, b, radius } => {
            f.write_str("smax(")?;
            write_node(a, f)?;
            f.write_str(", ")?;
            write_node(b, f)?;
            f.write_str(", ")?;
            write_real(*radius, f)?;
            f.write_str(")")
        }
    }
}

fn combine(
    a: &DefiningExpr,
    b: &DefiningExpr,
    mk: fn(Box<Node>, Box<Node>) -> Node,
) -> DefiningExpr {
    DefiningExpr {
        root: mk(Box::new(a.root.clone()), Box::new(b.root.clone())),
        nvars: a.nvars.max(b.nvars),
    }
}

impl Add for &DefiningExpr {
    type Output = DefiningExpr;
    fn add(self, rhs: Self) -> DefiningExpr {
        combine(self, rhs, Node::Add)
    }
}

impl Sub for &DefiningExpr {
    type Output = DefiningExpr;
    fn sub(self, rhs: Self) -> DefiningExpr {
        combine(self, rhs, Node::Sub)
    }
}

impl Mul for &DefiningExpr {
    type Output = DefiningExpr;
    fn mul(self, rhs: Self) -> DefiningExpr {
        combine(self, rhs, Node::Mul)
    }
}

impl Neg for &DefiningExpr {
    type Output = DefiningExpr;
    fn neg(self) -> DefiningExpr {
        DefiningExpr {
            root: Node::Neg(Box::new(self.root.clone())),
            nvars: self.nvars,
        }
    }
}

#[cfg(test)]
mod tests;
