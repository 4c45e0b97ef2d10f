use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{Jet2, Node};
use crate::domains::psi;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Second-order forward jet in the `2n` formal variables `(z_1..z_n, zbar_1..zbar_n)`.
///
/// `hess` is stored dense and symmetric, row-major.
#[derive(Debug, Clone)]
pub struct Jet {
    n: usize,
    pub val: Complex64,
    pub grad: Vec<Complex64>,
    pub hess: Vec<Complex64>,
}

impl Jet {
    fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn constant(c: Complex64, n: usize) -> Self {
        Self {
            n,
            val: c,
            grad: vec![ZERO; 2 * n],
            hess: vec![ZERO; 4 * n * n],
        }
    }

    pub fn variable(j: usize, p: &[Complex64]) -> Self {
        let mut jet = Self::constant(p[j], p.len());
        jet.grad[j] = Complex64::new(1.0, 0.0);
        jet
    }

    pub fn is_finite(&self) -> bool {
        let ok = |c: &Complex64| c.re.is_finite() && c.im.is_finite();
        ok(&self.val) && self.grad.iter().all(ok) && self.hess.iter().all(ok)
    }

    pub fn h(&self, a: usize, b: usize) -> Complex64 {
        self.hess[a * self.dim() + b]
    }

    fn zip(mut self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        self.val = f(self.val, other.val);
        for (a, b) in self.grad.iter_mut().zip(&other.grad) {
            *a = f(*a, *b);
        }
        for (a, b) in self.hess.iter_mut().zip(&other.hess) {
            *a = f(*a, *b);
        }
        self
    }

    fn map(mut self, f: impl Fn(Complex64) -> Complex64) -> Self {
        self.val = f(self.val);
        self.grad.iter_mut().for_each(|a| *a = f(*a));
        self.hess.iter_mut().for_each(|a| *a = f(*a));
        self
    }

    fn mul(&self, other: &Self) -> Self {
        let m = self.dim();
        let mut out = Self::constant(self.val * other.val, self.n);
        for a in 0..m {
            out.grad[a] = self.grad[a] * other.val + self.val * other.grad[a];
        }
        for a in 0..m {
            for b in 0..m {
                let k = a * m + b;
                out.hess[k] = self.hess[k] * other.val
                    + self.val * other.hess[k]
                    + self.grad[a] * other.grad[b]
                    + self.grad[b] * other.grad[a];
            }
        }
        out
    }

    /// Composition with a scalar function given its value and first two derivatives.
    fn chain(&self, f0: Complex64, f1: Complex64, f2: Complex64) -> Self {
        let m = self.dim();
        let mut out = Self::constant(f0, self.n);
        for a in 0..m {
            out.grad[a] = f1 * self.grad[a];
        }
        for a in 0..m {
            for b in 0..m {
                let k = a * m + b;
                out.hess[k] = f1 * self.hess[k] + f2 * self.grad[a] * self.grad[b];
            }
        }
        out
    }

    /// The jet of `conj(f)`: swap the holomorphic and antiholomorphic halves.
    fn conj(&self) -> Self {
        let n = self.n;
        let m = self.dim();
        let swap = |a: usize| if a < n { a + n } else { a - n };
        let mut out = Self::constant(self.val.conj(), n);
        for a in 0..m {
            out.grad[a] = self.grad[swap(a)].conj();
        }
        for a in 0..m {
            for b in 0..m {
                out.hess[a * m + b] = self.hess[swap(a) * m + swap(b)].conj();
            }
        }
        out
    }

    fn powu(&self, k: u32) -> Self {
        match k {
            0 => Self::constant(Complex64::new(1.0, 0.0), self.n),
            1 => self.clone(),
            _ => {
                let kf = k as f64;
                let f0 = self.val.powu(k);
                let f1 = kf * self.val.powu(k - 1);
                let f2 = kf * (kf - 1.0) * self.val.powu(k - 2);
                self.chain(f0, f1, f2)
            }
        }
    }

    pub fn into_jet2(self) -> Jet2 {
        let n = self.n;
        let m = self.dim();
        Jet2 {
            value: self.val,
            dz: DVector::from_fn(n, |j, _| self.grad[j]),
            dzbar: DVector::from_fn(n, |j, _| self.grad[n + j]),
            dzdzbar: DMatrix::from_fn(n, n, |j, k| self.hess[j * m + n + k]),
            dzdz: DMatrix::from_fn(n, n, |j, k| self.hess[j * m + k]),
            dzbardzbar: DMatrix::from_fn(n, n, |j, k| self.hess[(n + j) * m + n + k]),
        }
    }
}

pub(super) fn eval_jet(node: &Node, p: &[Complex64]) -> Jet {
    let n = p.len();
    match node {
        Node::Const(c) => Jet::constant(*c, n),
        Node::Var(j) => Jet::variable(*j, p),
        Node::Neg(a) => eval_jet(a, p).map(|x| -x),
        Node::Add(a, b) => eval_jet(a, p).zip(&eval_jet(b, p), |x, y| x + y),
        Node::Sub(a, b) => eval_jet(a, p).zip(&eval_jet(b, p), |x, y| x - y),
        Node::Mul(a, b) => eval_jet(a, p).mul(&eval_jet(b, p)),
        Node::Pow(a, k) => eval_jet(a, p).powu(*k),
        Node::Re(a) => {
            let f = eval_jet(a, p);
            let c = f.conj();
            f.zip(&c, |x, y| 0.5 * (x + y))
        }
        Node::Im(a) => {
            let f = eval_jet(a, p);
            let c = f.conj();
            // (f - conj f) / 2i
            f.zip(&c, |x, y| (x - y) * Complex64::new(0.0, -0.5))
        }
        Node::Abs2(a) => {
            let f = eval_jet(a, p);
            f.mul(&f.conj())
        }
        Node::Conj(a) => eval_jet(a, p).conj(),
        Node::Psi { arg, radius } => {
            let u = eval_jet(arg, p);
            let v = psi::psi_r(u.val.re, *radius);
            u.chain(
                Complex64::new(v.value, 0.0),
                Complex64::new(v.d1, 0.0),
                Complex64::new(v.d2, 0.0),
            )
        }
        Node::SmoothMax { a, b, radius } => {
            let (ja, jb) = (eval_jet(a, p), eval_jet(b, p));
            let d = ja.val.re - jb.val.re;
            if d >= *radius {
                ja
            } else if d <= -*radius {
                jb
            } else {
                let v = psi::psi_r(d, *radius);
                let diff = ja.clone().zip(&jb, |x, y| x - y);
                let sum = ja.zip(&jb, |x, y| x + y);
                let half = Complex64::new(0.5, 0.0);
                diff.chain(
                    Complex64::new(v.value, 0.0),
                    Complex64::new(v.d1, 0.0),
                    Complex64::new(v.d2, 0.0),
                )
                .zip(&sum, |x, y| half * (x + y))
            }
        }
    }
}
