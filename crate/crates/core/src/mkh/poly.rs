//! Polynomials in `(z, zbar, u)` multiplying a radial bump window.
//!
//! With `s = |z - c|^2 / w^2` the window is `b = exp(-u)`, `u = 1 / (1 - s)`,
//! for `s < 1` and zero otherwise. Since `du/dzbar_j = u^2 (z_j - c_j) / w^2`
//! and `db/dzbar_j = -u^2 (z_j - c_j) / w^2 b`, the class `P(z, zbar, u) b` is
//! closed under `d/dz_j` and `d/dzbar_j`.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
/// Beyond this `u` the window underflows to zero in double precision.
const U_CUTOFF: f64 = 745.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub center: Vec<Complex64>,
    pub width: f64,
}

impl Window {
    pub fn new(center: Vec<Complex64>, width: f64) -> Self {
        assert!(
            width > 0.0 && width.is_finite(),
            "window width must be positive"
        );
        Self { center, width }
    }

    /// `(u, b)` at `p`, or `None` outside the support.
    pub fn factors(&self, p: &[Complex64]) -> Option<(f64, f64)> {
        let s = p
            .iter()
            .zip(&self.center)
            .map(|(z, c)| (z - c).norm_sqr())
            .sum::<f64>()
            / (self.width * self.width);
        if s >= 1.0 {
            return None;
        }
        let u = 1.0 / (1.0 - s);
        if u > U_CUTOFF {
            return None;
        }
        Some((u, (-u).exp()))
    }

    pub fn value(&self, p: &[Complex64]) -> f64 {
        self.factors(p).map_or(0.0, |(_, b)| b)
    }
}

/// Exponents of `z^a zbar^b u^k`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    pub z: Vec<u8>,
    pub zbar: Vec<u8>,
    pub u: u8,
}

impl Monomial {
    fn one(n: usize) -> Self {
        Self {
            z: vec![0; n],
            zbar: vec![0; n],
            u: 0,
        }
    }

    fn mul(&self, other: &Self) -> Self {
        Self {
            z: self.z.iter().zip(&other.z).map(|(a, b)| a + b).collect(),
            zbar: self
                .zbar
                .iter()
                .zip(&other.zbar)
                .map(|(a, b)| a + b)
                .collect(),
            u: self.u + other.u,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    n: usize,
    terms: BTreeMap<Monomial, Complex64>,
}

impl Poly {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: Complex64) -> Self {
        let mut p = Self::zero(n);
        p.add_term(Monomial::one(n), c);
        p
    }

    pub fn z(n: usize, j: usize) -> Self {
        let mut m = Monomial::one(n);
        m.z[j] = 1;
        let mut p = Self::zero(n);
        p.add_term(m, Complex64::new(1.0, 0.0));
        p
    }

    pub fn zbar(n: usize, j: usize) -> Self {
        let mut m = Monomial::one(n);
        m.zbar[j] = 1;
        let mut p = Self::zero(n);
        p.add_term(m, Complex64::new(1.0, 0.0));
        p
    }

    pub fn u(n: usize, k: u8) -> Self {
        let mut m = Monomial::one(n);
        m.u = k;
        let mut p = Self::zero(n);
        p.add_term(m, Complex64::new(1.0, 0.0));
        p
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Complex64)> {
        self.terms.iter()
    }

    pub fn degree_u(&self) -> u8 {
        self.terms.keys().map(|m| m.u).max().unwrap_or(0)
    }

    fn add_term(&mut self, m: Monomial, c: Complex64) {
        if c == ZERO {
            return;
        }
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == ZERO {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), *c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = Self::zero(self.n);
        for (m, v) in &self.terms {
            out.add_term(m.clone(), v * c);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut out = Self::zero(self.n);
        for (ma, a) in &self.terms {
            for (mb, b) in &other.terms {
                out.add_term(ma.mul(mb), a * b);
            }
        }
        out
    }

    /// `d/dzbar_j` of `self * b` divided by `b` (or plain `d/dzbar_j` without a window).
    pub fn d_zbar(&self, j: usize, window: Option<&Window>) -> Self {
        self.derivative(j, window, true)
    }

    /// `d/dz_j` of `self * b` divided by `b` (or plain `d/dz_j` without a window).
    pub fn d_z(&self, j: usize, window: Option<&Window>) -> Self {
        self.derivative(j, window, false)
    }

    fn derivative(&self, j: usize, window: Option<&Window>, bar: bool) -> Self {
        let n = self.n;
        let mut out = Self::zero(n);
        for (m, c) in &self.terms {
            let e = if bar { m.zbar[j] } else { m.z[j] };
            if e > 0 {
                let mut d = m.clone();
                if bar {
                    d.zbar[j] -= 1;
                } else {
                    d.z[j] -= 1;
                }
                out.add_term(d, c * e as f64);
            }
        }
        if let Some(w) = window {
            // (k u^{k+1} - u^{k+2}) * delta / w^2 with delta = z_j - c_j or its conjugate
            let (var, shift) = if bar {
                (Self::z(n, j), w.center[j])
            } else {
                (Self::zbar(n, j), w.center[j].conj())
            };
            let delta = var
                .sub(&Self::constant(n, shift))
                .scale(Complex64::new(1.0 / (w.width * w.width), 0.0));
            for (m, c) in &self.terms {
                let mut base = Self::zero(n);
                base.add_term(m.clone(), *c);
                let k = m.u as f64;
                let factor = Self::u(n, 1)
                    .scale(Complex64::new(k, 0.0))
                    .sub(&Self::u(n, 2));
                out = out.add(&base.mul(&factor).mul(&delta));
            }
        }
        out
    }

    pub fn compile(&self) -> CompiledPoly {
        CompiledPoly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (*c, m.z.clone(), m.zbar.clone(), m.u))
                .collect(),
        }
    }
}

/// Flat term list for fast evaluation.
#[derive(Debug, Clone)]
pub struct CompiledPoly {
    terms: Vec<(Complex64, Vec<u8>, Vec<u8>, u8)>,
}

impl CompiledPoly {
    pub fn max_degrees(&self) -> (u8, u8, u8) {
        let mut d = (0, 0, 0);
        for (_, a, b, k) in &self.terms {
            d.0 = d.0.max(a.iter().copied().max().unwrap_or(0));
            d.1 = d.1.max(b.iter().copied().max().unwrap_or(0));
            d.2 = d.2.max(*k);
        }
        d
    }

    pub fn eval(&self, pw: &Powers) -> Complex64 {
        let mut acc = ZERO;
        for (c, a, b, k) in &self.terms {
            let mut t = *c * pw.u[*k as usize];
            for (j, (&aj, &bj)) in a.iter().zip(b).enumerate() {
                if aj > 0 {
                    t *= pw.z[j][aj as usize];
                }
                if bj > 0 {
                    t *= pw.zbar[j][bj as usize];
                }
            }
            acc += t;
        }
        acc
    }
}

/// Power tables of `z_j`, `zbar_j` and `u` at one point.
#[derive(Debug, Clone)]
pub struct Powers {
    z: Vec<Vec<Complex64>>,
    zbar: Vec<Vec<Complex64>>,
    u: Vec<Complex64>,
}

impl Powers {
    pub fn new(p: &[Complex64], u: f64, degrees: (u8, u8, u8)) -> Self {
        let table = |x: Complex64, d: u8| {
            let mut v = Vec::with_capacity(d as usize + 1);
            let mut acc = Complex64::new(1.0, 0.0);
            v.push(acc);
            for _ in 0..d {
                acc *= x;
                v.push(acc);
            }
            v
        };
        Self {
            z: p.iter().map(|&x| table(x, degrees.0)).collect(),
            zbar: p.iter().map(|&x| table(x.conj(), degrees.1)).collect(),
            u: table(Complex64::new(u, 0.0), degrees.2),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn eval(p: &Poly, w: Option<&Window>, z: &[Complex64]) -> Complex64 {
        match w {
            None => p
                .compile()
                .eval(&Powers::new(z, 1.0, p.compile().max_degrees())),
            Some(w) => match w.factors(z) {
                None => ZERO,
                Some((u, b)) => {
                    p.compile()
                        .eval(&Powers::new(z, u, p.compile().max_degrees()))
                        * b
                }
            },
        }
    }

    #[test]
    fn algebra() {
        let n = 2;
        let p = Poly::z(n, 0).add(&Poly::zbar(n, 1).scale(c(0.0, 2.0)));
        let q = p.mul(&p);
        let z = [c(0.3, -0.1), c(0.2, 0.5)];
        let v = eval(&p, None, &z);
        assert!((eval(&q, None, &z) - v * v).norm() < 1e-15);
        assert!(p.sub(&p).is_zero());
    }

    #[test]
    fn window_derivative_matches_differences() {
        let n = 2;
        let w = Window::new(vec![c(0.1, -0.2), c(0.0, 0.3)], 0.8);
        let p = Poly::z(n, 0)
            .mul(&Poly::zbar(n, 1))
            .add(&Poly::constant(n, c(0.5, 0.0)));
        let z = [c(0.2, 0.1), c(-0.1, 0.2)];
        let h = 1e-6;
        for j in 0..n {
            let shift = |dx: f64, dy: f64| {
                let mut q = z.to_vec();
                q[j] += c(dx, dy);
                eval(&p, Some(&w), &q)
            };
            let dx = (shift(h, 0.0) - shift(-h, 0.0)) / (2.0 * h);
            let dy = (shift(0.0, h) - shift(0.0, -h)) / (2.0 * h);
            let dzbar = 0.5 * (dx + c(0.0, 1.0) * dy);
            let dz = 0.5 * (dx - c(0.0, 1.0) * dy);
            assert!((eval(&p.d_zbar(j, Some(&w)), Some(&w), &z) - dzbar).norm() < 1e-8);
            assert!((eval(&p.d_z(j, Some(&w)), Some(&w), &z) - dz).norm() < 1e-8);
        }
    }

    #[test]
    fn window_vanishes_outside() {
        let w = Window::new(vec![c(0.0, 0.0)], 0.5);
        assert_eq!(w.value(&[c(0.5, 0.0)]), 0.0);
        assert_eq!(w.value(&[c(0.0, 0.0)]), (-1.0f64).exp());
        assert_eq!(w.value(&[c(0.5 - 1e-12, 0.0)]), 0.0);
    }
}
