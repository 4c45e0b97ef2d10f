//! The Morrey–Kohn–Hörmander identity for compactly supported (0,q)-forms in
//! `C^n` with the flat metric and weight `exp(-t |z|^2)`:
//!
//! `|dbar f|_t^2 + |dbar*_t f|_t^2 = sum_{J,k} |df_J/dzbar_k|_t^2 + t int q |f|^2 e^{-t|z|^2}`.
//!
//! Coefficients are polynomials in `(z, zbar)` times a radial bump, so every
//! derivative is exact and only the integrals are discretized.

mod poly;
mod quad;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::expr::DefiningExpr;
use crate::geometry::forms::prepend_index;
use crate::geometry::{form_action, increasing_multi_indices, FormCoeffs};

pub use poly::{CompiledPoly, Monomial, Poly, Powers, Window};
pub use quad::{gauss_legendre, pairwise_sum, QuadratureGrid, QuadratureRule};

/// Largest window value tolerated on the faces of the integration box.
pub const SUPPORT_TAIL_TOL: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MkhError {
    #[error("window reaches the box boundary (tail {tail:e})")]
    SupportOverflow { tail: f64 },
    #[error("form has no window, so it is not compactly supported")]
    NotCompactlySupported,
    #[error("the adjoint is not defined on functions (degree 0)")]
    DegreeZero,
    #[error("invalid weight: {0}")]
    InvalidWeight(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("forms of shape (n, q) = {left:?} and {right:?} cannot be paired")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("{index:?} is not a strictly increasing {q}-index over {n} variables")]
    InvalidIndex {
        index: Vec<usize>,
        q: usize,
        n: usize,
    },
}

/// Weight `exp(-t phi)` with `phi = |z|^2`.
#[derive(Debug, Clone)]
pub struct WeightConfig {
    pub t: f64,
    pub phi: DefiningExpr,
}

impl WeightConfig {
    pub fn new(n: usize, t: f64) -> Result<Self, MkhError> {
        if !t.is_finite() || t < 0.0 {
            return Err(MkhError::InvalidWeight(format!(
                "t = {} must be finite and >= 0",
                t
            )));
        }
        Ok(Self {
            t,
            phi: DefiningExpr::norm2(n),
        })
    }

    /// Accepts `phi` only if it is `|z|^2` (checked at a few points).
    pub fn with_phi(phi: DefiningExpr, t: f64) -> Result<Self, MkhError> {
        let n = phi.nvars();
        let w = Self::new(n, t)?;
        for k in 0..3 {
            let p: Vec<Complex64> = (0..n)
                .map(|j| Complex64::new(0.3 * (j + k) as f64 - 0.4, 0.7 - 0.2 * (j * k) as f64))
                .collect();
            let want: f64 = p.iter().map(|z| z.norm_sqr()).sum();
            match phi.eval_real(&p) {
                Ok(v) if (v - want).abs() <= 1e-12 * (1.0 + want) => {}
                _ => {
                    return Err(MkhError::InvalidWeight(
                        "phi must be the flat potential sum |z_j|^2".into(),
                    ))
                }
            }
        }
        Ok(Self { phi, ..w })
    }

    pub fn nvars(&self) -> usize {
        self.phi.nvars()
    }

    pub fn density(&self, p: &[Complex64]) -> f64 {
        if self.t == 0.0 {
            return 1.0;
        }
        (-self.t * p.iter().map(|z| z.norm_sqr()).sum::<f64>()).exp()
    }
}

/// A (0,q)-form whose components share one (optional) bump window.
#[derive(Debug, Clone, PartialEq)]
pub struct FormField {
    pub n: usize,
    pub q: usize,
    pub window: Option<Window>,
    components: BTreeMap<Vec<usize>, Poly>,
}

impl FormField {
    pub fn zero(n: usize, q: usize, window: Option<Window>) -> Self {
        Self {
            n,
            q,
            window,
            components: BTreeMap::new(),
        }
    }

    /// `b dzbar_J` for the bump centered at `center` with radius `width`.
    pub fn bump(center: Vec<Complex64>, width: f64, index: &[usize]) -> Result<Self, MkhError> {
        let n = center.len();
        Self::zero(n, index.len(), Some(Window::new(center, width)))
            .with_component(index, Poly::constant(n, Complex64::new(1.0, 0.0)))
    }

    /// Add `coeff` to the component `J` (strictly increasing).
    pub fn with_component(mut self, index: &[usize], coeff: Poly) -> Result<Self, MkhError> {
        if index.len() != self.q
            || !index.windows(2).all(|w| w[0] < w[1])
            || index.iter().any(|&i| i >= self.n)
        {
            return Err(MkhError::InvalidIndex {
                index: index.to_vec(),
                q: self.q,
                n: self.n,
            });
        }
        if coeff.nvars() != self.n {
            return Err(MkhError::DimensionMismatch {
                expected: self.n,
                got: coeff.nvars(),
            });
        }
        self.insert(index.to_vec(), coeff);
        Ok(self)
    }

    fn insert(&mut self, index: Vec<usize>, coeff: Poly) {
        let sum = match self.components.remove(&index) {
            Some(old) => old.add(&coeff),
            None => coeff,
        };
        if !sum.is_zero() {
            self.components.insert(index, sum);
        }
    }

    pub fn component(&self, index: &[usize]) -> Option<&Poly> {
        self.components.get(index)
    }

    pub fn components(&self) -> impl Iterator<Item = (&Vec<usize>, &Poly)> {
        self.components.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.components.is_empty()
    }

    /// Coefficients at `p`, including the window factor.
    pub fn eval(&self, p: &[Complex64]) -> FormCoeffs {
        let mut out = FormCoeffs::zero(self.n, self.q);
        let (u, b) = match &self.window {
            None => (1.0, 1.0),
            Some(w) => match w.factors(p) {
                Some(f) => f,
                None => return out,
            },
        };
        for (k, poly) in &self.components {
            let c = poly.compile();
            let v = c.eval(&Powers::new(p, u, c.max_degrees())) * b;
            out.coeffs.insert(k.clone(), v);
        }
        out
    }

    fn check_support(&self, grid: &QuadratureGrid) -> Result<(), MkhError> {
        let w = self
            .window
            .as_ref()
            .ok_or(MkhError::NotCompactlySupported)?;
        support_tail(w, grid)
    }
}

/// Window value at the point of the box faces closest to its center.
fn support_tail(w: &Window, grid: &QuadratureGrid) -> Result<(), MkhError> {
    if grid.nvars() != w.center.len() {
        return Err(MkhError::DimensionMismatch {
            expected: grid.nvars(),
            got: w.center.len(),
        });
    }
    let mut tail: f64 = 0.0;
    for axis in 0..grid.lo.len() {
        let z = w.center[axis / 2];
        let c = if axis % 2 == 0 { z.re } else { z.im };
        if !(grid.lo[axis]..=grid.hi[axis]).contains(&c) {
            tail = 1.0;
            continue;
        }
        for face in [grid.lo[axis], grid.hi[axis]] {
            let s = ((c - face) / w.width).powi(2);
            if s < 1.0 {
                tail = tail.max((-1.0 / (1.0 - s)).exp());
            }
        }
    }
    if tail > SUPPORT_TAIL_TOL {
        return Err(MkhError::SupportOverflow { tail });
    }
    Ok(())
}

/// Several coefficient polynomials sharing one window, evaluated together.
struct Compiled {
    window: Option<Window>,
    polys: Vec<CompiledPoly>,
    degrees: (u8, u8, u8),
}

impl Compiled {
    fn new(window: Option<Window>, polys: Vec<Poly>) -> Self {
        let polys: Vec<CompiledPoly> = polys.iter().map(Poly::compile).collect();
        let degrees = polys
            .iter()
            .map(|p| p.max_degrees())
            .fold((0, 0, 0), |a, b| (a.0.max(b.0), a.1.max(b.1), a.2.max(b.2)));
        Self {
            window,
            polys,
            degrees,
        }
    }

    /// Values at `p`, or `None` where the window vanishes.
    fn eval(&self, p: &[Complex64]) -> Option<Vec<Complex64>> {
        let (u, b) = match &self.window {
            None => (1.0, 1.0),
            Some(w) => w.factors(p)?,
        };
        let pw = Powers::new(p, u, self.degrees);
        Some(self.polys.iter().map(|c| c.eval(&pw) * b).collect())
    }
}

/// `(dbar f)_K = sum_{k in K} (-1)^{pos(k)} df_{K minus k}/dzbar_k`.
pub fn dbar(f: &FormField) -> FormField {
    let w = f.window.as_ref();
    let mut out = FormField::zero(f.n, f.q + 1, f.window.clone());
    for (jset, coeff) in &f.components {
        for k in 0..f.n {
            if let Some((sign, key)) = prepend_index(k, jset) {
                out.insert(key, coeff.d_zbar(k, w).scale(Complex64::new(sign, 0.0)));
            }
        }
    }
    out
}

/// `(dbar*_t f)_J = -sum_k (df_{kJ}/dz_k - t zbar_k f_{kJ})`.
pub fn dbar_star_t(f: &FormField, w: &WeightConfig) -> Result<FormField, MkhError> {
    if f.q == 0 {
        return Err(MkhError::DegreeZero);
    }
    if w.nvars() != f.n {
        return Err(MkhError::DimensionMismatch {
            expected: f.n,
            got: w.nvars(),
        });
    }
    let win = f.window.as_ref();
    let mut out = FormField::zero(f.n, f.q - 1, f.window.clone());
    for (kset, coeff) in &f.components {
        for (pos, &k) in kset.iter().enumerate() {
            let jset: Vec<usize> = kset.iter().copied().filter(|&x| x != k).collect();
            // f_{kJ} = (-1)^pos f_K
            let sign = if pos % 2 == 0 { -1.0 } else { 1.0 };
            let mut term = coeff.d_z(k, win);
            if w.t != 0.0 {
                term = term.sub(
                    &Poly::zbar(f.n, k)
                        .mul(coeff)
                        .scale(Complex64::new(w.t, 0.0)),
                );
            }
            out.insert(jset, term.scale(Complex64::new(sign, 0.0)));
        }
    }
    Ok(out)
}

/// The components `df_J/dzbar_k`, keyed by `(J, k)`.
pub fn bar_gradient(f: &FormField) -> Vec<((Vec<usize>, usize), Poly)> {
    let w = f.window.as_ref();
    let mut out = Vec::new();
    for (jset, coeff) in &f.components {
        for k in 0..f.n {
            let d = coeff.d_zbar(k, w);
            if !d.is_zero() {
                out.push(((jset.clone(), k), d));
            }
        }
    }
    out
}

/// `i ddbar phi (f, f)` at `p` for `phi = |z|^2`.
pub fn hessian_action_phi(f: &FormField, p: &[Complex64]) -> f64 {
    let id = DMatrix::<Complex64>::identity(f.n, f.n);
    form_action(&id, &f.eval(p)).expect("components are validated on insertion")
}

/// `(f, h)_t = int e^{-t phi} sum_J f_J conj(h_J) dV`.
pub fn weighted_pairing(
    f: &FormField,
    h: &FormField,
    w: &WeightConfig,
    grid: &QuadratureGrid,
) -> Result<Complex64, MkhError> {
    if f.n != h.n || f.q != h.q {
        return Err(MkhError::ShapeMismatch {
            left: (f.n, f.q),
            right: (h.n, h.q),
        });
    }
    if grid.nvars() != f.n || w.nvars() != f.n {
        return Err(MkhError::DimensionMismatch {
            expected: f.n,
            got: grid.nvars(),
        });
    }
    // the product only needs one compactly supported factor
    match (f.check_support(grid), h.check_support(grid)) {
        (Ok(()), _) | (_, Ok(())) => {}
        (Err(e), _) => return Err(e),
    }
    let keys: Vec<Vec<usize>> = f
        .components
        .keys()
        .filter(|k| h.components.contains_key(*k))
        .cloned()
        .collect();
    if keys.is_empty() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let cf = Compiled::new(
        f.window.clone(),
        keys.iter().map(|k| f.components[k].clone()).collect(),
    );
    let ch = Compiled::new(
        h.window.clone(),
        keys.iter().map(|k| h.components[k].clone()).collect(),
    );
    let [re, im] = grid.integrate(|p| {
        let Some(a) = cf.eval(p) else { return [0.0; 2] };
        let Some(b) = ch.eval(p) else { return [0.0; 2] };
        let s: Complex64 = a
            .iter()
            .zip(&b)
            .map(|(x, y)| x * y.conj())
            .sum::<Complex64>()
            * w.density(p);
        [s.re, s.im]
    });
    Ok(Complex64::new(re, im))
}

/// Real part of [`weighted_pairing`]; for `h = f` this is `|f|_t^2`.
pub fn weighted_inner(
    f: &FormField,
    h: &FormField,
    w: &WeightConfig,
    grid: &QuadratureGrid,
) -> Result<f64, MkhError> {
    weighted_pairing(f, h, w, grid).map(|c| c.re)
}

/// All terms of the identity at one resolution.
#[derive(Debug, Clone, Serialize)]
pub struct MkhTerms {
    pub t: f64,
    pub points_per_axis: usize,
    pub norm_f: f64,
    pub dbar: f64,
    pub dbar_star: f64,
    pub bar_gradient: f64,
    /// `t int i ddbar phi (f, f) e^{-t phi}`.
    pub hessian: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

pub fn mkh_terms(
    f: &FormField,
    w: &WeightConfig,
    grid: &QuadratureGrid,
) -> Result<MkhTerms, MkhError> {
    if grid.nvars() != f.n || w.nvars() != f.n {
        return Err(MkhError::DimensionMismatch {
            expected: f.n,
            got: grid.nvars(),
        });
    }
    f.check_support(grid)?;
    let df = dbar(f);
    let ds = if f.q == 0 {
        FormField::zero(f.n, 0, f.window.clone())
    } else {
        dbar_star_t(f, w)?
    };
    let grad = bar_gradient(f);
    let keys: Vec<Vec<usize>> = f.components.keys().cloned().collect();
    let (n_f, n_d, n_s) = (keys.len(), df.components.len(), ds.components.len());
    let mut polys: Vec<Poly> = f.components.values().cloned().collect();
    polys.extend(df.components.values().cloned());
    polys.extend(ds.components.values().cloned());
    polys.extend(grad.iter().map(|(_, p)| p.clone()));
    let compiled = Compiled::new(f.window.clone(), polys);
    // f_{kJ} lookups for the Hessian action with identity matrix
    let mut pairs: Vec<usize> = Vec::new();
    if f.q > 0 {
        for jset in increasing_multi_indices(f.n, f.q - 1) {
            for k in 0..f.n {
                if let Some((_, key)) = prepend_index(k, &jset) {
                    if let Some(i) = keys.iter().position(|x| *x == key) {
                        pairs.push(i);
                    }
                }
            }
        }
    }
    let sq = |v: &[Complex64]| v.iter().map(|c| c.norm_sqr()).sum::<f64>();
    let [norm_f, d, s, g, h] = grid.integrate(|p| {
        let Some(v) = compiled.eval(p) else {
            return [0.0; 5];
        };
        let rho = w.density(p);
        let hess: f64 = pairs.iter().map(|&i| v[i].norm_sqr()).sum();
        [
            sq(&v[..n_f]) * rho,
            sq(&v[n_f..n_f + n_d]) * rho,
            sq(&v[n_f + n_d..n_f + n_d + n_s]) * rho,
            sq(&v[n_f + n_d + n_s..]) * rho,
            hess * rho,
        ]
    });
    let hessian = w.t * h;
    let lhs = d + s;
    let rhs = g + hessian;
    let residual = (lhs - rhs).abs() / lhs.max(rhs).max(1e-300);
    Ok(MkhTerms {
        t: w.t,
        points_per_axis: grid.points,
        norm_f,
        dbar: d,
        dbar_star: s,
        bar_gradient: g,
        hessian,
        lhs,
        rhs,
        residual,
    })
}

/// `|LHS - RHS| / max(LHS, RHS)`; zero for the zero form.
pub fn mkh_residual(
    f: &FormField,
    w: &WeightConfig,
    grid: &QuadratureGrid,
) -> Result<f64, MkhError> {
    mkh_terms(f, w, grid).map(|t| t.residual)
}

/// Terms at `grid` and `refinements` successive doublings of it.
pub fn mkh_convergence(
    f: &FormField,
    w: &WeightConfig,
    grid: &QuadratureGrid,
    refinements: usize,
) -> Result<Vec<MkhTerms>, MkhError> {
    let mut g = grid.clone();
    let mut out = Vec::with_capacity(refinements + 1);
    for i in 0..=refinements {
        if i > 0 {
            g = g.refine();
        }
        out.push(mkh_terms(f, w, &g)?);
    }
    Ok(out)
}
