//! Metric, tangential frames and the Levi form at boundary points.
//!
//! Conventions: a Hermitian matrix `C` in a frame `L_1..L_m` has entries
//! `C[(j, k)] = H(L_j, conj L_k)` where `H` is a complex Hessian, so the form
//! evaluated on `X = sum a_j L_j` is `v* C v` with `v = conj(a)`. Orthonormal
//! frames are obtained from the Cholesky factor `S` of the Gram matrix
//! `G = S S*`; in them the Levi matrix is `S^-1 C S^-*`.

mod eigen;
pub mod forms;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::expr::{wirtinger_jet2, DefiningExpr, ExprError, Jet2};

pub use eigen::{eigen_ascending, hermitian_defect};
pub use forms::{form_action, form_action_matrix, increasing_multi_indices, FormCoeffs};

/// Minimum `|d rho|` for a boundary point to be considered nondegenerate.
pub const DEGENERATE_GRADIENT: f64 = 1e-8;
/// Default `|rho(p)|` tolerance for points declared to lie on the boundary.
pub const BOUNDARY_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("metric is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },
    #[error("degenerate boundary point: |d rho| = {grad_norm:e}")]
    DegenerateBoundaryPoint { grad_norm: f64 },
    #[error("point is not on the boundary: |rho| = {residual:e}")]
    NotOnBoundary { residual: f64 },
    #[error("matrix is not Hermitian (defect {defect:e})")]
    NotHermitian { defect: f64 },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("multi-index {index:?} is not a strictly increasing {q}-index over {dim} directions")]
    IndexMismatch {
        q: usize,
        dim: usize,
        index: Vec<usize>,
    },
    #[error("pivot {pivot} cannot be eliminated: d rho / dz_pivot = {value:e}")]
    BadPivot { pivot: usize, value: f64 },
}

/// Kahler metric `g_{j kbar} = d^2 phi / dz_j dzbar_k` at a point.
#[derive(Debug, Clone)]
pub struct MetricData {
    pub g: DMatrix<Complex64>,
    pub ginv: DMatrix<Complex64>,
    /// Lower-triangular `S` with `g = S S*`.
    pub chol: DMatrix<Complex64>,
}

impl MetricData {
    pub fn from_hessian(g: DMatrix<Complex64>) -> Result<Self, GeometryError> {
        let defect = hermitian_defect(&g);
        if defect > 1e-12 {
            return Err(GeometryError::NotHermitian { defect });
        }
        let (mu, _) = eigen_ascending(&g)?;
        let min_eigenvalue = mu.first().copied().unwrap_or(0.0);
        if min_eigenvalue <= 0.0 {
            return Err(GeometryError::NotPositiveDefinite { min_eigenvalue });
        }
        let chol = nalgebra::Cholesky::new(g.clone())
            .ok_or(GeometryError::NotPositiveDefinite { min_eigenvalue })?;
        let ginv = chol.inverse();
        Ok(Self {
            g,
            ginv,
            chol: chol.unpack(),
        })
    }

    /// `<a, b>_g = sum g_{j kbar} a_j conj(b_k)` for (1,0)-vectors.
    pub fn inner(&self, a: &DVector<Complex64>, b: &DVector<Complex64>) -> Complex64 {
        (a.transpose() * &self.g * b.map(|x| x.conj()))[(0, 0)]
    }

    /// Pointwise norm of the (1,0)-form `sum a_j dz_j`.
    pub fn covector_norm(&self, a: &DVector<Complex64>) -> f64 {
        (a.adjoint() * &self.ginv * a)[(0, 0)].re.max(0.0).sqrt()
    }
}

/// A basis of `T^{1,0}` of the level set through `basepoint`.
#[derive(Debug, Clone)]
pub struct FrameData {
    pub basepoint: Vec<Complex64>,
    /// Coefficients `d rho / dz_j`.
    pub dbar_rho: DVector<Complex64>,
    /// `n x (n-1)` matrix; column `c` holds the `dz` components of `L_c`.
    pub l: DMatrix<Complex64>,
    /// 0-based index of the eliminated coordinate.
    pub pivot: usize,
}

impl FrameData {
    /// Multiply column `j` by `scale[j]`.
    pub fn scale_columns(&mut self, scale: &[f64]) {
        assert_eq!(scale.len(), self.l.ncols());
        for (j, s) in scale.iter().enumerate() {
            let mut col = self.l.column_mut(j);
            col *= Complex64::new(*s, 0.0);
        }
    }

    /// `max_j |d rho(L_j)|`.
    pub fn tangency_defect(&self) -> f64 {
        (0..self.l.ncols())
            .map(|j| {
                self.l
                    .column(j)
                    .iter()
                    .zip(self.dbar_rho.iter())
                    .map(|(a, b)| a * b)
                    .sum::<Complex64>()
                    .norm()
            })
            .fold(0.0, f64::max)
    }

    /// Matrix `C[(j, k)] = H(L_j, conj L_k)` of a complex Hessian in this frame.
    pub fn restrict(&self, h: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let m = self.l.ncols();
        let lbar = self.l.map(|x| x.conj());
        let c = self.l.transpose() * h * lbar;
        // exact Hermitian symmetrization of the rounding
        DMatrix::from_fn(m, m, |j, k| 0.5 * (c[(j, k)] + c[(k, j)].conj()))
    }
}

/// Levi form data at a boundary point.
#[derive(Debug, Clone)]
pub struct LeviData {
    pub frame: FrameData,
    pub metric: MetricData,
    pub c_raw: DMatrix<Complex64>,
    pub g_restricted: DMatrix<Complex64>,
    /// Cholesky factor of `g_restricted`.
    pub s: DMatrix<Complex64>,
    pub c_on: DMatrix<Complex64>,
    pub mu: Vec<f64>,
    pub eigvecs: DMatrix<Complex64>,
    /// `|d rho|_g` (the norm of the (1,0)-part).
    pub drho_norm: f64,
    pub normalized: bool,
}

impl LeviData {
    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// Factor applied to raw quantities to obtain `c_on` (1 or `1/|d rho|_g`).
    pub fn scale(&self) -> f64 {
        if self.normalized {
            1.0 / self.drho_norm
        } else {
            1.0
        }
    }

    /// Sum of the `q` smallest eigenvalues.
    pub fn mu_prefix(&self, q: usize) -> f64 {
        self.mu.iter().take(q).sum()
    }

    /// Express a Hermitian (1,1)-vector `Y[(k, j)] = b^{kbar j}` given in the
    /// frame `L` in the `g`-orthonormal frame: `S* Y S`.
    pub fn upsilon_to_orthonormal(&self, y: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        self.s.adjoint() * y * &self.s
    }
}

pub fn metric_at(phi: &DefiningExpr, p: &[Complex64]) -> Result<MetricData, GeometryError> {
    let jet = wirtinger_jet2(phi, p)?;
    MetricData::from_hessian(jet.dzdzbar)
}

/// Pivot-elimination frame `L_j = e_j - (rho_j / rho_pivot) e_pivot` with the
/// pivot chosen where `|d rho / dz_j|` is largest.
pub fn tangential_basis(rho: &DefiningExpr, p: &[Complex64]) -> Result<FrameData, GeometryError> {
    let jet = wirtinger_jet2(rho, p)?;
    frame_from_jet(&jet, p, None)
}

/// As [`tangential_basis`] with a forced pivot.
pub fn tangential_basis_with_pivot(
    rho: &DefiningExpr,
    p: &[Complex64],
    pivot: usize,
) -> Result<FrameData, GeometryError> {
    let jet = wirtinger_jet2(rho, p)?;
    frame_from_jet(&jet, p, Some(pivot))
}

pub(crate) fn frame_from_jet(
    jet: &Jet2,
    p: &[Complex64],
    pivot: Option<usize>,
) -> Result<FrameData, GeometryError> {
    let n = jet.nvars();
    let grad_norm = jet.dz.norm();
    if grad_norm <= DEGENERATE_GRADIENT {
        return Err(GeometryError::DegenerateBoundaryPoint { grad_norm });
    }
    let pivot = match pivot {
        Some(k) => {
            if k >= n {
                return Err(GeometryError::DimensionMismatch {
                    expected: n,
                    got: k + 1,
                });
            }
            if jet.dz[k].norm() <= DEGENERATE_GRADIENT {
                return Err(GeometryError::BadPivot {
                    pivot: k,
                    value: jet.dz[k].norm(),
                });
            }
            k
        }
        None => (0..n)
            .max_by(|&a, &b| jet.dz[a].norm().total_cmp(&jet.dz[b].norm()))
            .expect("n >= 1"),
    };
    let mut l = DMatrix::from_element(n, n - 1, Complex64::new(0.0, 0.0));
    let rp = jet.dz[pivot];
    for (col, j) in (0..n).filter(|&j| j != pivot).enumerate() {
        l[(j, col)] = Complex64::new(1.0, 0.0);
        l[(pivot, col)] = -jet.dz[j] / rp;
    }
    Ok(FrameData {
        basepoint: p.to_vec(),
        dbar_rho: jet.dz.clone(),
        l,
        pivot,
    })
}

/// Options for [`levi_form_with`].
#[derive(Debug, Clone, Copy)]
pub struct LeviOptions {
    pub normalize: bool,
    /// Reject points with `|rho(p)|` above this; `None` skips the check.
    pub boundary_tol: Option<f64>,
    pub pivot: Option<usize>,
}

impl Default for LeviOptions {
    fn default() -> Self {
        Self {
            normalize: true,
            boundary_tol: Some(BOUNDARY_TOL),
            pivot: None,
        }
    }
}

pub fn levi_form_at(
    rho: &DefiningExpr,
    phi: &DefiningExpr,
    p: &[Complex64],
    normalize: bool,
) -> Result<LeviData, GeometryError> {
    levi_form_with(
        rho,
        phi,
        p,
        &LeviOptions {
            normalize,
            ..LeviOptions::default()
        },
    )
}

pub fn levi_form_with(
    rho: &DefiningExpr,
    phi: &DefiningExpr,
    p: &[Complex64],
    opts: &LeviOptions,
) -> Result<LeviData, GeometryError> {
    let jet = wirtinger_jet2(rho, p)?;
    if let Some(tol) = opts.boundary_tol {
        let residual = jet.value.norm();
        if residual > tol {
            return Err(GeometryError::NotOnBoundary { residual });
        }
    }
    let metric = metric_at(phi, p)?;
    let frame = frame_from_jet(&jet, p, opts.pivot)?;
    levi_in_frame(&jet.dzdzbar, metric, frame, opts.normalize)
}

/// Levi data for a given frame and the complex Hessian `hess` of `rho`.
pub fn levi_in_frame(
    hess: &DMatrix<Complex64>,
    metric: MetricData,
    frame: FrameData,
    normalize: bool,
) -> Result<LeviData, GeometryError> {
    let c_raw = frame.restrict(hess);
    let g_restricted = frame.restrict(&metric.g);
    let chol = nalgebra::Cholesky::new(g_restricted.clone()).ok_or(
        GeometryError::NotPositiveDefinite {
            min_eigenvalue: f64::NAN,
        },
    )?;
    let s = chol.unpack();
    let sinv = s
        .clone()
        .solve_lower_triangular(&DMatrix::identity(s.nrows(), s.ncols()))
        .ok_or(GeometryError::NotPositiveDefinite {
            min_eigenvalue: 0.0,
        })?;
    let drho_norm = metric.covector_norm(&frame.dbar_rho);
    let mut c_on = &sinv * &c_raw * sinv.adjoint();
    if normalize {
        c_on /= Complex64::new(drho_norm, 0.0);
    }
    let m = c_on.nrows();
    let c_on = DMatrix::from_fn(m, m, |j, k| 0.5 * (c_on[(j, k)] + c_on[(k, j)].conj()));
    let (mu, eigvecs) = eigen_ascending(&c_on)?;
    Ok(LeviData {
        frame,
        metric,
        c_raw,
        g_restricted,
        s,
        c_on,
        mu,
        eigvecs,
        drho_norm,
        normalized: normalize,
    })
}
