//! Explicit Υ fields and their pointwise verification.
//!
//! A field is given in a frame of the tangent space (the pivot frame of
//! [`crate::geometry::tangential_basis`], optionally with a forced pivot and
//! rescaled columns) as the matrix `Y[(k, j)] = b^{kbar j}`. It is a sum of
//! terms, since the expression grammar has no division and several useful
//! fields involve the inverse Gram matrix of the frame.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{CertifyError, UPSILON_TOL};
use crate::domains::DomainSpec;
use crate::expr::{parse_expr, wirtinger_jet2, DefiningExpr};
use crate::geometry::{
    eigen_ascending, form_action_matrix, frame_from_jet, hermitian_defect, levi_in_frame,
    metric_at, LeviData,
};

pub const UPSILON_BUILTINS: [&str; 2] = ["prop51-upsilon", "prop52-L1"];

/// Frame in which a field is expressed.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSpec {
    pub tag: String,
    /// Forced pivot (0-based); `None` picks the largest `|d rho / dz_j|`.
    pub pivot: Option<usize>,
    /// Column scale factors applied to the pivot frame.
    pub scales: Option<Vec<f64>>,
}

impl FrameSpec {
    pub fn pivot() -> Self {
        Self {
            tag: "pivot".into(),
            pivot: None,
            scales: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum UpsilonTerm {
    /// `c G^-1`, i.e. `c` times the identity tensor.
    InverseGram(f64),
    /// `c / G[(j, j)]` at position `(j, j)`.
    ReciprocalGramDiagonal { index: usize, coeff: f64 },
    /// Entries `re + i im` given as expressions in `z`.
    Matrix(Vec<Vec<(DefiningExpr, DefiningExpr)>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpsilonField {
    pub name: String,
    /// `n - 1`.
    pub dim: usize,
    pub frame: FrameSpec,
    pub terms: Vec<UpsilonTerm>,
}

impl UpsilonField {
    fn check_dims(&self, n: usize) -> Result<(), CertifyError> {
        let mismatch = |m: String| Err(CertifyError::FrameMismatch(m));
        if self.dim + 1 != n {
            return mismatch(format!(
                "field `{}` has rank {}, domain needs {}",
                self.name,
                self.dim,
                n - 1
            ));
        }
        if let Some(p) = self.frame.pivot {
            if p >= n {
                return mismatch(format!("pivot z{} out of range", p + 1));
            }
        }
        if let Some(s) = &self.frame.scales {
            if s.len() != self.dim {
                return mismatch(format!("{} frame scales for rank {}", s.len(), self.dim));
            }
        }
        for t in &self.terms {
            match t {
                UpsilonTerm::InverseGram(_) => {}
                UpsilonTerm::ReciprocalGramDiagonal { index, .. } => {
                    if *index >= self.dim {
                        return mismatch(format!("diagonal index {} out of range", index));
                    }
                }
                UpsilonTerm::Matrix(rows) => {
                    if rows.len() != self.dim || rows.iter().any(|r| r.len() != self.dim) {
                        return mismatch(format!("entry matrix must be {0}x{0}", self.dim));
                    }
                    if rows
                        .iter()
                        .flatten()
                        .any(|(a, b)| a.nvars() != n || b.nvars() != n)
                    {
                        return mismatch(
                            "entry expressions use a different number of variables".into(),
                        );
                    }
                }
            }
        }
        Ok(())
    }

    /// `Y` in the field's frame, given the Gram matrix of that frame.
    pub fn eval(
        &self,
        gram: &DMatrix<Complex64>,
        p: &[Complex64],
    ) -> Result<DMatrix<Complex64>, CertifyError> {
        let m = self.dim;
        let mut y = DMatrix::from_element(m, m, Complex64::new(0.0, 0.0));
        for t in &self.terms {
            match t {
                UpsilonTerm::InverseGram(c) => {
                    let inv = gram.clone().try_inverse().ok_or_else(|| {
                        CertifyError::FrameMismatch("singular Gram matrix".into())
                    })?;
                    y += inv * Complex64::new(*c, 0.0);
                }
                UpsilonTerm::ReciprocalGramDiagonal { index, coeff } => {
                    y[(*index, *index)] += Complex64::new(coeff / gram[(*index, *index)].re, 0.0);
                }
                UpsilonTerm::Matrix(rows) => {
                    for (k, row) in rows.iter().enumerate() {
                        for (j, (re, im)) in row.iter().enumerate() {
                            y[(k, j)] += Complex64::new(re.eval_real(p)?, im.eval_real(p)?);
                        }
                    }
                }
            }
        }
        let defect = hermitian_defect(&y);
        if defect > UPSILON_TOL {
            return Err(CertifyError::NotHermitian { defect });
        }
        Ok(DMatrix::from_fn(m, m, |j, k| {
            0.5 * (y[(j, k)] + y[(k, j)].conj())
        }))
    }
}

/// On-disk Υ field: `b^{kbar j} = inverse_gram * g^{kbar j} + entries[k][j]`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct UpsilonFile {
    #[serde(default)]
    pub name: Option<String>,
    /// 1-based pivot coordinate of the frame.
    #[serde(default)]
    pub pivot: Option<usize>,
    #[serde(default)]
    pub scales: Option<Vec<f64>>,
    #[serde(default)]
    pub inverse_gram: Option<f64>,
    /// `(n-1) x (n-1)` pairs of expressions `[re, im]`.
    #[serde(default)]
    pub entries: Option<Vec<Vec<[String; 2]>>>,
}

impl UpsilonFile {
    pub fn into_field(self, n: usize) -> Result<UpsilonField, CertifyError> {
        let pivot = match self.pivot {
            Some(0) => return Err(CertifyError::FrameMismatch("pivot is 1-based".into())),
            Some(p) => Some(p - 1),
            None => None,
        };
        let mut terms = Vec::new();
        if let Some(c) = self.inverse_gram {
            terms.push(UpsilonTerm::InverseGram(c));
        }
        if let Some(rows) = self.entries {
            let parsed = rows
                .iter()
                .map(|r| {
                    r.iter()
                        .map(|[a, b]| Ok((parse_expr(a, n)?, parse_expr(b, n)?)))
                        .collect()
                })
                .collect::<Result<Vec<Vec<_>>, CertifyError>>()?;
            terms.push(UpsilonTerm::Matrix(parsed));
        }
        let tag = if self.scales.is_some() || pivot.is_some() {
            "custom"
        } else {
            "pivot"
        };
        let field = UpsilonField {
            name: self.name.unwrap_or_else(|| "file".into()),
            dim: n - 1,
            frame: FrameSpec {
                tag: tag.into(),
                pivot,
                scales: self.scales,
            },
            terms,
        };
        field.check_dims(n)?;
        Ok(field)
    }
}

/// Registered fields: `prop51-upsilon(t)` and `prop52-L1(t)`.
///
/// A missing `t` is read from the domain tags (`prop52-L1` uses the metric
/// parameter of the domain), falling back to 0.1 for `prop51-upsilon`.
pub fn builtin_upsilon(spec: &str, dom: &DomainSpec) -> Result<UpsilonField, CertifyError> {
    let spec = spec.trim();
    let (name, arg) = match spec.find('(') {
        Some(i) if spec.ends_with(')') => (&spec[..i], Some(&spec[i + 1..spec.len() - 1])),
        Some(_) => return Err(CertifyError::UnknownUpsilon(spec.into())),
        None => (spec, None),
    };
    let arg = match arg {
        Some(a) => Some(
            a.trim()
                .parse::<f64>()
                .map_err(|_| CertifyError::UnknownUpsilon(spec.into()))?,
        ),
        None => None,
    };
    let tag_t = dom.tags.get("t").and_then(|v| v.parse::<f64>().ok());
    let field = match name {
        "prop51-upsilon" => {
            let t = arg.unwrap_or(0.1);
            let n = 3;
            let zero = DefiningExpr::constant(0.0, n);
            let y2 = DefiningExpr::var(0, n).im().pow(2).scale(-3.0 * t);
            UpsilonField {
                name: format!("prop51-upsilon({:?})", t),
                dim: 2,
                frame: FrameSpec {
                    tag: "graph-z3".into(),
                    pivot: Some(2),
                    scales: None,
                },
                terms: vec![
                    UpsilonTerm::InverseGram(1.0),
                    UpsilonTerm::Matrix(vec![
                        vec![
                            (DefiningExpr::constant(-2.0 * t, n), zero.clone()),
                            (zero.clone(), zero.clone()),
                        ],
                        vec![(zero.clone(), zero.clone()), (y2, zero)],
                    ]),
                ],
            }
        }
        "prop52-L1" => {
            let t = arg.or(tag_t).unwrap_or(6.0);
            if !(t > 0.0) {
                return Err(CertifyError::UnknownUpsilon(format!(
                    "{} (t must be positive)",
                    spec
                )));
            }
            UpsilonField {
                name: format!("prop52-L1({:?})", t),
                dim: 3,
                frame: FrameSpec {
                    tag: "graph-z4-scaled".into(),
                    pivot: Some(3),
                    scales: Some(vec![1.0 / t.sqrt(), 1.0, 1.0]),
                },
                terms: vec![UpsilonTerm::ReciprocalGramDiagonal {
                    index: 0,
                    coeff: 1.0,
                }],
            }
        }
        _ => return Err(CertifyError::UnknownUpsilon(spec.into())),
    };
    field.check_dims(dom.n)?;
    Ok(field)
}

/// Everything computed when checking a Υ field at one boundary point.
#[derive(Debug, Clone, Serialize)]
pub struct UpsilonCheck {
    #[serde(skip)]
    pub point: Vec<Complex64>,
    pub mu: Vec<f64>,
    /// Eigenvalues of Υ in an orthonormal frame.
    pub upsilon_eigs: Vec<f64>,
    /// `omega(Υ)`.
    pub trace: f64,
    /// `L(Υ)`.
    pub levi_of_upsilon: f64,
    /// `mu_1 + ... + mu_q - L(Υ)`.
    pub slack: f64,
    /// Smallest eigenvalue of `(Tr L - L(Υ)) Id - L` acting on `(0, n-1-q)`-forms.
    pub form_min: f64,
    /// `((Tr L - L(Υ)) omega - i ddbar rho)(i conj(L_j) ^ L_j)` for each frame vector.
    pub direction_values: Vec<f64>,
    pub condition1: bool,
    pub condition2: bool,
}

/// Levi data in the frame declared by `ups`.
pub(crate) fn levi_for_field(
    dom: &DomainSpec,
    ups: &UpsilonField,
    p: &[Complex64],
    normalize: bool,
) -> Result<LeviData, CertifyError> {
    let jet = wirtinger_jet2(&dom.rho, p)?;
    let metric = metric_at(&dom.phi, p)?;
    let mut frame = frame_from_jet(&jet, p, ups.frame.pivot)?;
    if let Some(s) = &ups.frame.scales {
        frame.scale_columns(s);
    }
    Ok(levi_in_frame(&jet.dzdzbar, metric, frame, normalize)?)
}

pub fn check_upsilon_at(
    dom: &DomainSpec,
    ups: &UpsilonField,
    q: usize,
    p: &[Complex64],
    normalize: bool,
    tol: f64,
) -> Result<UpsilonCheck, CertifyError> {
    ups.check_dims(dom.n)?;
    if q > ups.dim {
        return Err(CertifyError::InvalidQ { q, n: dom.n });
    }
    let levi = levi_for_field(dom, ups, p, normalize)?;
    let y = ups.eval(&levi.g_restricted, p)?;
    let yu = levi.upsilon_to_orthonormal(&y);
    let (upsilon_eigs, _) = eigen_ascending(&yu)?;
    let trace = yu.trace().re;
    let levi_of_upsilon = (&yu * &levi.c_on).trace().re;
    let slack = levi.mu_prefix(q) - levi_of_upsilon;
    let tr_l: f64 = levi.mu.iter().sum();
    let gap = tr_l - levi_of_upsilon;
    let k = ups.dim - q;
    let action = form_action_matrix(&levi.c_on, k);
    let op = DMatrix::<Complex64>::identity(action.nrows(), action.ncols())
        * Complex64::new(gap, 0.0)
        - action;
    let (op_eigs, _) = eigen_ascending(&op)?;
    let form_min = op_eigs.first().copied().unwrap_or(gap);
    let scale = levi.scale();
    let direction_values = (0..ups.dim)
        .map(|j| gap * levi.g_restricted[(j, j)].re - scale * levi.c_raw[(j, j)].re)
        .collect();
    let condition1 = upsilon_eigs.iter().all(|&e| e >= -tol && e <= 1.0 + tol);
    let condition2 = slack >= -tol && form_min >= -tol;
    Ok(UpsilonCheck {
        point: p.to_vec(),
        mu: levi.mu.clone(),
        upsilon_eigs,
        trace,
        levi_of_upsilon,
        slack,
        form_min,
        direction_values,
        condition1,
        condition2,
    })
}
