//! Pointwise weak Z(q) certificates, explicit Υ-field verification and
//! per-component certification reports.
//!
//! All certificates are diagonal in the Levi eigenframe: `lambda[j]` is the
//! weight of the `j`-th smallest eigenvalue. Conditions:
//!
//! 1. `0 <= lambda_j <= 1`
//! 2. `mu_1 + ... + mu_q - sum lambda_j mu_j >= 0`
//! 3. `sum lambda_j != q`, with the side recorded as the branch.

mod lp;
mod report;
mod upsilon;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::domains::DomainError;
use crate::expr::ExprError;
use crate::geometry::GeometryError;

pub use lp::{
    binary_weak_zq, duality_transform, lp_dual_trace, lp_optimal_trace, weak_zq_lp, LP_ABSENT_TOL,
};
pub use report::{
    certify_domain, certify_weak_yq, certify_with_upsilon, verify_upsilon_field,
    CertificationReport, CertifyConfig, ComponentReport, FailureWitness, RegionOverride, Verdict,
    DEGENERATE_FRACTION, MAX_WITNESSES,
};
pub use upsilon::{
    builtin_upsilon, check_upsilon_at, FrameSpec, UpsilonCheck, UpsilonField, UpsilonFile,
    UpsilonTerm, UPSILON_BUILTINS,
};

/// Tolerance used when counting strictly positive / negative eigenvalues.
pub const COUNT_TOL: f64 = 1e-10;
/// Default minimal margin `|trace - q|`.
pub const DEFAULT_DELTA_MIN: f64 = 1e-6;
/// Default tolerance on condition (2).
pub const DEFAULT_SLACK_TOL: f64 = 1e-10;
/// Tolerance of the Υ-field checks (Hermitian defect, eigenvalue bounds, slack).
pub const UPSILON_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertifyError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("Υ field does not fit the domain frame: {0}")]
    FrameMismatch(String),
    #[error("invalid certificate: {0}")]
    InvalidCertificate(String),
    #[error("q = {q} is out of range for n = {n}")]
    InvalidQ { q: usize, n: usize },
    #[error("unknown Υ field `{0}`")]
    UnknownUpsilon(String),
    #[error("Υ matrix is not Hermitian (defect {defect:e})")]
    NotHermitian { defect: f64 },
}

/// Orientation sign σ: `Plus` when `trace < q`, `Minus` when `trace > q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> i8 {
        match self {
            Branch::Plus => 1,
            Branch::Minus => -1,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Branch::Plus => Branch::Minus,
            Branch::Minus => Branch::Plus,
        }
    }

    pub const BOTH: [Branch; 2] = [Branch::Plus, Branch::Minus];
}

impl Serialize for Branch {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_i8(self.sign())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ZqStatus {
    /// At least `n - q` positive eigenvalues.
    ZqPositive,
    /// At least `q + 1` negative eigenvalues.
    ZqNegative,
    NotZq,
}

/// Classify a Levi spectrum (`mu.len() == n - 1`) against Z(q).
pub fn z_q_status(mu: &[f64], q: usize) -> ZqStatus {
    let n = mu.len() + 1;
    let pos = mu.iter().filter(|&&m| m > COUNT_TOL).count();
    let neg = mu.iter().filter(|&&m| m < -COUNT_TOL).count();
    if q <= n && pos >= n - q {
        ZqStatus::ZqPositive
    } else if neg > q {
        ZqStatus::ZqNegative
    } else {
        ZqStatus::NotZq
    }
}

/// Diagonal weak Z(q) certificate at one point.
///
/// `complement` holds `1 - lambda` as computed when the certificate was built,
/// so that the duality transform is an exact involution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub branch: Branch,
    pub q: usize,
    pub lambda: Vec<f64>,
    #[serde(skip)]
    pub complement: Vec<f64>,
    pub trace: f64,
    #[serde(skip)]
    pub co_trace: f64,
    pub slack: f64,
    pub margin: f64,
}

impl Certificate {
    /// Certificate with explicit weights; `mu` must be ascending.
    ///
    /// No feasibility is required, only `0 <= lambda <= 1` and matching
    /// lengths. The margin is signed: negative when the trace lies on the
    /// wrong side of `q` for `branch`.
    pub fn from_weights(
        branch: Branch,
        q: usize,
        lambda: Vec<f64>,
        mu: &[f64],
    ) -> Result<Self, CertifyError> {
        let complement = lambda.iter().map(|l| 1.0 - l).collect();
        Self::from_parts(branch, q, lambda, complement, mu)
    }

    pub(crate) fn from_parts(
        branch: Branch,
        q: usize,
        lambda: Vec<f64>,
        complement: Vec<f64>,
        mu: &[f64],
    ) -> Result<Self, CertifyError> {
        if lambda.len() != mu.len() || complement.len() != mu.len() {
            return Err(CertifyError::InvalidCertificate(format!(
                "{} weights for {} eigenvalues",
                lambda.len(),
                mu.len()
            )));
        }
        if q > mu.len() {
            return Err(CertifyError::InvalidQ { q, n: mu.len() + 1 });
        }
        if let Some(l) = lambda.iter().find(|l| !(0.0..=1.0).contains(*l)) {
            return Err(CertifyError::InvalidCertificate(format!(
                "weight {} outside [0, 1]",
                l
            )));
        }
        let trace: f64 = lambda.iter().sum();
        let co_trace: f64 = complement.iter().sum();
        let slack = certificate_slack(mu, q, &lambda);
        let margin = match branch {
            Branch::Plus => q as f64 - trace,
            Branch::Minus => trace - q as f64,
        };
        Ok(Self {
            branch,
            q,
            lambda,
            complement,
            trace,
            co_trace,
            slack,
            margin,
        })
    }

    /// Condition (2) and the branch condition with the given tolerances.
    pub fn is_valid(&self, slack_tol: f64, delta_min: f64) -> bool {
        self.slack >= -slack_tol && self.margin >= delta_min
    }
}

/// `mu_1 + ... + mu_q - sum lambda_j mu_j`.
pub fn certificate_slack(mu: &[f64], q: usize, lambda: &[f64]) -> f64 {
    let prefix: f64 = mu.iter().take(q).sum();
    let weighted: f64 = lambda.iter().zip(mu).map(|(l, m)| l * m).sum();
    prefix - weighted
}

#[cfg(test)]
mod tests;
