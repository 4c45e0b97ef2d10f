//! Domain definitions: builtin examples, smooth-max gluing and boundary sampling.

mod builtin;
pub mod psi;
mod sample;

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certify::Branch;
use crate::expr::{parse_expr, DefiningExpr, ExprError};
use crate::geometry::{metric_at, GeometryError};

pub use builtin::{builtin, Builtin, BuiltinParams, BUILTIN_NAMES};
pub use psi::{psi_eval, smooth_max, PsiValue, SmoothMaxConfig, C3_COEFFS};
pub use sample::{newton_project, sample_boundary, sample_region, SampleOutcome, SampleRegion};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("unknown builtin domain `{0}`")]
    UnknownBuiltin(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("no component {index} (domain has {count})")]
    NoSuchComponent { index: usize, count: usize },
    #[error("sampling failed: {found} of {requested} points after {attempts} attempts")]
    SamplingFailure {
        requested: usize,
        found: usize,
        attempts: usize,
    },
    #[error("phi is not strictly plurisubharmonic at a spot-check point: {0}")]
    NotPlurisubharmonic(String),
}

/// A declared boundary component.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSpec {
    pub label: String,
    /// A point on (or near) the component; sampling draws around it.
    pub seed: Vec<Complex64>,
    pub orientation_hint: Option<Branch>,
    /// Radius of the ambient draw region around `seed`.
    pub spread: f64,
}

#[derive(Debug, Clone)]
pub struct DomainSpec {
    pub name: String,
    pub n: usize,
    pub rho: DefiningExpr,
    pub phi: DefiningExpr,
    pub components: Vec<ComponentSpec>,
    /// Half-widths of the ambient box `prod [-b_j, b_j]` over the `2n` real coordinates.
    pub sample_box: Vec<f64>,
    /// `Some(k)` when `rho = -Im z_k + P(other coordinates)`.
    pub graph_axis: Option<usize>,
    pub tags: BTreeMap<String, String>,
}

impl DomainSpec {
    /// Spot-check that `rho`, `phi` are real and `phi` is strictly
    /// plurisubharmonic at `count` random points of the sample box.
    pub fn validate(&self, count: usize, seed: u64) -> Result<(), DomainError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..count {
            let p: Vec<Complex64> = (0..self.n)
                .map(|j| {
                    let bx = self.sample_box[2 * j];
                    let by = self.sample_box[2 * j + 1];
                    Complex64::new(rng.gen_range(-bx..=bx), rng.gen_range(-by..=by))
                })
                .collect();
            self.rho.eval_real(&p)?;
            self.phi.eval_real(&p)?;
            metric_at(&self.phi, &p)
                .map_err(|e| DomainError::NotPlurisubharmonic(e.to_string()))?;
        }
        Ok(())
    }

    /// Copy with `rho` replaced by `h * rho`.
    pub fn with_rho(&self, rho: DefiningExpr) -> Self {
        let mut out = self.clone();
        out.rho = rho;
        out.graph_axis = None;
        out
    }

    pub fn component(&self, index: usize) -> Result<&ComponentSpec, DomainError> {
        self.components
            .get(index)
            .ok_or(DomainError::NoSuchComponent {
                index,
                count: self.components.len(),
            })
    }
}

/// On-disk domain definition.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DomainFile {
    pub n: usize,
    pub rho: String,
    pub phi: String,
    pub components: Vec<ComponentFile>,
    /// `2n` half-widths of the ambient sampling box.
    #[serde(rename = "box")]
    pub sample_box: Vec<f64>,
    #[serde(default)]
    pub graph_axis: Option<usize>,
    #[serde(default)]
    pub name: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ComponentFile {
    pub label: String,
    /// `2n` reals `(re z1, im z1, ..., re zn, im zn)`.
    pub seed: Vec<f64>,
    #[serde(default)]
    pub orientation_hint: Option<i8>,
    #[serde(default)]
    pub spread: Option<f64>,
}

pub const DEFAULT_SPREAD: f64 = 0.25;

impl DomainFile {
    pub fn into_domain(self) -> Result<DomainSpec, DomainError> {
        let n = self.n;
        if n < 2 {
            return Err(DomainError::InvalidParams(format!(
                "n must be at least 2, got {}",
                n
            )));
        }
        let rho = parse_expr(&self.rho, n)?;
        let phi = parse_expr(&self.phi, n)?;
        if self.sample_box.len() != 2 * n {
            return Err(DomainError::InvalidParams(format!(
                "box needs {} reals, got {}",
                2 * n,
                self.sample_box.len()
            )));
        }
        if let Some(k) = self.graph_axis {
            if k >= n {
                return Err(DomainError::InvalidParams(format!(
                    "graph_axis {} out of range",
                    k
                )));
            }
        }
        let components = self
            .components
            .into_iter()
            .map(|c| {
                if c.seed.len() != 2 * n {
                    return Err(DomainError::InvalidParams(format!(
                        "component `{}` seed needs {} reals, got {}",
                        c.label,
                        2 * n,
                        c.seed.len()
                    )));
                }
                let orientation_hint = match c.orientation_hint {
                    None | Some(0) => None,
                    Some(s) if s > 0 => Some(Branch::Plus),
                    Some(_) => Some(Branch::Minus),
                };
                Ok(ComponentSpec {
                    label: c.label,
                    seed: c
                        .seed
                        .chunks(2)
                        .map(|w| Complex64::new(w[0], w[1]))
                        .collect(),
                    orientation_hint,
                    spread: c.spread.unwrap_or(DEFAULT_SPREAD),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(DomainSpec {
            name: self.name.unwrap_or_else(|| "file".to_string()),
            n,
            rho,
            phi,
            components,
            sample_box: self.sample_box,
            graph_axis: self.graph_axis,
            tags: BTreeMap::new(),
        })
    }
}
