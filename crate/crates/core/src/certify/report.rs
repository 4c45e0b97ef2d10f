use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::upsilon::check_upsilon_at;
use super::{
    weak_zq_lp, Branch, Certificate, CertifyError, UpsilonCheck, UpsilonField, DEFAULT_DELTA_MIN,
    DEFAULT_SLACK_TOL, UPSILON_TOL,
};
use crate::domains::{
    sample_boundary, sample_region, DomainError, DomainSpec, SampleOutcome, SampleRegion,
};
use crate::geometry::{levi_form_at, GeometryError};

/// Fraction of degenerate attempts above which a report is marked degenerate.
pub const DEGENERATE_FRACTION: f64 = 0.01;
pub const MAX_WITNESSES: usize = 100;

/// Draw all components around a common center instead of their seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionOverride {
    pub center: Vec<Complex64>,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertifyConfig {
    pub samples: usize,
    pub seed: u64,
    pub delta_min: f64,
    pub slack_tol: f64,
    pub normalize: bool,
    pub region: Option<RegionOverride>,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            samples: 200,
            seed: 0,
            delta_min: DEFAULT_DELTA_MIN,
            slack_tol: DEFAULT_SLACK_TOL,
            normalize: true,
            region: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum Verdict {
    Certified,
    InfeasibleAtPoints,
    Degenerate,
}

impl Verdict {
    /// Process exit code used by the command line tool.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Certified => 0,
            Verdict::InfeasibleAtPoints => 2,
            Verdict::Degenerate => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureWitness {
    /// `[re, im]` per coordinate.
    pub point: Vec<[f64; 2]>,
    pub condition: String,
    pub value: f64,
    pub mu: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentReport {
    pub label: String,
    /// Chosen σ; absent when no branch works on every sample.
    pub branch: Option<Branch>,
    pub samples: usize,
    pub attempts: usize,
    pub degenerate: usize,
    /// Samples admitting a branch-`+` / branch-`-` certificate with margin at least `delta_min`.
    pub feasible_plus: usize,
    pub feasible_minus: usize,
    pub min_margin: Option<f64>,
    pub min_slack: Option<f64>,
    pub min_trace: Option<f64>,
    pub max_trace: Option<f64>,
    pub failures: Vec<FailureWitness>,
    pub failures_truncated: usize,
}

impl ComponentReport {
    pub fn certified(&self) -> bool {
        self.branch.is_some() && self.failures.is_empty() && self.failures_truncated == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificationReport {
    pub domain: String,
    pub n: usize,
    pub q: usize,
    /// `pointwise-lp` or `upsilon-field:<name>`.
    pub method: String,
    /// What a CERTIFIED verdict means for this method.
    pub scope: String,
    pub normalized: bool,
    pub delta_min: f64,
    pub slack_tol: f64,
    pub components: Vec<ComponentReport>,
    pub degenerate_fraction: f64,
    pub verdict: Verdict,
}

impl CertificationReport {
    fn finish(mut self) -> Self {
        let attempts: usize = self.components.iter().map(|c| c.attempts).sum();
        let degenerate: usize = self.components.iter().map(|c| c.degenerate).sum();
        self.degenerate_fraction = if attempts == 0 {
            0.0
        } else {
            degenerate as f64 / attempts as f64
        };
        self.verdict = if self.degenerate_fraction > DEGENERATE_FRACTION {
            Verdict::Degenerate
        } else if self.components.iter().all(ComponentReport::certified) {
            Verdict::Certified
        } else {
            Verdict::InfeasibleAtPoints
        };
        self
    }
}

fn witness_point(p: &[Complex64]) -> Vec<[f64; 2]> {
    p.iter().map(|z| [z.re, z.im]).collect()
}

fn push_failure(report: &mut ComponentReport, w: FailureWitness) {
    if report.failures.len() < MAX_WITNESSES {
        report.failures.push(w);
    } else {
        report.failures_truncated += 1;
    }
}

fn min_opt(a: Option<f64>, b: f64) -> Option<f64> {
    Some(a.map_or(b, |a| a.min(b)))
}

fn max_opt(a: Option<f64>, b: f64) -> Option<f64> {
    Some(a.map_or(b, |a| a.max(b)))
}

fn sample_component(
    dom: &DomainSpec,
    index: usize,
    cfg: &CertifyConfig,
) -> Result<SampleOutcome, DomainError> {
    match &cfg.region {
        None => sample_boundary(dom, index, cfg.samples, cfg.seed),
        Some(r) => {
            if r.center.len() != dom.n {
                return Err(DomainError::InvalidParams(format!(
                    "region center has {} coordinates, domain has {}",
                    r.center.len(),
                    dom.n
                )));
            }
            let region = SampleRegion {
                center: r.center.clone(),
                spread: r.radius,
                accept_radius: 2.0 * r.radius,
                stream: index as u64,
            };
            sample_region(dom, &region, cfg.samples, cfg.seed)
        }
    }
}

fn check_q(dom: &DomainSpec, q: usize) -> Result<(), CertifyError> {
    if q >= dom.n {
        return Err(CertifyError::InvalidQ { q, n: dom.n });
    }
    Ok(())
}

enum PointEval {
    Degenerate,
    Levi {
        point: Vec<Complex64>,
        mu: Vec<f64>,
        plus: Option<Certificate>,
        minus: Option<Certificate>,
    },
}

fn eval_point(
    dom: &DomainSpec,
    q: usize,
    p: &[Complex64],
    normalize: bool,
) -> Result<PointEval, CertifyError> {
    match levi_form_at(&dom.rho, &dom.phi, p, normalize) {
        Ok(levi) => Ok(PointEval::Levi {
            point: p.to_vec(),
            plus: weak_zq_lp(&levi.mu, q, Branch::Plus),
            minus: weak_zq_lp(&levi.mu, q, Branch::Minus),
            mu: levi.mu,
        }),
        Err(GeometryError::DegenerateBoundaryPoint { .. }) => Ok(PointEval::Degenerate),
        Err(e) => Err(e.into()),
    }
}

/// Pointwise weak Z(q) certification of every declared component.
///
/// A component is certified under σ when each sample admits a diagonal
/// certificate of branch σ with margin at least `delta_min`. When both
/// branches work, the orientation hint decides, then the larger minimal
/// margin, then `+`.
pub fn certify_domain(
    dom: &DomainSpec,
    q: usize,
    cfg: &CertifyConfig,
) -> Result<CertificationReport, CertifyError> {
    check_q(dom, q)?;
    let mut components = Vec::with_capacity(dom.components.len());
    for (index, comp) in dom.components.iter().enumerate() {
        let sample = sample_component(dom, index, cfg)?;
        let evals = sample
            .points
            .par_iter()
            .map(|p| eval_point(dom, q, p, cfg.normalize))
            .collect::<Result<Vec<_>, _>>()?;
        let ok = |c: &Option<Certificate>| {
            c.as_ref()
                .is_some_and(|c| c.is_valid(cfg.slack_tol, cfg.delta_min))
        };
        let mut report = ComponentReport {
            label: comp.label.clone(),
            branch: None,
            samples: sample.points.len(),
            attempts: sample.attempts,
            degenerate: sample.degenerate,
            feasible_plus: 0,
            feasible_minus: 0,
            min_margin: None,
            min_slack: None,
            min_trace: None,
            max_trace: None,
            failures: Vec::new(),
            failures_truncated: 0,
        };
        let mut margins = [f64::INFINITY; 2];
        let mut levi_points = 0;
        for e in &evals {
            match e {
                PointEval::Degenerate => report.degenerate += 1,
                PointEval::Levi { plus, minus, .. } => {
                    levi_points += 1;
                    if ok(plus) {
                        report.feasible_plus += 1;
                        margins[0] = margins[0].min(plus.as_ref().map_or(0.0, |c| c.margin));
                    }
                    if ok(minus) {
                        report.feasible_minus += 1;
                        margins[1] = margins[1].min(minus.as_ref().map_or(0.0, |c| c.margin));
                    }
                }
            }
        }
        let plus_all = levi_points > 0 && report.feasible_plus == levi_points;
        let minus_all = levi_points > 0 && report.feasible_minus == levi_points;
        let chosen = match (plus_all, minus_all) {
            (true, false) => Some(Branch::Plus),
            (false, true) => Some(Branch::Minus),
            (true, true) => Some(comp.orientation_hint.unwrap_or(if margins[1] > margins[0] {
                Branch::Minus
            } else {
                Branch::Plus
            })),
            (false, false) => None,
        };
        report.branch = chosen;
        // witnesses are reported against the chosen branch, or the best one
        let target = chosen.unwrap_or(match comp.orientation_hint {
            Some(b) => b,
            None if report.feasible_minus > report.feasible_plus => Branch::Minus,
            None => Branch::Plus,
        });
        for e in &evals {
            let PointEval::Levi {
                point,
                mu,
                plus,
                minus,
            } = e
            else {
                continue;
            };
            let cert = match target {
                Branch::Plus => plus,
                Branch::Minus => minus,
            };
            match cert {
                Some(c) if c.is_valid(cfg.slack_tol, cfg.delta_min) => {
                    report.min_margin = min_opt(report.min_margin, c.margin);
                    report.min_slack = min_opt(report.min_slack, c.slack);
                    report.min_trace = min_opt(report.min_trace, c.trace);
                    report.max_trace = max_opt(report.max_trace, c.trace);
                }
                other => push_failure(
                    &mut report,
                    FailureWitness {
                        point: witness_point(point),
                        condition: format!(
                            "no branch {:+} certificate with margin >= delta_min",
                            target.sign()
                        ),
                        value: other.as_ref().map_or(0.0, |c| c.margin),
                        mu: mu.clone(),
                    },
                ),
            }
        }
        components.push(report);
    }
    Ok(CertificationReport {
        domain: dom.name.clone(),
        n: dom.n,
        q,
        method: "pointwise-lp".into(),
        scope: "pointwise-certified".into(),
        normalized: cfg.normalize,
        delta_min: cfg.delta_min,
        slack_tol: cfg.slack_tol,
        components,
        degenerate_fraction: 0.0,
        verdict: Verdict::Certified,
    }
    .finish())
}

/// Weak Y(q): weak Z(q) together with weak Z(n - 1 - q).
pub fn certify_weak_yq(
    dom: &DomainSpec,
    q: usize,
    cfg: &CertifyConfig,
) -> Result<(CertificationReport, CertificationReport), CertifyError> {
    check_q(dom, q)?;
    let a = certify_domain(dom, q, cfg)?;
    let b = certify_domain(dom, dom.n - 1 - q, cfg)?;
    Ok((a, b))
}

fn upsilon_component(
    dom: &DomainSpec,
    ups: &UpsilonField,
    q: usize,
    label: &str,
    points: &[Vec<Complex64>],
    delta_min: f64,
    normalize: bool,
) -> Result<(ComponentReport, Vec<UpsilonCheck>), CertifyError> {
    let checks: Vec<Option<UpsilonCheck>> = points
        .par_iter()
        .map(
            |p| match check_upsilon_at(dom, ups, q, p, normalize, UPSILON_TOL) {
                Ok(c) => Ok(Some(c)),
                Err(CertifyError::Geometry(GeometryError::DegenerateBoundaryPoint { .. })) => {
                    Ok(None)
                }
                Err(e) => Err(e),
            },
        )
        .collect::<Result<_, _>>()?;
    let mut report = ComponentReport {
        label: label.to_string(),
        branch: None,
        samples: points.len(),
        attempts: points.len(),
        degenerate: checks.iter().filter(|c| c.is_none()).count(),
        feasible_plus: 0,
        feasible_minus: 0,
        min_margin: None,
        min_slack: None,
        min_trace: None,
        max_trace: None,
        failures: Vec::new(),
        failures_truncated: 0,
    };
    let qf = q as f64;
    for c in checks.iter().flatten() {
        if c.trace <= qf - delta_min {
            report.feasible_plus += 1;
        } else if c.trace >= qf + delta_min {
            report.feasible_minus += 1;
        }
    }
    // a single σ for the whole component: the side holding the majority
    let branch = if report.feasible_minus > report.feasible_plus {
        Branch::Minus
    } else {
        Branch::Plus
    };
    for c in checks.iter().flatten() {
        let margin = match branch {
            Branch::Plus => qf - c.trace,
            Branch::Minus => c.trace - qf,
        };
        report.min_margin = min_opt(report.min_margin, margin);
        report.min_slack = min_opt(report.min_slack, c.slack.min(c.form_min));
        report.min_trace = min_opt(report.min_trace, c.trace);
        report.max_trace = max_opt(report.max_trace, c.trace);
        let mut fail = |condition: &str, value: f64| {
            push_failure(
                &mut report,
                FailureWitness {
                    point: witness_point(&c.point),
                    condition: condition.into(),
                    value,
                    mu: c.mu.clone(),
                },
            )
        };
        if !c.condition1 {
            let worst = c
                .upsilon_eigs
                .iter()
                .map(|&e| e.min(1.0 - e))
                .fold(f64::INFINITY, f64::min);
            fail("condition 1: eigenvalues of Υ outside [0, 1]", worst);
        }
        if !c.condition2 {
            fail(
                "condition 2: mu_1 + ... + mu_q - L(Υ) < 0",
                c.slack.min(c.form_min),
            );
        }
        if margin < delta_min {
            fail(
                "condition 3: trace on the wrong side of q or margin below delta_min",
                margin,
            );
        }
    }
    if report.failures.is_empty() && checks.iter().any(Option::is_some) {
        report.branch = Some(branch);
    }
    Ok((report, checks.into_iter().flatten().collect()))
}

fn upsilon_report(
    dom: &DomainSpec,
    ups: &UpsilonField,
    q: usize,
    components: Vec<ComponentReport>,
    delta_min: f64,
    normalize: bool,
) -> CertificationReport {
    CertificationReport {
        domain: dom.name.clone(),
        n: dom.n,
        q,
        method: format!("upsilon-field:{}", ups.name),
        scope: "field-verified-at-samples".into(),
        normalized: normalize,
        delta_min,
        slack_tol: UPSILON_TOL,
        components,
        degenerate_fraction: 0.0,
        verdict: Verdict::Certified,
    }
    .finish()
}

/// Check the three conditions of a Υ field at given boundary points, treated as one component.
pub fn verify_upsilon_field(
    dom: &DomainSpec,
    ups: &UpsilonField,
    q: usize,
    points: &[Vec<Complex64>],
    delta_min: f64,
    normalize: bool,
) -> Result<(CertificationReport, Vec<UpsilonCheck>), CertifyError> {
    check_q(dom, q)?;
    let (comp, checks) = upsilon_component(dom, ups, q, "points", points, delta_min, normalize)?;
    Ok((
        upsilon_report(dom, ups, q, vec![comp], delta_min, normalize),
        checks,
    ))
}

/// Sample every component and verify a Υ field there.
pub fn certify_with_upsilon(
    dom: &DomainSpec,
    ups: &UpsilonField,
    q: usize,
    cfg: &CertifyConfig,
) -> Result<CertificationReport, CertifyError> {
    check_q(dom, q)?;
    let mut comps = Vec::new();
    for (index, comp) in dom.components.iter().enumerate() {
        let sample = sample_component(dom, index, cfg)?;
        let (mut r, _) = upsilon_component(
            dom,
            ups,
            q,
            &comp.label,
            &sample.points,
            cfg.delta_min,
            cfg.normalize,
        )?;
        r.attempts = sample.attempts;
        r.degenerate += sample.degenerate;
        comps.push(r);
    }
    Ok(upsilon_report(
        dom,
        ups,
        q,
        comps,
        cfg.delta_min,
        cfg.normalize,
    ))
}
