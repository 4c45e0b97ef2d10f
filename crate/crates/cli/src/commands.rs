use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use levi_scope::certify::{
    certify_domain, certify_weak_yq, certify_with_upsilon, verify_upsilon_field, weak_zq_lp,
    CertifyConfig, RegionOverride, UpsilonCheck,
};
use levi_scope::domains::{newton_project, sample_boundary, sample_region, SampleRegion};
use levi_scope::expr::{parse_expr, parse_expr_with_aliases, wirtinger_jet2};
use levi_scope::geometry::{levi_form_with, LeviOptions};
use levi_scope::mkh::{
    mkh_convergence, FormField, MkhTerms, QuadratureGrid, QuadratureRule, WeightConfig,
};
use levi_scope::{Branch, CertificationReport, DomainSpec, Verdict};
use num_complex::Complex64;
use serde::Serialize;

use crate::args::{
    check_q, load_upsilon, parse_bool, parse_count, parse_point, parse_real, DomainArgs,
};
use crate::output::{emit, fmt, to_json, Envelope, Timing};

fn timing(start: Instant, on: bool) -> Option<Timing> {
    on.then(|| Timing {
        seconds: start.elapsed().as_secs_f64(),
        threads: rayon::current_num_threads(),
    })
}

fn write_report<C: Serialize, R: Serialize>(
    command: &str,
    config: &C,
    report: &R,
    path: Option<&Path>,
    timing: Option<Timing>,
) -> Result<()> {
    let env = Envelope {
        schema_version: crate::output::SCHEMA_VERSION,
        tool: "levi-scope",
        command,
        config,
        report,
        timing,
    };
    emit(&to_json(&env)?, path)
}

fn worst(verdicts: &[Verdict]) -> Verdict {
    if verdicts.contains(&Verdict::Degenerate) {
        Verdict::Degenerate
    } else if verdicts.contains(&Verdict::InfeasibleAtPoints) {
        Verdict::InfeasibleAtPoints
    } else {
        Verdict::Certified
    }
}

fn summarize(r: &CertificationReport) {
    for c in &r.components {
        let sigma = c
            .branch
            .map_or("none".to_string(), |b| format!("{:+}", b.sign()));
        eprintln!(
            "{}: q={} sigma={} samples={} failures={}",
            c.label,
            r.q,
            sigma,
            c.samples,
            c.failures.len() + c.failures_truncated
        );
    }
    eprintln!("verdict: {}", verdict_name(r.verdict));
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Certified => "CERTIFIED",
        Verdict::InfeasibleAtPoints => "INFEASIBLE-AT-POINTS",
        Verdict::Degenerate => "DEGENERATE",
    }
}

fn parse_seed(s: &str) -> Result<u64, String> {
    parse_count(s).map(|v| v as u64)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SamplingArgs {
    /// Samples per component.
    #[arg(long, default_value = "200", value_parser = parse_count)]
    pub samples: usize,
    #[arg(long, default_value = "0", value_parser = parse_seed)]
    pub seed: u64,
    /// Sample around this point instead of the component seeds (`0` or `2n` comma-separated reals).
    #[arg(long)]
    pub near: Option<String>,
    /// Radius of the draw region around `--near`.
    #[arg(long, value_parser = parse_real, requires = "near")]
    pub radius: Option<f64>,
}

impl SamplingArgs {
    fn region(&self, n: usize) -> Result<Option<RegionOverride>> {
        let Some(near) = &self.near else {
            return Ok(None);
        };
        let radius = self.radius.unwrap_or(0.1);
        if !(radius > 0.0) {
            bail!("--radius must be positive");
        }
        Ok(Some(RegionOverride {
            center: parse_point(near, n)?,
            radius,
        }))
    }

    fn points(&self, dom: &DomainSpec) -> Result<(Vec<(String, Vec<Complex64>)>, usize, usize)> {
        let region = self.region(dom.n)?;
        let mut out = Vec::new();
        let (mut attempts, mut degenerate) = (0, 0);
        for (i, c) in dom.components.iter().enumerate() {
            let s = match &region {
                None => sample_boundary(dom, i, self.samples, self.seed)?,
                Some(r) => {
                    let reg = SampleRegion {
                        center: r.center.clone(),
                        spread: r.radius,
                        accept_radius: 2.0 * r.radius,
                        stream: i as u64,
                    };
                    sample_region(dom, &reg, self.samples, self.seed)?
                }
            };
            attempts += s.attempts;
            degenerate += s.degenerate;
            out.extend(s.points.into_iter().map(|p| (c.label.clone(), p)));
        }
        Ok((out, attempts, degenerate))
    }
}

// ------------------------------------------------------------------ parse

#[derive(Debug, Args, Serialize)]
pub struct ParseArgs {
    /// Expression in z1..zn.
    #[arg(long)]
    pub expr: String,
    #[arg(long, value_parser = parse_count)]
    pub n: usize,
    /// Evaluate value and first derivatives here (`0` or `2n` reals).
    #[arg(long)]
    pub at: Option<String>,
}

#[derive(Serialize)]
struct ParseReport {
    canonical: String,
    nvars: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dz: Option<Vec<[f64; 2]>>,
}

pub fn run_parse(a: &ParseArgs) -> Result<i32> {
    let e = parse_expr(&a.expr, a.n)?;
    let mut report = ParseReport {
        canonical: e.to_string(),
        nvars: e.nvars(),
        value: None,
        dz: None,
    };
    if let Some(at) = &a.at {
        let p = parse_point(at, a.n)?;
        let j = wirtinger_jet2(&e, &p)?;
        report.value = Some([j.value.re, j.value.im]);
        report.dz = Some(j.dz.iter().map(|c| [c.re, c.im]).collect());
    }
    write_report("parse", a, &report, None, None)?;
    Ok(0)
}

// ---------------------------------------------------------------- certify

#[derive(Debug, Args, Serialize)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub domain: DomainArgs,
    #[arg(long, value_parser = parse_count)]
    pub q: usize,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// Verify an explicit Υ field (`builtin:<name>(<t>)` or a file) instead of pointwise certificates.
    #[arg(long, conflicts_with = "weak_y")]
    pub upsilon: Option<String>,
    #[arg(long, default_value = "1e-6", value_parser = parse_real)]
    pub delta_min: f64,
    #[arg(long, default_value = "1e-10", value_parser = parse_real)]
    pub slack_tol: f64,
    /// Divide the Levi form by |d rho|.
    #[arg(long, default_value = "true", value_parser = parse_bool, action = clap::ArgAction::Set)]
    pub normalize: bool,
    /// Certify weak Y(q), i.e. weak Z(q) and weak Z(n-1-q).
    #[arg(long)]
    pub weak_y: bool,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub timing: bool,
}

#[derive(Serialize)]
struct WeakYReport {
    weak_z_q: CertificationReport,
    weak_z_dual: CertificationReport,
    verdict: Verdict,
}

pub fn run_certify(a: &CertifyArgs) -> Result<i32> {
    let start = Instant::now();
    let dom = a.domain.load()?;
    check_q(a.q, dom.n)?;
    let cfg = CertifyConfig {
        samples: a.sampling.samples,
        seed: a.sampling.seed,
        delta_min: a.delta_min,
        slack_tol: a.slack_tol,
        normalize: a.normalize,
        region: a.sampling.region(dom.n)?,
    };
    if a.weak_y {
        let (r1, r2) = certify_weak_yq(&dom, a.q, &cfg)?;
        summarize(&r1);
        summarize(&r2);
        let verdict = worst(&[r1.verdict, r2.verdict]);
        let report = WeakYReport {
            weak_z_q: r1,
            weak_z_dual: r2,
            verdict,
        };
        write_report(
            "certify",
            a,
            &report,
            a.report.as_deref(),
            timing(start, a.timing),
        )?;
        return Ok(verdict.exit_code());
    }
    let report = match &a.upsilon {
        Some(spec) => {
            let ups = load_upsilon(spec, &dom)?;
            certify_with_upsilon(&dom, &ups, a.q, &cfg)?
        }
        None => certify_domain(&dom, a.q, &cfg)?,
    };
    summarize(&report);
    write_report(
        "certify",
        a,
        &report,
        a.report.as_deref(),
        timing(start, a.timing),
    )?;
    Ok(report.verdict.exit_code())
}

// --------------------------------------------------------- verify-upsilon

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub domain: DomainArgs,
    #[arg(long, value_parser = parse_count)]
    pub q: usize,
    /// `builtin:<name>(<t>)` or a JSON/TOML Υ file.
    #[arg(long)]
    pub upsilon: String,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// CSV of boundary points (`2n` reals per line) instead of sampling.
    #[arg(long)]
    pub points: Option<PathBuf>,
    #[arg(long, default_value = "1e-6", value_parser = parse_real)]
    pub delta_min: f64,
    #[arg(long, default_value = "false", value_parser = parse_bool, action = clap::ArgAction::Set)]
    pub normalize: bool,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub timing: bool,
}

#[derive(Serialize)]
struct VerifyReport {
    summary: CertificationReport,
    checks: Vec<PointCheck>,
}

#[derive(Serialize)]
struct PointCheck {
    point: Vec<[f64; 2]>,
    #[serde(flatten)]
    check: UpsilonCheck,
}

fn read_points(path: &Path, n: usize) -> Result<Vec<Vec<Complex64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|s| parse_real(s).map_err(anyhow::Error::msg))
            .collect::<Result<_>>()
            .with_context(|| format!("{}: record {}", path.display(), line + 1))?;
        if vals.len() != 2 * n {
            bail!(
                "{}: record {} has {} values, expected {}",
                path.display(),
                line + 1,
                vals.len(),
                2 * n
            );
        }
        out.push(vals.chunks(2).map(|w| Complex64::new(w[0], w[1])).collect());
    }
    Ok(out)
}

pub fn run_verify(a: &VerifyArgs) -> Result<i32> {
    let start = Instant::now();
    let dom = a.domain.load()?;
    check_q(a.q, dom.n)?;
    let ups = load_upsilon(&a.upsilon, &dom)?;
    let points = match &a.points {
        Some(path) => read_points(path, dom.n)?,
        None => a
            .sampling
            .points(&dom)?
            .0
            .into_iter()
            .map(|(_, p)| p)
            .collect(),
    };
    let (summary, checks) =
        verify_upsilon_field(&dom, &ups, a.q, &points, a.delta_min, a.normalize)?;
    summarize(&summary);
    let verdict = summary.verdict;
    let checks = checks
        .into_iter()
        .map(|c| PointCheck {
            point: c.point.iter().map(|z| [z.re, z.im]).collect(),
            check: c,
        })
        .collect();
    write_report(
        "verify-upsilon",
        a,
        &VerifyReport { summary, checks },
        a.report.as_deref(),
        timing(start, a.timing),
    )?;
    Ok(verdict.exit_code())
}

// ------------------------------------------------------------------ trace

#[derive(Debug, Args, Serialize)]
pub struct TraceArgs {
    #[command(flatten)]
    pub domain: DomainArgs,
    #[arg(long, default_value = "1", value_parser = parse_count)]
    pub q: usize,
    /// Coordinates as `;`-separated expressions in the real parameter `s`.
    /// For graph domains the graph coordinate may be omitted and is solved for.
    #[arg(long, allow_hyphen_values = true)]
    pub curve: String,
    #[arg(long, default_value = "0", value_parser = parse_real, allow_hyphen_values = true)]
    pub from: f64,
    #[arg(long, default_value = "1", value_parser = parse_real, allow_hyphen_values = true)]
    pub to: f64,
    #[arg(long, default_value = "11", value_parser = parse_count)]
    pub steps: usize,
    #[arg(long, default_value = "false", value_parser = parse_bool, action = clap::ArgAction::Set)]
    pub normalize: bool,
    /// Newton-project each curve point onto the boundary along the gradient.
    #[arg(long)]
    pub project: bool,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Rows whose point misses the boundary by more than this are flagged.
const TRACE_BOUNDARY_TOL: f64 = 1e-8;

pub fn run_trace(a: &TraceArgs) -> Result<i32> {
    let dom = a.domain.load()?;
    check_q(a.q, dom.n)?;
    let n = dom.n;
    let exprs = a
        .curve
        .split(';')
        .map(|s| parse_expr_with_aliases(s.trim(), 1, &[("s", 0)]))
        .collect::<Result<Vec<_>, _>>()
        .context("invalid --curve")?;
    let solve_graph = match (exprs.len(), dom.graph_axis) {
        (k, _) if k == n => None,
        (k, Some(axis)) if k + 1 == n => Some(axis),
        (k, _) => bail!("--curve has {} coordinates; domain needs {}", k, n),
    };
    if a.steps < 2 && a.from != a.to {
        bail!("--steps must be at least 2");
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["s".to_string()];
    for j in 1..=n {
        header.push(format!("re_z{}", j));
        header.push(format!("im_z{}", j));
    }
    header.push("rho".into());
    header.push("flagged".into());
    header.extend((1..n).map(|j| format!("mu{}", j)));
    header.extend([
        "det".into(),
        "branch".into(),
        "delta".into(),
        "slack".into(),
    ]);
    w.write_record(&header)?;
    // graph domains use the graph frame so that `det` matches the graph formulas along the whole curve
    let opts = LeviOptions {
        normalize: a.normalize,
        boundary_tol: None,
        pivot: dom.graph_axis,
    };
    for i in 0..a.steps.max(1) {
        let s = if a.steps <= 1 {
            a.from
        } else {
            a.from + (a.to - a.from) * i as f64 / (a.steps - 1) as f64
        };
        let arg = [Complex64::new(s, 0.0)];
        let mut vals = exprs
            .iter()
            .map(|e| e.eval_complex(&arg))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(axis) = solve_graph {
            vals.insert(axis, Complex64::new(0.0, 0.0));
            let height = dom.rho.eval_real(&vals)?;
            vals[axis] = Complex64::new(0.0, height);
        }
        if a.project {
            if let Ok(p) = newton_project(&dom.rho, &vals) {
                vals = p;
            }
        }
        let rho = dom.rho.eval_real(&vals)?;
        let mut row = vec![fmt(s)];
        for z in &vals {
            row.push(fmt(z.re));
            row.push(fmt(z.im));
        }
        row.push(fmt(rho));
        row.push((rho.abs() > TRACE_BOUNDARY_TOL).to_string());
        match levi_form_with(&dom.rho, &dom.phi, &vals, &opts) {
            Ok(levi) => {
                row.extend(levi.mu.iter().map(|&m| fmt(m)));
                let det = levi.c_raw.clone().determinant().re;
                row.push(fmt(det));
                let plus = weak_zq_lp(&levi.mu, a.q, Branch::Plus);
                let minus = weak_zq_lp(&levi.mu, a.q, Branch::Minus);
                let best = match (plus, minus) {
                    (Some(p), Some(m)) => Some(if m.margin > p.margin { m } else { p }),
                    (p, m) => p.or(m),
                };
                match best {
                    Some(c) => {
                        row.extend([c.branch.sign().to_string(), fmt(c.margin), fmt(c.slack)])
                    }
                    None => row.extend(["0".to_string(), String::new(), String::new()]),
                }
            }
            Err(_) => {
                row.extend(std::iter::repeat(String::new()).take(n - 1 + 4));
            }
        }
        w.write_record(&row)?;
    }
    let text = String::from_utf8(w.into_inner()?)?;
    emit(&text, a.out.as_deref())?;
    Ok(0)
}

// -------------------------------------------------------------- mkh-check

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleArg {
    Midpoint,
    GaussLegendre,
}

#[derive(Debug, Args, Serialize)]
pub struct MkhArgs {
    #[arg(long, default_value = "2", value_parser = parse_count)]
    pub n: usize,
    #[arg(long, default_value = "1", value_parser = parse_count)]
    pub q: usize,
    /// Weight parameters (repeatable).
    #[arg(long = "t", value_parser = parse_real, default_values_t = [0.0, 1.0, 5.0])]
    pub t: Vec<f64>,
    #[arg(long, default_value = "6", value_parser = parse_count)]
    pub points_per_axis: usize,
    #[arg(long, default_value = "3", value_parser = parse_count)]
    pub refinements: usize,
    /// Bump radius; the bump is centered at the origin.
    #[arg(long, default_value = "0.7", value_parser = parse_real)]
    pub width: f64,
    /// Half-width of the integration cube.
    #[arg(long, default_value = "1", value_parser = parse_real)]
    pub half: f64,
    #[arg(long, value_enum, default_value = "midpoint")]
    pub rule: RuleArg,
    /// Largest accepted residual at the finest resolution.
    #[arg(long, default_value = "1e-6", value_parser = parse_real)]
    pub tol: f64,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub timing: bool,
}

/// Residuals below this count as converged when checking contraction.
pub const MKH_FLOOR: f64 = 1e-9;
/// Required residual reduction per doubling of the points per axis.
pub const MKH_CONTRACTION: f64 = 4.0;

#[derive(Serialize)]
struct MkhSeries {
    t: f64,
    rows: Vec<MkhTerms>,
    contraction: Vec<f64>,
    passed: bool,
}

pub fn run_mkh(a: &MkhArgs) -> Result<i32> {
    let start = Instant::now();
    if a.n == 0 || a.q == 0 || a.q > a.n {
        bail!("need 1 <= q <= n, got n = {} q = {}", a.n, a.q);
    }
    let rule = match a.rule {
        RuleArg::Midpoint => QuadratureRule::Midpoint,
        RuleArg::GaussLegendre => QuadratureRule::GaussLegendre,
    };
    let index: Vec<usize> = (0..a.q).collect();
    let f = FormField::bump(vec![Complex64::new(0.0, 0.0); a.n], a.width, &index)?;
    let grid = QuadratureGrid::cube(a.n, a.half, a.points_per_axis, rule)?;
    let mut series = Vec::new();
    eprintln!(
        "{:>6} {:>8} {:>24} {:>24} {:>12}",
        "t", "points", "lhs", "rhs", "residual"
    );
    for &t in &a.t {
        let rows = mkh_convergence(&f, &WeightConfig::new(a.n, t)?, &grid, a.refinements)?;
        let contraction: Vec<f64> = rows
            .windows(2)
            .map(|w| w[0].residual / w[1].residual)
            .collect();
        let contracts = rows.windows(2).all(|w| {
            w[1].residual <= w[0].residual / MKH_CONTRACTION || w[1].residual <= MKH_FLOOR
        });
        let passed = contracts && rows.last().is_some_and(|r| r.residual <= a.tol);
        for r in &rows {
            eprintln!(
                "{:>6} {:>8} {:>24.16e} {:>24.16e} {:>12.3e}",
                t, r.points_per_axis, r.lhs, r.rhs, r.residual
            );
        }
        series.push(MkhSeries {
            t,
            rows,
            contraction,
            passed,
        });
    }
    let ok = series.iter().all(|s| s.passed);
    eprintln!("mkh identity: {}", if ok { "PASS" } else { "FAIL" });
    write_report(
        "mkh-check",
        a,
        &series,
        a.report.as_deref(),
        timing(start, a.timing),
    )?;
    Ok(if ok { 0 } else { 2 })
}

// ----------------------------------------------------------------- sample

#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    #[command(flatten)]
    pub domain: DomainArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run_sample(a: &SampleArgs) -> Result<i32> {
    let dom = a.domain.load()?;
    let (points, attempts, degenerate) = a.sampling.points(&dom)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["component".to_string()];
    for j in 1..=dom.n {
        header.push(format!("re_z{}", j));
        header.push(format!("im_z{}", j));
    }
    header.push("rho".into());
    w.write_record(&header)?;
    for (label, p) in &points {
        let mut row = vec![label.clone()];
        for z in p {
            row.push(fmt(z.re));
            row.push(fmt(z.im));
        }
        row.push(fmt(dom.rho.eval_real(p)?));
        w.write_record(&row)?;
    }
    emit(&String::from_utf8(w.into_inner()?)?, a.out.as_deref())?;
    let frac = if attempts == 0 {
        0.0
    } else {
        degenerate as f64 / attempts as f64
    };
    eprintln!(
        "{} points, {} attempts, {} degenerate",
        points.len(),
        attempts,
        degenerate
    );
    Ok(if frac > levi_scope::certify::DEGENERATE_FRACTION {
        Verdict::Degenerate.exit_code()
    } else {
        0
    })
}
