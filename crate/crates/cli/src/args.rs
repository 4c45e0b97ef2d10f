use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use levi_scope::certify::{builtin_upsilon, UpsilonField, UpsilonFile};
use levi_scope::domains::{builtin, BuiltinParams, DomainFile};
use levi_scope::DomainSpec;
use num_complex::Complex64;
use serde::Serialize;

/// Integer flag that also accepts scientific notation (`1e3`).
pub fn parse_count(s: &str) -> Result<usize, String> {
    if let Ok(v) = s.parse::<usize>() {
        return Ok(v);
    }
    let v: f64 = s.parse().map_err(|_| format!("`{}` is not a number", s))?;
    if !(v >= 0.0) || v.fract() != 0.0 || v > 1e15 {
        return Err(format!("`{}` is not a non-negative integer", s));
    }
    Ok(v as usize)
}

pub fn parse_real(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{}` is not a number", s))?;
    if !v.is_finite() {
        return Err(format!("`{}` is not finite", s));
    }
    Ok(v)
}

pub fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(format!("`{}` is not a boolean", s)),
    }
}

/// A point given as comma-separated reals: one value (every coordinate
/// `v + 0i`) or `2n` values `re z1, im z1, ...`.
pub fn parse_point(text: &str, n: usize) -> Result<Vec<Complex64>> {
    let vals: Vec<f64> = text
        .split(',')
        .map(|s| parse_real(s.trim()).map_err(anyhow::Error::msg))
        .collect::<Result<_>>()
        .with_context(|| format!("invalid point `{}`", text))?;
    match vals.len() {
        1 => Ok(vec![Complex64::new(vals[0], 0.0); n]),
        k if k == 2 * n => Ok(vals.chunks(2).map(|w| Complex64::new(w[0], w[1])).collect()),
        k => bail!("point `{}` has {} reals; expected 1 or {}", text, k, 2 * n),
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DomainArgs {
    /// Builtin domain: ball, annulus, prop51, prop51_bounded, prop52, prop52_bounded.
    #[arg(long, conflicts_with = "domain")]
    pub builtin: Option<String>,
    /// Domain definition file (JSON or TOML).
    #[arg(long)]
    pub domain: Option<PathBuf>,
    /// Ball radius.
    #[arg(long = "R", value_parser = parse_real)]
    pub radius_ball: Option<f64>,
    /// Complex dimension of ball / annulus.
    #[arg(long, value_parser = parse_count)]
    pub n: Option<usize>,
    #[arg(long, value_parser = parse_real)]
    pub r_in: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    pub r_out: Option<f64>,
    /// Metric parameter of prop52.
    #[arg(long, value_parser = parse_real)]
    pub t: Option<f64>,
    /// Smoothing radius of the smooth maximum in bounded variants.
    #[arg(long, value_parser = parse_real)]
    pub smoothing: Option<f64>,
    /// Cutoff ball radius in bounded variants.
    #[arg(long, value_parser = parse_real)]
    pub cutoff: Option<f64>,
}

impl DomainArgs {
    pub fn load(&self) -> Result<DomainSpec> {
        let dom = match (&self.builtin, &self.domain) {
            (Some(name), None) => {
                let params = BuiltinParams {
                    radius: self.radius_ball,
                    n: self.n,
                    r_in: self.r_in,
                    r_out: self.r_out,
                    t: self.t,
                    smoothing: self.smoothing,
                    cutoff: self.cutoff,
                };
                builtin(name, &params)?
            }
            (None, Some(path)) => {
                let file: DomainFile = read_structured(path)?;
                file.into_domain()?
            }
            _ => bail!("give exactly one of --builtin or --domain"),
        };
        dom.validate(8, 0).context("domain failed validation")?;
        Ok(dom)
    }
}

/// Parse a JSON or TOML file, chosen by extension.
pub fn read_structured<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let is_toml = path.extension().and_then(|e| e.to_str()) == Some("toml");
    if is_toml {
        toml::from_str(&text).with_context(|| format!("invalid TOML in {}", path.display()))
    } else {
        serde_json::from_str(&text).with_context(|| format!("invalid JSON in {}", path.display()))
    }
}

/// `builtin:<name>(<t>)` or a path to a Υ file.
pub fn load_upsilon(spec: &str, dom: &DomainSpec) -> Result<UpsilonField> {
    if let Some(name) = spec.strip_prefix("builtin:") {
        return Ok(builtin_upsilon(name, dom)?);
    }
    let file: UpsilonFile = read_structured(Path::new(spec))?;
    Ok(file.into_field(dom.n)?)
}

pub fn check_q(q: usize, n: usize) -> Result<()> {
    if q == 0 || q >= n {
        bail!("q must be in 1..={} for n = {}, got {}", n - 1, n, q);
    }
    Ok(())
}
