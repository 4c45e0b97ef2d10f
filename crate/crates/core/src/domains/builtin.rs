use std::collections::BTreeMap;

use num_complex::Complex64;

use super::{smooth_max, ComponentSpec, DomainError, DomainSpec};
use crate::certify::Branch;
use crate::expr::{parse_expr, DefiningExpr};

/// Loose parameter bag used by the CLI; unset fields take per-domain defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BuiltinParams {
    pub radius: Option<f64>,
    pub n: Option<usize>,
    pub r_in: Option<f64>,
    pub r_out: Option<f64>,
    pub t: Option<f64>,
    /// Smoothing radius `r` of the smooth maximum.
    pub smoothing: Option<f64>,
    /// Radius `R` of the cutoff ball for bounded variants.
    pub cutoff: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Builtin {
    Ball { radius: f64, n: usize },
    Annulus { r_in: f64, r_out: f64, n: usize },
    Prop51,
    Prop51Bounded { r: f64, cutoff: f64 },
    Prop52 { t: f64 },
    Prop52Bounded { t: f64, r: f64, cutoff: f64 },
}

pub const BUILTIN_NAMES: [&str; 6] = [
    "ball",
    "annulus",
    "prop51",
    "prop51_bounded",
    "prop52",
    "prop52_bounded",
];

impl Builtin {
    pub fn from_name(name: &str, p: &BuiltinParams) -> Result<Self, DomainError> {
        let b = match name {
            "ball" => Builtin::Ball {
                radius: p.radius.unwrap_or(1.0),
                n: p.n.unwrap_or(3),
            },
            "annulus" => Builtin::Annulus {
                r_in: p.r_in.unwrap_or(0.5),
                r_out: p.r_out.unwrap_or(1.0),
                n: p.n.unwrap_or(3),
            },
            "prop51" => Builtin::Prop51,
            "prop51_bounded" => Builtin::Prop51Bounded {
                r: p.smoothing.unwrap_or(0.05),
                cutoff: p.cutoff.unwrap_or(0.5),
            },
            "prop52" => Builtin::Prop52 {
                t: p.t.unwrap_or(6.0),
            },
            "prop52_bounded" => Builtin::Prop52Bounded {
                t: p.t.unwrap_or(6.0),
                r: p.smoothing.unwrap_or(0.01),
                cutoff: p.cutoff.unwrap_or(0.1),
            },
            other => return Err(DomainError::UnknownBuiltin(other.to_string())),
        };
        b.check()?;
        Ok(b)
    }

    fn check(&self) -> Result<(), DomainError> {
        let bad = |m: String| Err(DomainError::InvalidParams(m));
        match *self {
            Builtin::Ball { radius, n } => {
                if !(radius > 0.0) {
                    return bad(format!("ball radius must be positive, got {}", radius));
                }
                if n < 2 {
                    return bad(format!("n must be at least 2, got {}", n));
                }
            }
            Builtin::Annulus { r_in, r_out, n } => {
                if !(r_in > 0.0) || r_in >= r_out {
                    return bad(format!(
                        "annulus needs 0 < R_in < R_out, got R_in={} R_out={}",
                        r_in, r_out
                    ));
                }
                if n < 2 {
                    return bad(format!("n must be at least 2, got {}", n));
                }
            }
            Builtin::Prop51 => {}
            Builtin::Prop51Bounded { r, cutoff } => {
                if !(r > 0.0) || !(cutoff > 0.0) {
                    return bad(format!("need r > 0 and R > 0, got r={} R={}", r, cutoff));
                }
            }
            Builtin::Prop52 { t } => {
                if !(t > 0.0) {
                    return bad(format!("t must be positive, got {}", t));
                }
            }
            Builtin::Prop52Bounded { t, r, cutoff } => {
                if !(t > 0.0) || !(r > 0.0) || !(cutoff > 0.0) {
                    return bad(format!(
                        "need t, r, R > 0, got t={} r={} R={}",
                        t, r, cutoff
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn domain(&self) -> DomainSpec {
        match *self {
            Builtin::Ball { radius, n } => {
                let rho = &DefiningExpr::norm2(n) - &DefiningExpr::constant(radius * radius, n);
                let mut seed = vec![Complex64::new(0.0, 0.0); n];
                seed[0] = Complex64::new(radius, 0.0);
                spec(
                    "ball",
                    n,
                    rho,
                    DefiningExpr::norm2(n),
                    vec![ComponentSpec {
                        label: "sphere".into(),
                        seed,
                        orientation_hint: Some(Branch::Plus),
                        spread: 0.5 * radius,
                    }],
                    1.5 * radius,
                    None,
                )
            }
            Builtin::Annulus { r_in, r_out, n } => {
                let norm = DefiningExpr::norm2(n);
                let outer = &norm - &DefiningExpr::constant(r_out * r_out, n);
                let inner = &norm - &DefiningExpr::constant(r_in * r_in, n);
                let rho = &outer * &inner;
                let spread = 0.4 * (r_out - r_in);
                let seed_at = |r: f64| {
                    let mut s = vec![Complex64::new(0.0, 0.0); n];
                    s[0] = Complex64::new(r, 0.0);
                    s
                };
                spec(
                    "annulus",
                    n,
                    rho,
                    norm,
                    vec![
                        ComponentSpec {
                            label: "outer".into(),
                            seed: seed_at(r_out),
                            orientation_hint: Some(Branch::Plus),
                            spread,
                        },
                        ComponentSpec {
                            label: "inner".into(),
                            seed: seed_at(r_in),
                            orientation_hint: Some(Branch::Minus),
                            spread,
                        },
                    ],
                    1.5 * r_out,
                    None,
                )
            }
            Builtin::Prop51 => spec(
                "prop51",
                3,
                prop51_rho(),
                DefiningExpr::norm2(3),
                vec![origin_component(3, 0.2)],
                1.0,
                Some(2),
            ),
            Builtin::Prop51Bounded { r, cutoff } => {
                let rho2 = &DefiningExpr::norm2(3) - &DefiningExpr::constant(cutoff * cutoff, 3);
                let rho = smooth_max(&prop51_rho(), &rho2, r);
                let mut d = spec(
                    "prop51_bounded",
                    3,
                    rho,
                    DefiningExpr::norm2(3),
                    vec![origin_component(3, 0.5 * cutoff)],
                    1.5 * cutoff + r,
                    None,
                );
                d.tags.insert("r".into(), format!("{:?}", r));
                d.tags.insert("R".into(), format!("{:?}", cutoff));
                d
            }
            Builtin::Prop52 { t } => {
                let mut d = spec(
                    "prop52",
                    4,
                    prop52_rho(),
                    phi_t(t),
                    vec![origin_component(4, 0.1)],
                    1.0,
                    Some(3),
                );
                d.tags.insert("t".into(), format!("{:?}", t));
                d
            }
            Builtin::Prop52Bounded { t, r, cutoff } => {
                let phi = phi_t(t);
                let rho2 = &phi - &DefiningExpr::constant(cutoff * cutoff, 4);
                let rho = smooth_max(&prop52_rho(), &rho2, r);
                let mut d = spec(
                    "prop52_bounded",
                    4,
                    rho,
                    phi,
                    vec![origin_component(4, 0.5 * cutoff / t.max(1.0).sqrt())],
                    1.5 * cutoff + r,
                    None,
                );
                d.tags.insert("t".into(), format!("{:?}", t));
                d.tags.insert("r".into(), format!("{:?}", r));
                d.tags.insert("R".into(), format!("{:?}", cutoff));
                d
            }
        }
    }
}

pub fn builtin(name: &str, params: &BuiltinParams) -> Result<DomainSpec, DomainError> {
    Ok(Builtin::from_name(name, params)?.domain())
}

/// `-Im z3 + 2x|z2|^2 - x y^4` with `z1 = x + iy`.
pub(crate) fn prop51_rho() -> DefiningExpr {
    parse_expr("-im(z3) + 2*re(z1)*abs2(z2) - re(z1)*im(z1)^4", 3).expect("static expression")
}

/// `-Im z4 + P` with `P = -9|z1|^4 + 6(x^2|z2|^2 + y^2|z3|^2) + |z2|^2|z3|^2 + (|z2|^4 + |z3|^4)/4`.
pub(crate) fn prop52_rho() -> DefiningExpr {
    parse_expr(
        "-im(z4) - 9*abs2(z1)^2 + 6*(re(z1)^2*abs2(z2) + im(z1)^2*abs2(z3)) \
         + abs2(z2)*abs2(z3) + 0.25*(abs2(z2)^2 + abs2(z3)^2)",
        4,
    )
    .expect("static expression")
}

/// `t|z1|^2 + |z2|^2 + |z3|^2 + |z4|^2`.
pub(crate) fn phi_t(t: f64) -> DefiningExpr {
    let z1 = DefiningExpr::var(0, 4).abs2().scale(t);
    let rest = (1..4)
        .map(|j| DefiningExpr::var(j, 4).abs2())
        .reduce(|a, b| &a + &b)
        .expect("three terms");
    &z1 + &rest
}

fn origin_component(n: usize, spread: f64) -> ComponentSpec {
    ComponentSpec {
        label: "origin".into(),
        seed: vec![Complex64::new(0.0, 0.0); n],
        orientation_hint: None,
        spread,
    }
}

fn spec(
    name: &str,
    n: usize,
    rho: DefiningExpr,
    phi: DefiningExpr,
    components: Vec<ComponentSpec>,
    half_width: f64,
    graph_axis: Option<usize>,
) -> DomainSpec {
    DomainSpec {
        name: name.to_string(),
        n,
        rho,
        phi,
        components,
        sample_box: vec![half_width; 2 * n],
        graph_axis,
        tags: BTreeMap::new(),
    }
}
