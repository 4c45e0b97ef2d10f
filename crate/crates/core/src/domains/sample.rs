//! Deterministic boundary sampling.
//!
//! Attempt `i` of a run draws from its own ChaCha stream position, so the
//! attempts can be evaluated in any order (or in parallel) and still produce
//! bit-identical output for a given seed.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{DomainError, DomainSpec};
use crate::expr::DefiningExpr;
use crate::geometry::{BOUNDARY_TOL, DEGENERATE_GRADIENT};

const MAX_NEWTON: usize = 50;
const MAX_HALVINGS: usize = 30;
const WORDS_PER_ATTEMPT: u128 = 256;

/// Where to draw ambient points.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRegion {
    pub center: Vec<Complex64>,
    pub spread: f64,
    /// Projected points farther than this from `center` are rejected.
    pub accept_radius: f64,
    /// Stream id, so that different regions draw independent sequences.
    pub stream: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleOutcome {
    pub points: Vec<Vec<Complex64>>,
    pub attempts: usize,
    /// Attempts rejected because `|d rho|` became too small.
    pub degenerate: usize,
}

impl SampleOutcome {
    pub fn degenerate_fraction(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.degenerate as f64 / self.attempts as f64
        }
    }
}

enum Attempt {
    Point(Vec<Complex64>),
    Degenerate,
    Rejected,
}

/// Sample `count` boundary points of the declared component.
pub fn sample_boundary(
    dom: &DomainSpec,
    component: usize,
    count: usize,
    seed: u64,
) -> Result<SampleOutcome, DomainError> {
    let c = dom.component(component)?;
    let region = SampleRegion {
        center: c.seed.clone(),
        spread: c.spread,
        accept_radius: 2.0 * c.spread,
        stream: component as u64,
    };
    sample_region(dom, &region, count, seed)
}

pub fn sample_region(
    dom: &DomainSpec,
    region: &SampleRegion,
    count: usize,
    seed: u64,
) -> Result<SampleOutcome, DomainError> {
    if region.center.len() != dom.n {
        return Err(DomainError::InvalidParams(format!(
            "sampling center has {} coordinates, domain has {}",
            region.center.len(),
            dom.n
        )));
    }
    let max_attempts = 100 * count.max(1);
    let mut out = SampleOutcome {
        points: Vec::with_capacity(count),
        attempts: 0,
        degenerate: 0,
    };
    let batch = (2 * count).clamp(16, 4096);
    let mut next = 0usize;
    while out.points.len() < count && next < max_attempts {
        let end = (next + batch).min(max_attempts);
        let results: Vec<Attempt> = (next..end)
            .into_par_iter()
            .map(|i| attempt(dom, region, seed, i))
            .collect();
        for r in results {
            if out.points.len() == count {
                break;
            }
            out.attempts += 1;
            match r {
                Attempt::Point(p) => out.points.push(p),
                Attempt::Degenerate => out.degenerate += 1,
                Attempt::Rejected => {}
            }
        }
        next = end;
    }
    if out.points.len() < count {
        return Err(DomainError::SamplingFailure {
            requested: count,
            found: out.points.len(),
            attempts: out.attempts,
        });
    }
    Ok(out)
}

fn attempt_rng(seed: u64, stream: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(i as u128 * WORDS_PER_ATTEMPT);
    rng
}

/// Uniform point of the unit ball in `R^dim`.
fn unit_ball(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        if v.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
            return v;
        }
    }
}

fn attempt(dom: &DomainSpec, region: &SampleRegion, seed: u64, i: usize) -> Attempt {
    let mut rng = attempt_rng(seed, region.stream, i);
    let n = dom.n;
    let point = match dom.graph_axis {
        Some(k) => {
            // draw (z', Re z_k) and solve rho = 0 for Im z_k exactly
            let v = unit_ball(&mut rng, 2 * n - 1);
            let mut it = v.into_iter().map(|x| x * region.spread);
            let mut p = region.center.clone();
            for (j, pj) in p.iter_mut().enumerate() {
                if j == k {
                    *pj = Complex64::new(pj.re + it.next().expect("dim"), 0.0);
                } else {
                    let re = it.next().expect("dim");
                    let im = it.next().expect("dim");
                    *pj += Complex64::new(re, im);
                }
            }
            match dom.rho.eval_real(&p) {
                Ok(height) => {
                    p[k].im = height;
                    p
                }
                Err(_) => return Attempt::Rejected,
            }
        }
        None => {
            let v = unit_ball(&mut rng, 2 * n);
            let start: Vec<Complex64> = region
                .center
                .iter()
                .enumerate()
                .map(|(j, c)| c + Complex64::new(v[2 * j], v[2 * j + 1]) * region.spread)
                .collect();
            match newton_project(&dom.rho, &start) {
                Ok(p) => p,
                Err(ProjectError::Degenerate) => return Attempt::Degenerate,
                Err(ProjectError::NoConvergence) => return Attempt::Rejected,
            }
        }
    };
    let dist = point
        .iter()
        .zip(&region.center)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    if dist > region.accept_radius {
        return Attempt::Rejected;
    }
    match dom.rho.jet(&point) {
        Ok(j) => {
            if j.val.norm() > BOUNDARY_TOL {
                return Attempt::Rejected;
            }
            let g: f64 = j.grad[..n].iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            if g <= DEGENERATE_GRADIENT {
                return Attempt::Degenerate;
            }
            Attempt::Point(point)
        }
        Err(_) => Attempt::Rejected,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectError {
    Degenerate,
    NoConvergence,
}

/// Newton projection onto `{rho = 0}` along the real gradient, halving the
/// step until `|rho|` decreases.
pub fn newton_project(
    rho: &DefiningExpr,
    start: &[Complex64],
) -> Result<Vec<Complex64>, ProjectError> {
    let n = start.len();
    let mut p = start.to_vec();
    let mut val = rho.eval_real(&p).map_err(|_| ProjectError::NoConvergence)?;
    for _ in 0..MAX_NEWTON {
        if val.abs() <= 1e-14 {
            return Ok(p);
        }
        let jet = rho.jet(&p).map_err(|_| ProjectError::NoConvergence)?;
        // real gradient: d/dx = 2 Re(d/dz), d/dy = -2 Im(d/dz)
        let grad: Vec<(f64, f64)> = (0..n)
            .map(|j| (2.0 * jet.grad[j].re, -2.0 * jet.grad[j].im))
            .collect();
        let g2: f64 = grad.iter().map(|(a, b)| a * a + b * b).sum();
        if g2.sqrt() <= 2.0 * DEGENERATE_GRADIENT {
            return Err(ProjectError::Degenerate);
        }
        let scale = -val / g2;
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<Complex64> = p
                .iter()
                .zip(&grad)
                .map(|(z, &(gx, gy))| z + Complex64::new(gx, gy) * (step * scale))
                .collect();
            if let Ok(v) = rho.eval_real(&trial) {
                if v.abs() < val.abs() {
                    p = trial;
                    val = v;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if val.abs() <= BOUNDARY_TOL {
        Ok(p)
    } else {
        Err(ProjectError::NoConvergence)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{builtin, BuiltinParams, ComponentSpec};

    #[test]
    fn ball_samples_lie_on_sphere() {
        let d = builtin("ball", &BuiltinParams::default()).unwrap();
        let s = sample_boundary(&d, 0, 100, 1).unwrap();
        assert_eq!(s.points.len(), 100);
        for p in &s.points {
            let r2: f64 = p.iter().map(|z| z.norm_sqr()).sum();
            assert!((r2 - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let d = builtin("annulus", &BuiltinParams::default()).unwrap();
        let a = sample_boundary(&d, 1, 50, 42).unwrap();
        let b = sample_boundary(&d, 1, 50, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_boundary(&d, 1, 50, 43).unwrap();
        assert_ne!(a.points, c.points);
    }

    #[test]
    fn annulus_components_stay_separate() {
        let d = builtin("annulus", &BuiltinParams::default()).unwrap();
        for (comp, r) in [(0, 1.0), (1, 0.5)] {
            let s = sample_boundary(&d, comp, 64, 3).unwrap();
            for p in &s.points {
                let r2: f64 = p.iter().map(|z| z.norm_sqr()).sum();
                assert!(
                    (r2.sqrt() - r).abs() < 1e-9,
                    "component {} point radius {}",
                    comp,
                    r2.sqrt()
                );
            }
        }
    }

    #[test]
    fn graph_domain_uses_exact_parametrization() {
        let d = builtin("prop51", &BuiltinParams::default()).unwrap();
        let s = sample_boundary(&d, 0, 100, 9).unwrap();
        assert_eq!(s.attempts, 100);
        for p in &s.points {
            let (x, y) = (p[0].re, p[0].im);
            let pv = 2.0 * x * p[1].norm_sqr() - x * y.powi(4);
            assert!((p[2].im - pv).abs() < 1e-15);
        }
    }

    #[test]
    fn degenerate_component_fails() {
        let rho = crate::expr::parse_expr("abs2(z1)^2 + abs2(z2)^2", 2).unwrap();
        let mut d = builtin(
            "ball",
            &BuiltinParams {
                n: Some(2),
                ..Default::default()
            },
        )
        .unwrap();
        d.rho = rho;
        d.components = vec![ComponentSpec {
            label: "flat".into(),
            seed: vec![Complex64::new(0.0, 0.0); 2],
            orientation_hint: None,
            spread: 0.1,
        }];
        let err = sample_boundary(&d, 0, 10, 0).unwrap_err();
        assert!(matches!(
            err,
            DomainError::SamplingFailure {
                requested: 10,
                found: 0,
                ..
            }
        ));
    }
}
