//! Tensor-product quadrature over boxes in `C^n = R^{2n}`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::MkhError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureRule {
    Midpoint,
    GaussLegendre,
}

/// Axes are ordered `(Re z_1, Im z_1, Re z_2, ...)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadratureGrid {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub points: usize,
    pub rule: QuadratureRule,
}

impl QuadratureGrid {
    pub fn new(
        lo: Vec<f64>,
        hi: Vec<f64>,
        points: usize,
        rule: QuadratureRule,
    ) -> Result<Self, MkhError> {
        if lo.len() != hi.len() || lo.len() % 2 != 0 || lo.is_empty() {
            return Err(MkhError::InvalidGrid(format!(
                "{} lower and {} upper bounds",
                lo.len(),
                hi.len()
            )));
        }
        if points == 0 {
            return Err(MkhError::InvalidGrid("zero points per axis".into()));
        }
        if lo
            .iter()
            .zip(&hi)
            .any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite())
        {
            return Err(MkhError::InvalidGrid("empty or unbounded axis".into()));
        }
        Ok(Self {
            lo,
            hi,
            points,
            rule,
        })
    }

    /// `[-half, half]^{2n}`.
    pub fn cube(
        n: usize,
        half: f64,
        points: usize,
        rule: QuadratureRule,
    ) -> Result<Self, MkhError> {
        Self::new(vec![-half; 2 * n], vec![half; 2 * n], points, rule)
    }

    pub fn nvars(&self) -> usize {
        self.lo.len() / 2
    }

    /// Same box with twice the points per axis.
    pub fn refine(&self) -> Self {
        Self {
            points: 2 * self.points,
            ..self.clone()
        }
    }

    pub fn step(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / self.points as f64
    }

    /// Nodes and weights along one axis.
    pub fn axis_rule(&self, axis: usize) -> (Vec<f64>, Vec<f64>) {
        let (a, b) = (self.lo[axis], self.hi[axis]);
        match self.rule {
            QuadratureRule::Midpoint => {
                let h = self.step(axis);
                (
                    (0..self.points).map(|i| a + (i as f64 + 0.5) * h).collect(),
                    vec![h; self.points],
                )
            }
            QuadratureRule::GaussLegendre => {
                let (x, w) = gauss_legendre(self.points);
                let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
                (
                    x.iter().map(|t| mid + half * t).collect(),
                    w.iter().map(|w| half * w).collect(),
                )
            }
        }
    }

    /// Integrate a vector-valued function. Tiles are the first two axes; each
    /// tile is summed pairwise in a fixed order, so the result does not depend
    /// on the number of threads.
    pub fn integrate<const K: usize, F>(&self, f: F) -> [f64; K]
    where
        F: Fn(&[Complex64]) -> [f64; K] + Sync,
    {
        let d = self.lo.len();
        let rules: Vec<(Vec<f64>, Vec<f64>)> = (0..d).map(|a| self.axis_rule(a)).collect();
        let m = self.points;
        let n = d / 2;
        let tiles: Vec<[f64; K]> = (0..m * m)
            .into_par_iter()
            .map(|tile| {
                let (i0, i1) = (tile / m, tile % m);
                let mut idx = vec![0usize; d - 2];
                let inner = m.pow((d - 2) as u32);
                let mut vals = Vec::with_capacity(inner);
                let mut z = vec![Complex64::new(0.0, 0.0); n];
                let w01 = rules[0].1[i0] * rules[1].1[i1];
                z[0] = Complex64::new(rules[0].0[i0], rules[1].0[i1]);
                for _ in 0..inner {
                    let mut w = w01;
                    for (k, &i) in idx.iter().enumerate() {
                        w *= rules[k + 2].1[i];
                    }
                    for j in 1..n {
                        z[j] = Complex64::new(
                            rules[2 * j].0[idx[2 * j - 2]],
                            rules[2 * j + 1].0[idx[2 * j - 1]],
                        );
                    }
                    let v = f(&z);
                    vals.push(v.map(|x| x * w));
                    for slot in idx.iter_mut().rev() {
                        *slot += 1;
                        if *slot < m {
                            break;
                        }
                        *slot = 0;
                    }
                }
                pairwise_sum(&vals)
            })
            .collect();
        pairwise_sum(&tiles)
    }
}

/// Pairwise (cascade) summation of fixed-size vectors.
pub fn pairwise_sum<const K: usize>(v: &[[f64; K]]) -> [f64; K] {
    match v.len() {
        0 => [0.0; K],
        1 => v[0],
        len if len <= 8 => {
            let mut acc = [0.0; K];
            for x in v {
                for (a, b) in acc.iter_mut().zip(x) {
                    *a += b;
                }
            }
            acc
        }
        len => {
            let (a, b) = v.split_at(len / 2);
            let (sa, sb) = (pairwise_sum(a), pairwise_sum(b));
            std::array::from_fn(|k| sa[k] + sb[k])
        }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    let mf = m as f64;
    for i in 0..m.div_ceil(2) {
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // three-term recurrence for P_m and P_m'
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=m {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pm = if m == 0 { 1.0 } else { p1 };
            let pm1 = if m == 1 { 1.0 } else { p0 };
            dp = mf * (t * pm - pm1) / (t * t - 1.0);
            let dt = pm / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - t * t) * dp * dp);
        x[i] = -t;
        x[m - 1 - i] = t;
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_small_orders() {
        let (x, w) = gauss_legendre(2);
        let r = 1.0 / 3f64.sqrt();
        assert!((x[0] + r).abs() < 1e-15 && (x[1] - r).abs() < 1e-15);
        assert!((w[0] - 1.0).abs() < 1e-15);
        let (x, w) = gauss_legendre(3);
        assert!(x[1].abs() < 1e-15);
        assert!((w[1] - 8.0 / 9.0).abs() < 1e-14);
        assert!((x[2] - 0.6f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        for m in [4, 7, 12, 25] {
            let (x, w) = gauss_legendre(m);
            for deg in 0..2 * m {
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 {
                    0.0
                } else {
                    2.0 / (deg as f64 + 1.0)
                };
                assert!((got - exact).abs() < 1e-13, "m={} deg={}", m, deg);
            }
        }
    }

    #[test]
    fn midpoint_refinement_halves_step() {
        let g = QuadratureGrid::cube(1, 1.0, 6, QuadratureRule::Midpoint).unwrap();
        assert_eq!(g.refine().step(0), g.step(0) / 2.0);
    }

    #[test]
    fn box_volume_and_moments() {
        for rule in [QuadratureRule::Midpoint, QuadratureRule::GaussLegendre] {
            let g = QuadratureGrid::new(
                vec![-1.0, 0.0, 0.0, -2.0],
                vec![1.0, 1.0, 3.0, 2.0],
                5,
                rule,
            )
            .unwrap();
            let [vol, x2] = g.integrate(|z| [1.0, z[0].re * z[0].re]);
            assert!((vol - 24.0).abs() < 1e-12);
            let exact = 2.0 / 3.0 * 12.0;
            // midpoint error for x^2 is -h^2/24 (f'(1) - f'(-1)) per unit of the other axes
            let expect = match rule {
                QuadratureRule::Midpoint => exact - 0.4f64.powi(2) / 24.0 * 4.0 * 12.0,
                QuadratureRule::GaussLegendre => exact,
            };
            assert!((x2 - expect).abs() < 1e-12, "{:?} {}", rule, x2);
        }
    }

    #[test]
    fn thread_count_independent() {
        let g = QuadratureGrid::cube(2, 1.0, 9, QuadratureRule::Midpoint).unwrap();
        let f = |z: &[Complex64]| [(z[0] * z[1]).norm_sqr().sin() + z[1].im];
        let a = g.integrate(f);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool.install(|| g.integrate(f));
        assert_eq!(a[0].to_bits(), b[0].to_bits());
    }

    #[test]
    fn rejects_bad_boxes() {
        assert!(QuadratureGrid::new(vec![0.0], vec![1.0], 4, QuadratureRule::Midpoint).is_err());
        assert!(
            QuadratureGrid::new(vec![0.0, 0.0], vec![1.0, 0.0], 4, QuadratureRule::Midpoint)
                .is_err()
        );
        assert!(QuadratureGrid::cube(1, 1.0, 0, QuadratureRule::Midpoint).is_err());
    }
}
