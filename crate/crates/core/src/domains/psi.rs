//! Convex C^3 smoothing of `|x|` and the smooth maximum of two defining functions.

use serde::{Deserialize, Serialize};

use crate::expr::DefiningExpr;

/// Coefficients of the even sextic `a + b x^2 + c x^4 + d x^6` that meets `|x|`
/// at `x = ±1` with matching value and first three derivatives.
pub const C3_COEFFS: [f64; 4] = [5.0 / 16.0, 15.0 / 16.0, -5.0 / 16.0, 1.0 / 16.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothMaxConfig {
    pub r: f64,
    pub coeffs: [f64; 4],
}

impl SmoothMaxConfig {
    pub fn new(r: f64) -> Self {
        Self {
            r,
            coeffs: C3_COEFFS,
        }
    }

    /// Worst violation of the C^3 matching conditions at `x = 1`.
    pub fn matching_defect(&self) -> f64 {
        let [a, b, c, d] = self.coeffs;
        let conds = [
            a + b + c + d - 1.0,
            2.0 * b + 4.0 * c + 6.0 * d - 1.0,
            2.0 * b + 12.0 * c + 30.0 * d,
            24.0 * c + 120.0 * d,
        ];
        conds.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

impl Default for SmoothMaxConfig {
    fn default() -> Self {
        Self::new(1.0)
    }
}

/// Value and derivatives up to third order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiValue {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

/// `psi(x)` for the unit-width smoothing (the radius in `cfg` is ignored).
pub fn psi_unit(x: f64, coeffs: &[f64; 4]) -> PsiValue {
    if x.abs() >= 1.0 {
        return PsiValue {
            value: x.abs(),
            d1: x.signum(),
            d2: 0.0,
            d3: 0.0,
        };
    }
    let [a, b, c, d] = *coeffs;
    let x2 = x * x;
    PsiValue {
        value: a + x2 * (b + x2 * (c + x2 * d)),
        d1: x * (2.0 * b + x2 * (4.0 * c + x2 * 6.0 * d)),
        d2: 2.0 * b + x2 * (12.0 * c + x2 * 30.0 * d),
        d3: x * (24.0 * c + x2 * 120.0 * d),
    }
}

/// `psi_r(x) = r psi(x / r)` and its derivatives.
pub fn psi_eval(x: f64, cfg: &SmoothMaxConfig) -> PsiValue {
    let r = cfg.r;
    let u = psi_unit(x / r, &cfg.coeffs);
    PsiValue {
        value: r * u.value,
        d1: u.d1,
        d2: u.d2 / r,
        d3: u.d3 / (r * r),
    }
}

pub(crate) fn psi_r(x: f64, r: f64) -> PsiValue {
    psi_eval(x, &SmoothMaxConfig::new(r))
}

/// `1/2 psi_r(x - y) + 1/2 (x + y)`, returning `max(x, y)` itself outside the band.
pub fn smooth_max_value(x: f64, y: f64, r: f64) -> f64 {
    let d = x - y;
    if d.abs() >= r {
        x.max(y)
    } else {
        0.5 * psi_r(d, r).value + 0.5 * (x + y)
    }
}

/// `1/2 psi_r(rho1 - rho2) + 1/2 (rho1 + rho2)`: equals `max(rho1, rho2)` wherever
/// `|rho1 - rho2| >= r`.
pub fn smooth_max(rho1: &DefiningExpr, rho2: &DefiningExpr, r: f64) -> DefiningExpr {
    assert!(r > 0.0, "smoothing radius must be positive");
    rho1.smooth_max(rho2, r)
}
