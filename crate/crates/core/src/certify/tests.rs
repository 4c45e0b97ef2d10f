use num_complex::Complex64;
use proptest::prelude::*;

use super::*;
use crate::domains::{builtin, BuiltinParams};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Best margin over the grid `{0, h, ..., 1}^m` (small `m` only).
fn grid_best_margin(mu: &[f64], q: usize, branch: Branch, steps: usize) -> Option<f64> {
    let m = mu.len();
    let s: f64 = mu[..q].iter().sum();
    let mut idx = vec![0usize; m];
    let mut best: Option<f64> = None;
    loop {
        let lambda: Vec<f64> = idx.iter().map(|&i| i as f64 / steps as f64).collect();
        let w: f64 = lambda.iter().zip(mu).map(|(l, u)| l * u).sum();
        if w <= s + 1e-12 {
            let t: f64 = lambda.iter().sum();
            let d = match branch {
                Branch::Plus => q as f64 - t,
                Branch::Minus => t - q as f64,
            };
            best = Some(best.map_or(d, |b: f64| b.max(d)));
        }
        let mut k = 0;
        loop {
            if k == m {
                return best;
            }
            idx[k] += 1;
            if idx[k] <= steps {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

#[test]
fn zq_status_examples() {
    assert_eq!(z_q_status(&[1.0, 1.0], 1), ZqStatus::ZqPositive);
    assert_eq!(z_q_status(&[-0.09, 0.2], 2), ZqStatus::ZqPositive);
    assert_eq!(z_q_status(&[-1.0, -1.0], 1), ZqStatus::ZqNegative);
    assert_eq!(z_q_status(&[-1.0, 0.0], 1), ZqStatus::NotZq);
    assert_eq!(z_q_status(&[0.0, 1e-11], 2), ZqStatus::NotZq);
}

#[test]
fn lp_examples() {
    assert!(weak_zq_lp(&[-1.0, 2.0], 1, Branch::Plus).is_none());
    assert!(weak_zq_lp(&[-1.0, 2.0], 1, Branch::Minus).is_none());
    let cert = weak_zq_lp(&[0.0, 1.0], 1, Branch::Plus).unwrap();
    assert_eq!(cert.lambda, vec![0.0, 0.0]);
    assert_eq!(cert.slack, 0.0);
    assert_eq!(cert.margin, 1.0);
    let cert = weak_zq_lp(&[0.5, 1.0, 3.0], 2, Branch::Plus).unwrap();
    assert_eq!(cert.margin, 2.0);
    for mu in [[-0.3, 0.4], [0.5, 0.7], [-1.0, -1.0]] {
        assert!(weak_zq_lp(&mu, 0, Branch::Plus).is_none());
    }
}

#[test]
fn lp_matches_grid_on_examples() {
    let mu = [-1.0, 2.0];
    assert_eq!(grid_best_margin(&mu, 1, Branch::Plus, 100), Some(0.0));
    let mu = [0.0, 1.0];
    assert_eq!(grid_best_margin(&mu, 1, Branch::Plus, 100), Some(1.0));
}

#[test]
fn lp_fractional_weights() {
    // S_2 = -3 can only be matched by the full first two weights: trace = q
    assert!(weak_zq_lp(&[-2.0, -1.0, 1.0], 2, Branch::Plus).is_none());
    // S_2 = -1.5 is bought by three quarters of the eigenvalue -2
    let mu = [-2.0, 0.5, 1.0];
    let cert = weak_zq_lp(&mu, 2, Branch::Plus).unwrap();
    assert_eq!(cert.lambda, vec![0.75, 0.0, 0.0]);
    assert_eq!(cert.margin, 1.25);
    assert_eq!(cert.slack, 0.0);
}

#[test]
fn binary_examples() {
    assert_eq!(binary_weak_zq(&[-0.5, 0.0], 2, Branch::Plus), Some(1));
    assert_eq!(binary_weak_zq(&[1.0, 1.0, 1.0], 1, Branch::Plus), Some(0));
    assert_eq!(binary_weak_zq(&[-1.0, -1.0], 1, Branch::Minus), Some(2));
    assert_eq!(binary_weak_zq(&[-1.0, 2.0], 1, Branch::Plus), None);
    assert_eq!(binary_weak_zq(&[-1.0, 2.0], 1, Branch::Minus), None);
}

#[test]
fn duality_example() {
    let mu = [-3.0, -1.0, 2.0];
    let cert = Certificate::from_weights(Branch::Plus, 2, vec![1.0, 0.5, 0.0], &mu).unwrap();
    assert_eq!(cert.slack, -0.5);
    let (dual, mu_d) = duality_transform(&cert, &mu).unwrap();
    assert_eq!(mu_d, vec![-2.0, 1.0, 3.0]);
    assert_eq!(dual.lambda, vec![1.0, 0.5, 0.0]);
    assert_eq!(dual.q, 1);
    assert_eq!(dual.branch, Branch::Minus);
    assert_eq!(dual.slack, -0.5);
    let (back, mu_b) = duality_transform(&dual, &mu_d).unwrap();
    assert_eq!(back, cert);
    assert_eq!(mu_b, mu.to_vec());
}

#[test]
fn duality_of_zero_weights() {
    let mu = [0.1, 0.2, 0.3];
    let cert = Certificate::from_weights(Branch::Plus, 1, vec![0.0; 3], &mu).unwrap();
    let (dual, _) = duality_transform(&cert, &mu).unwrap();
    assert_eq!(dual.lambda, vec![1.0; 3]);
    assert_eq!(dual.trace, 3.0);
}

#[test]
fn duality_rejects_bad_input() {
    let cert = Certificate::from_weights(Branch::Plus, 1, vec![0.0; 3], &[0.1, 0.2, 0.3]).unwrap();
    assert!(duality_transform(&cert, &[0.1, 0.2]).is_err());
    assert!(duality_transform(&cert, &[0.3, 0.2, 0.1]).is_err());
    assert!(Certificate::from_weights(Branch::Plus, 1, vec![1.5, 0.0], &[0.0, 1.0]).is_err());
}

#[test]
fn ball_certifies_with_plus() {
    let d = builtin("ball", &BuiltinParams::default()).unwrap();
    let r = certify_domain(
        &d,
        1,
        &CertifyConfig {
            samples: 100,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(r.verdict, Verdict::Certified);
    assert_eq!(r.components[0].branch, Some(Branch::Plus));
    assert_eq!(r.components[0].samples, 100);
}

#[test]
fn annulus_orientations() {
    let d = builtin("annulus", &BuiltinParams::default()).unwrap();
    let cfg = CertifyConfig {
        samples: 100,
        ..Default::default()
    };
    let r = certify_domain(&d, 1, &cfg).unwrap();
    assert_eq!(r.verdict, Verdict::Certified);
    assert_eq!(r.components[0].branch, Some(Branch::Plus));
    assert_eq!(r.components[1].branch, Some(Branch::Minus));
    let r = certify_domain(&d, 2, &cfg).unwrap();
    assert_eq!(r.verdict, Verdict::InfeasibleAtPoints);
    assert_eq!(r.components[0].branch, Some(Branch::Plus));
    assert_eq!(r.components[1].branch, None);
    assert_eq!(r.components[1].feasible_minus, 0);
}

#[test]
fn certify_rejects_bad_q() {
    let d = builtin("ball", &BuiltinParams::default()).unwrap();
    assert!(matches!(
        certify_domain(&d, 3, &CertifyConfig::default()),
        Err(CertifyError::InvalidQ { .. })
    ));
}

#[test]
fn prop51_field_has_zero_slack() {
    let d = builtin("prop51", &BuiltinParams::default()).unwrap();
    let ups = builtin_upsilon("prop51-upsilon(0.1)", &d).unwrap();
    let (x, y, z2) = (0.1, -0.15, c(0.05, 0.08));
    let p = [
        c(x, y),
        z2,
        c(0.02, 2.0 * x * z2.norm_sqr() - x * y.powi(4)),
    ];
    let chk = check_upsilon_at(&d, &ups, 2, &p, false, UPSILON_TOL).unwrap();
    assert!(chk.slack.abs() < 1e-12, "slack {}", chk.slack);
    assert!(chk.condition1 && chk.condition2);
    assert!(chk.trace < 2.0 - 0.1);
}

#[test]
fn prop52_euclidean_witness() {
    let d = builtin(
        "prop52",
        &BuiltinParams {
            t: Some(1.0),
            ..Default::default()
        },
    )
    .unwrap();
    let ups = builtin_upsilon("prop52-L1", &d).unwrap();
    for eps in [0.02, 0.05] {
        let p = [
            c(0.0, 0.0),
            c(eps, 0.0),
            c(0.0, 0.0),
            c(0.3, 0.25 * eps.powi(4)),
        ];
        let chk = check_upsilon_at(&d, &ups, 2, &p, false, UPSILON_TOL).unwrap();
        let v = chk.direction_values[0];
        assert!(
            (v / -(eps * eps) - 1.0).abs() < 0.2,
            "eps {} value {}",
            eps,
            v
        );
        assert!(!chk.condition2);
    }
}

#[test]
fn prop52_certificate_at_t6() {
    let d = builtin(
        "prop52",
        &BuiltinParams {
            t: Some(6.0),
            ..Default::default()
        },
    )
    .unwrap();
    let ups = builtin_upsilon("prop52-L1", &d).unwrap();
    let cfg = CertifyConfig {
        samples: 200,
        normalize: false,
        ..Default::default()
    };
    let r = certify_with_upsilon(&d, &ups, 2, &cfg).unwrap();
    assert_eq!(
        r.verdict,
        Verdict::Certified,
        "{:?}",
        r.components[0].failures.first()
    );
}

#[test]
fn upsilon_frame_mismatch() {
    let d = builtin("ball", &BuiltinParams::default()).unwrap();
    assert!(matches!(
        builtin_upsilon("prop52-L1", &d),
        Err(CertifyError::FrameMismatch(_))
    ));
    assert!(matches!(
        builtin_upsilon("nope", &d),
        Err(CertifyError::UnknownUpsilon(_))
    ));
}

#[test]
fn upsilon_file_roundtrip() {
    let f = UpsilonFile {
        name: Some("half".into()),
        pivot: None,
        scales: None,
        inverse_gram: Some(0.5),
        entries: None,
    };
    let d = builtin("ball", &BuiltinParams::default()).unwrap();
    let ups = f.into_field(3).unwrap();
    let p = [c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.0)];
    let chk = check_upsilon_at(&d, &ups, 1, &p, true, UPSILON_TOL).unwrap();
    assert!((chk.trace - 1.0).abs() < 1e-12);
    // sphere: mu = (1, 1), L(Υ) = 1 = mu_1
    assert!(chk.slack.abs() < 1e-12);
}

fn spectrum(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 2..=max_len).prop_map(|mut v| {
        v.sort_by(f64::total_cmp);
        v
    })
}

proptest! {
    #[test]
    fn lp_agrees_with_dual(mu in spectrum(6), qs in 0usize..7, plus in any::<bool>()) {
        let q = qs.min(mu.len());
        let branch = if plus { Branch::Plus } else { Branch::Minus };
        let primal = lp_optimal_trace(&mu, q, branch).unwrap();
        let dual = lp_dual_trace(&mu, q, branch).unwrap();
        prop_assert!((primal - dual).abs() <= 1e-12 * mu.len() as f64, "primal {} dual {}", primal, dual);
    }

    #[test]
    fn lp_agrees_with_grid(mu in spectrum(3), qs in 0usize..4, plus in any::<bool>()) {
        let q = qs.min(mu.len());
        let branch = if plus { Branch::Plus } else { Branch::Minus };
        let grid = grid_best_margin(&mu, q, branch, 50).unwrap();
        match weak_zq_lp(&mu, q, branch) {
            Some(c) => prop_assert!(c.margin >= grid - 1e-12 && c.margin <= grid + 0.03 + 1e-12),
            None => prop_assert!(grid <= 0.03),
        }
    }

    #[test]
    fn certificates_are_valid(mu in spectrum(6), qs in 0usize..7, plus in any::<bool>()) {
        let q = qs.min(mu.len());
        let branch = if plus { Branch::Plus } else { Branch::Minus };
        if let Some(c) = weak_zq_lp(&mu, q, branch) {
            prop_assert!(c.lambda.iter().all(|l| (0.0..=1.0).contains(l)));
            prop_assert!(c.slack >= -1e-12);
            prop_assert!(c.margin > LP_ABSENT_TOL);
            let n = mu.len() + 1;
            match branch {
                Branch::Plus => prop_assert!(mu.iter().filter(|&&m| m >= -1e-9).count() >= n - q),
                Branch::Minus => prop_assert!(mu.iter().filter(|&&m| m <= 1e-9).count() > q),
            }
        }
    }

    #[test]
    fn strict_zq_implies_weak(mu in spectrum(6), qs in 1usize..6) {
        let q = qs.min(mu.len());
        match z_q_status(&mu, q) {
            ZqStatus::ZqPositive => prop_assert!(weak_zq_lp(&mu, q, Branch::Plus).is_some()),
            ZqStatus::ZqNegative => prop_assert!(weak_zq_lp(&mu, q, Branch::Minus).is_some()),
            ZqStatus::NotZq => {}
        }
    }

    #[test]
    fn binary_implies_lp(mu in spectrum(6), qs in 0usize..7, plus in any::<bool>()) {
        let q = qs.min(mu.len());
        let branch = if plus { Branch::Plus } else { Branch::Minus };
        if let Some(m) = binary_weak_zq(&mu, q, branch) {
            let c = weak_zq_lp(&mu, q, branch).expect("binary certificate implies LP certificate");
            prop_assert!(c.margin >= (m as f64 - q as f64).abs() - 1e-9);
        }
    }

    #[test]
    fn duality_identities(mu in spectrum(6), qs in 0usize..7, seed in prop::collection::vec(0.0f64..=1.0, 6)) {
        let q = qs.min(mu.len());
        let lambda = seed[..mu.len()].to_vec();
        let cert = Certificate::from_weights(Branch::Plus, q, lambda, &mu).unwrap();
        let (dual, mu_d) = duality_transform(&cert, &mu).unwrap();
        prop_assert!((dual.slack - cert.slack).abs() <= 1e-12);
        prop_assert!(mu_d.windows(2).all(|w| w[0] <= w[1]));
        let (back, mu_b) = duality_transform(&dual, &mu_d).unwrap();
        prop_assert_eq!(back, cert);
        prop_assert_eq!(mu_b, mu);
    }

    #[test]
    fn dual_feasibility_is_symmetric(mu in spectrum(6), qs in 0usize..7, plus in any::<bool>()) {
        let q = qs.min(mu.len());
        let branch = if plus { Branch::Plus } else { Branch::Minus };
        let mu_d: Vec<f64> = mu.iter().rev().map(|m| -m).collect();
        let a = weak_zq_lp(&mu, q, branch);
        let b = weak_zq_lp(&mu_d, mu.len() - q, branch.flip());
        prop_assert_eq!(a.is_some(), b.is_some());
        if let (Some(a), Some(b)) = (a, b) {
            prop_assert!((a.margin - b.margin).abs() < 1e-12);
        }
    }

    #[test]
    fn scaling_spectrum(mu in spectrum(6), qs in 0usize..7, plus in any::<bool>(), scale in 0.01f64..100.0) {
        let q = qs.min(mu.len());
        let branch = if plus { Branch::Plus } else { Branch::Minus };
        let scaled: Vec<f64> = mu.iter().map(|m| m * scale).collect();
        let a = weak_zq_lp(&mu, q, branch);
        let b = weak_zq_lp(&scaled, q, branch);
        prop_assert_eq!(a.is_some(), b.is_some());
        if let (Some(a), Some(b)) = (a, b) {
            prop_assert!((a.margin - b.margin).abs() < 1e-12);
            prop_assert!((a.slack * scale - b.slack).abs() < 1e-12 * (1.0 + scale));
            for (x, y) in a.lambda.iter().zip(&b.lambda) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
