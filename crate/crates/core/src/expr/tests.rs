use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use super::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

const PROP51: &str = "-im(z3)+2*re(z1)*abs2(z2)-re(z1)*im(z1)^4";
const PROP52: &str = "-im(z4) - 9*abs2(z1)^2 + 6*(re(z1)^2*abs2(z2) + im(z1)^2*abs2(z3)) \
                      + abs2(z2)*abs2(z3) + 0.25*(abs2(z2)^2 + abs2(z3)^2)";

#[test]
fn parses_sphere() {
    let e = parse_expr("abs2(z1)+abs2(z2)-1", 2).unwrap();
    assert_eq!(e.nvars(), 2);
    assert_eq!(e.eval_real(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap(), 0.0);
    assert_eq!(e.eval_real(&[c(0.0, 2.0), c(1.0, 0.0)]).unwrap(), 4.0);
}

#[test]
fn syntax_error_position() {
    assert_eq!(
        parse_expr("re(z1", 1).unwrap_err(),
        ExprError::Syntax {
            column: 6,
            message: "expected `)`, found end of input".into()
        }
    );
    assert!(matches!(
        parse_expr("1 + * 2", 1),
        Err(ExprError::Syntax { column: 5, .. })
    ));
    assert!(matches!(
        parse_expr("z1 z2", 2),
        Err(ExprError::Syntax { .. })
    ));
}

#[test]
fn identifier_errors() {
    assert_eq!(
        parse_expr("abs2(z1) + sin(z1)", 1).unwrap_err(),
        ExprError::UnknownIdentifier {
            name: "sin".into(),
            column: 12
        }
    );
    assert_eq!(
        parse_expr("z3", 2).unwrap_err(),
        ExprError::VariableOutOfRange { index: 3, nvars: 2 }
    );
    assert_eq!(
        parse_expr("z0", 2).unwrap_err(),
        ExprError::VariableOutOfRange { index: 0, nvars: 2 }
    );
}

#[test]
fn unary_minus_binds_to_base() {
    // -z1^2 is (-z1)^2 in this grammar
    let e = parse_expr("-re(z1)^2", 1).unwrap();
    assert_eq!(e.eval_real(&[c(3.0, 0.0)]).unwrap(), 9.0);
    let e = parse_expr("0-re(z1)^2", 1).unwrap();
    assert_eq!(e.eval_real(&[c(3.0, 0.0)]).unwrap(), -9.0);
}

#[test]
fn scientific_numbers() {
    let e = parse_expr("1.5e-3*re(z1) + 2E2", 1).unwrap();
    assert!((e.eval_real(&[c(1000.0, 0.0)]).unwrap() - 201.5).abs() < 1e-12);
}

#[test]
fn prop51_on_graph_is_zero() {
    let e = parse_expr(PROP51, 3).unwrap();
    // P(0.1+0.2i, 0.3) = 2(0.1)(0.09) - 0.1(0.2)^4 = 0.018 - 0.00016 = 0.01784
    let p = 0.01784;
    let v = e.eval_real(&[c(0.1, 0.2), c(0.3, 0.0), c(0.0, p)]).unwrap();
    assert!(v.abs() < 1e-15, "{}", v);
}

#[test]
fn phi_t_at_unit_vector() {
    let e = parse_expr("6*abs2(z1)+abs2(z2)+abs2(z3)+abs2(z4)", 4).unwrap();
    assert_eq!(
        e.eval_real(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])
            .unwrap(),
        6.0
    );
}

#[test]
fn non_real_expression() {
    let e = parse_expr("z1", 1).unwrap();
    assert!(matches!(
        e.eval_real(&[c(0.0, 1.0)]),
        Err(ExprError::NotReal { .. })
    ));
    assert_eq!(e.eval_real(&[c(0.5, 0.0)]).unwrap(), 0.5);
    assert!(matches!(
        e.eval_real(&[c(0.5, 0.0), c(0.0, 0.0)]),
        Err(ExprError::DimensionMismatch { .. })
    ));
}

#[test]
fn non_finite_detected() {
    let e = parse_expr("abs2(z1)^40", 1).unwrap();
    assert_eq!(
        e.eval_real(&[c(1e10, 0.0)]).unwrap_err(),
        ExprError::NonFinite
    );
    assert!(e.jet(&[c(1e10, 0.0)]).is_err());
}

#[test]
fn norm_squared_jet() {
    let e = DefiningExpr::norm2(3);
    let p = [c(0.3, -0.2), c(1.0, 0.5), c(-0.7, 0.1)];
    let j = wirtinger_jet2(&e, &p).unwrap();
    for k in 0..3 {
        assert!((j.dz[k] - p[k].conj()).norm() < 1e-15);
        assert!((j.dzbar[k] - p[k]).norm() < 1e-15);
    }
    assert!((&j.dzdzbar - DMatrix::<Complex64>::identity(3, 3)).norm() < 1e-15);
    assert!(j.dzdz.norm() < 1e-15);
}

#[test]
fn prop51_levi_block() {
    let e = parse_expr(PROP51, 3).unwrap();
    let (x, y) = (0.13, -0.27);
    let z2 = c(0.4, 0.15);
    let j = wirtinger_jet2(&e, &[c(x, y), z2, c(0.2, 0.9)]).unwrap();
    let h = &j.dzdzbar;
    assert!((h[(0, 0)] - c(-3.0 * x * y * y, 0.0)).norm() < 1e-14);
    assert!((h[(0, 1)] - z2).norm() < 1e-14);
    assert!((h[(1, 0)] - z2.conj()).norm() < 1e-14);
    assert!((h[(1, 1)] - c(2.0 * x, 0.0)).norm() < 1e-14);
    for k in 0..3 {
        assert!(h[(2, k)].norm() < 1e-15 && h[(k, 2)].norm() < 1e-15);
    }
}

/// Entries of `i ddbar rho` displayed for the second example.
fn prop52_hessian(z: &[Complex64]) -> DMatrix<Complex64> {
    let (x, y) = (z[0].re, z[0].im);
    let (a1, a2, a3) = (z[0].norm_sqr(), z[1].norm_sqr(), z[2].norm_sqr());
    let mut h = DMatrix::from_element(4, 4, c(0.0, 0.0));
    h[(0, 0)] = c(-36.0 * a1 + 3.0 * a2 + 3.0 * a3, 0.0);
    h[(1, 1)] = c(6.0 * x * x + a2 + a3, 0.0);
    h[(2, 2)] = c(6.0 * y * y + a2 + a3, 0.0);
    h[(0, 1)] = z[1] * 6.0 * x;
    h[(1, 0)] = z[1].conj() * 6.0 * x;
    h[(0, 2)] = c(0.0, -6.0 * y) * z[2];
    h[(2, 0)] = c(0.0, 6.0 * y) * z[2].conj();
    h[(1, 2)] = z[1].conj() * z[2];
    h[(2, 1)] = z[1] * z[2].conj();
    h
}

#[test]
fn prop52_hessian_matches_display() {
    let e = parse_expr(PROP52, 4).unwrap();
    let z = [c(0.01, 0.0), c(0.02, 0.0), c(0.03, 0.0), c(0.0, 0.0)];
    let j = wirtinger_jet2(&e, &z).unwrap();
    assert!((&j.dzdzbar - prop52_hessian(&z)).norm() < 1e-10);
    let z = [c(0.05, -0.03), c(-0.02, 0.07), c(0.04, 0.01), c(0.3, 0.2)];
    let j = wirtinger_jet2(&e, &z).unwrap();
    assert!((&j.dzdzbar - prop52_hessian(&z)).norm() < 1e-14);
}

#[test]
fn display_roundtrip_examples() {
    for (text, n) in [
        (PROP51, 3),
        (PROP52, 4),
        ("psi(re(z1)-0.5, 0.25) + (1+2*i)*conj(z2)*z1", 2),
        ("smax(re(z1), -re(z1), 0.5)", 1),
    ] {
        let e = parse_expr(text, n).unwrap();
        let back = parse_expr(&e.to_string(), n).unwrap();
        // complex constants print as `(a+b*i)`, so compare values rather than trees
        let p: Vec<Complex64> = (0..n)
            .map(|k| c(0.1 * k as f64 + 0.2, 0.3 - 0.05 * k as f64))
            .collect();
        assert_eq!(
            back.eval_complex(&p).unwrap(),
            e.eval_complex(&p).unwrap(),
            "{}",
            e
        );
    }
}

#[test]
fn aliases() {
    let e = parse_expr_with_aliases("s^2 + re(z2)", 2, &[("s", 0)]).unwrap();
    assert_eq!(
        e.eval_complex(&[c(3.0, 0.0), c(1.0, 0.0)]).unwrap(),
        c(10.0, 0.0)
    );
}

#[test]
fn compose_linear_matches_substitution() {
    let e = parse_expr(PROP51, 3).unwrap();
    let s = 0.5f64.sqrt();
    let u = DMatrix::from_row_slice(
        3,
        3,
        &[
            c(s, 0.0),
            c(0.0, s),
            c(0.0, 0.0),
            c(0.0, s),
            c(s, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(1.0, 0.0),
        ],
    );
    let f = e.compose_linear(&u);
    let p = [c(0.1, 0.2), c(-0.3, 0.4), c(0.5, 0.6)];
    let up: Vec<Complex64> = (0..3)
        .map(|j| (0..3).map(|k| u[(j, k)] * p[k]).sum())
        .collect();
    assert!((f.eval_real(&p).unwrap() - e.eval_real(&up).unwrap()).abs() < 1e-14);
}

// ---------------------------------------------------------------- properties

fn builtin_exprs() -> Vec<(DefiningExpr, usize)> {
    vec![
        (parse_expr(PROP51, 3).unwrap(), 3),
        (parse_expr(PROP52, 4).unwrap(), 4),
        (parse_expr("abs2(z1)+abs2(z2)+abs2(z3)-1", 3).unwrap(), 3),
        (parse_expr("(abs2(z1)+abs2(z2)-1)*(abs2(z1)+abs2(z2)-0.25)", 2).unwrap(), 2),
        (parse_expr("smax(-im(z3)+2*re(z1)*abs2(z2)-re(z1)*im(z1)^4, abs2(z1)+abs2(z2)+abs2(z3)-0.25, 0.05)", 3).unwrap(), 3),
        (parse_expr("re(z1*conj(z2)) + im((1+2*i)*z1^2) + abs2(z1-z2)^2", 2).unwrap(), 2),
    ]
}

fn point(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-0.8f64..0.8, -0.8f64..0.8), n)
        .prop_map(|v| v.into_iter().map(|(a, b)| c(a, b)).collect())
}

fn shift(p: &[Complex64], k: usize, h: f64) -> Vec<Complex64> {
    let mut q = p.to_vec();
    if k % 2 == 0 {
        q[k / 2].re += h;
    } else {
        q[k / 2].im += h;
    }
    q
}

/// Real gradient by central differences.
fn fd_gradient(e: &DefiningExpr, p: &[Complex64], h: f64) -> Vec<f64> {
    (0..2 * p.len())
        .map(|k| {
            (e.eval_real(&shift(p, k, h)).unwrap() - e.eval_real(&shift(p, k, -h)).unwrap())
                / (2.0 * h)
        })
        .collect()
}

/// Real Hessian `d^2 f / dx_a dx_b` recovered from the Wirtinger blocks.
fn real_hessian(j: &Jet2) -> DMatrix<f64> {
    let n = j.nvars();
    // d/dx = d/dz + d/dzbar, d/dy = i (d/dz - d/dzbar)
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    for a in 0..2 * n {
        for b in 0..2 * n {
            let (ja, jb) = (a / 2, b / 2);
            let ca = if a % 2 == 0 {
                [c(1.0, 0.0), c(1.0, 0.0)]
            } else {
                [c(0.0, 1.0), c(0.0, -1.0)]
            };
            let cb = if b % 2 == 0 {
                [c(1.0, 0.0), c(1.0, 0.0)]
            } else {
                [c(0.0, 1.0), c(0.0, -1.0)]
            };
            let v = ca[0] * cb[0] * j.dzdz[(ja, jb)]
                + ca[0] * cb[1] * j.dzdzbar[(ja, jb)]
                + ca[1] * cb[0] * j.dzdzbar[(jb, ja)]
                + ca[1] * cb[1] * j.dzbardzbar[(ja, jb)];
            h[(a, b)] = v.re;
        }
    }
    h
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gradient_matches_central_differences(idx in 0usize..6, seed in point(4)) {
        let exprs = builtin_exprs();
        let (e, n) = &exprs[idx];
        let p = &seed[..*n];
        let j = wirtinger_jet2(e, p).unwrap();
        let ad = j.real_gradient();
        let fd = fd_gradient(e, p, 1e-5);
        let scale = ad.iter().map(|x| x.abs()).fold(1.0, f64::max);
        for (a, f) in ad.iter().zip(&fd) {
            prop_assert!((a - f).abs() <= 1e-6 * scale, "ad {} fd {}", a, f);
        }
    }

    #[test]
    fn hessian_matches_second_differences(idx in 0usize..6, seed in point(4)) {
        let exprs = builtin_exprs();
        let (e, n) = &exprs[idx];
        let p = &seed[..*n];
        let j = wirtinger_jet2(e, p).unwrap();
        let h = real_hessian(&j);
        let step = 1e-4;
        let scale = h.iter().map(|x| x.abs()).fold(1.0, f64::max);
        for b in 0..2 * n {
            let gp = wirtinger_jet2(e, &shift(p, b, step)).unwrap().real_gradient();
            let gm = wirtinger_jet2(e, &shift(p, b, -step)).unwrap().real_gradient();
            for a in 0..2 * n {
                let fd = (gp[a] - gm[a]) / (2.0 * step);
                prop_assert!((h[(a, b)] - fd).abs() <= 1e-4 * scale, "({}, {}) ad {} fd {}", a, b, h[(a, b)], fd);
            }
        }
    }

    #[test]
    fn real_jets_are_hermitian(idx in 0usize..6, seed in point(4)) {
        let exprs = builtin_exprs();
        let (e, n) = &exprs[idx];
        let j = wirtinger_jet2(e, &seed[..*n]).unwrap();
        prop_assert!(j.value.im.abs() <= 1e-12 * j.value.re.abs().max(1.0));
        for a in 0..*n {
            prop_assert!((j.dzbar[a] - j.dz[a].conj()).norm() <= 1e-12);
            for b in 0..*n {
                prop_assert!((j.dzdzbar[(a, b)] - j.dzdzbar[(b, a)].conj()).norm() <= 1e-12);
                prop_assert!((j.dzdz[(a, b)] - j.dzdz[(b, a)]).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn product_rule(i1 in 0usize..4, i2 in 0usize..4, seed in point(3)) {
        let exprs = [
            parse_expr(PROP51, 3).unwrap(),
            DefiningExpr::norm2(3),
            parse_expr("re(z1*conj(z2)) + im((1+2*i)*z3^2)", 3).unwrap(),
            parse_expr("psi(re(z1) - im(z2), 0.3)*abs2(z3)", 3).unwrap(),
        ];
        let (a, b) = (&exprs[i1], &exprs[i2]);
        let ja = wirtinger_jet2(a, &seed).unwrap();
        let jb = wirtinger_jet2(b, &seed).unwrap();
        let jab = wirtinger_jet2(&(a * b), &seed).unwrap();
        let tol = 1e-12 * (1.0 + (ja.value.norm() + ja.dz.norm() + ja.dzdzbar.norm()) * (jb.value.norm() + jb.dz.norm() + jb.dzdzbar.norm()));
        prop_assert!((jab.value - ja.value * jb.value).norm() <= tol);
        for k in 0..3 {
            let expected = ja.dz[k] * jb.value + ja.value * jb.dz[k];
            prop_assert!((jab.dz[k] - expected).norm() <= tol);
            for l in 0..3 {
                let expected = ja.dzdzbar[(k, l)] * jb.value
                    + ja.dz[k] * jb.dzbar[l]
                    + ja.dzbar[l] * jb.dz[k]
                    + ja.value * jb.dzdzbar[(k, l)];
                prop_assert!((jab.dzdzbar[(k, l)] - expected).norm() <= tol);
                let expected = ja.dzdz[(k, l)] * jb.value
                    + ja.dz[k] * jb.dz[l]
                    + ja.dz[l] * jb.dz[k]
                    + ja.value * jb.dzdz[(k, l)];
                prop_assert!((jab.dzdz[(k, l)] - expected).norm() <= tol);
            }
        }
    }

    #[test]
    fn print_parse_roundtrip(idx in 0usize..6, seed in point(4), scale in -3.0f64..3.0) {
        let exprs = builtin_exprs();
        let (e, n) = &exprs[idx];
        let e = &e.scale(scale) + &DefiningExpr::constant(scale, *n);
        let back = parse_expr(&e.to_string(), *n).unwrap();
        let p = &seed[..*n];
        let (a, b) = (e.eval_real(p).unwrap(), back.eval_real(p).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }
}
