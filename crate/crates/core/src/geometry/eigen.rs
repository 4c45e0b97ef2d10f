//! Cyclic Jacobi eigensolver for small dense Hermitian matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::GeometryError;

const HERMITIAN_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 100;

/// Largest entry of `H - H*`, relative to `max(1, max |H_jk|)`.
pub fn hermitian_defect(h: &DMatrix<Complex64>) -> f64 {
    let n = h.nrows();
    let mut scale = 1.0_f64;
    let mut defect = 0.0_f64;
    for j in 0..n {
        for k in 0..n {
            scale = scale.max(h[(j, k)].norm());
            defect = defect.max((h[(j, k)] - h[(k, j)].conj()).norm());
        }
    }
    defect / scale
}

/// Eigenvalues in ascending order and a unitary `U` with `H = U diag(mu) U*`.
pub fn eigen_ascending(
    h: &DMatrix<Complex64>,
) -> Result<(Vec<f64>, DMatrix<Complex64>), GeometryError> {
    let n = h.nrows();
    if n != h.ncols() {
        return Err(GeometryError::NotSquare {
            rows: n,
            cols: h.ncols(),
        });
    }
    let defect = hermitian_defect(h);
    if defect > HERMITIAN_TOL {
        return Err(GeometryError::NotHermitian { defect });
    }
    // symmetrize so that the rotations see an exactly Hermitian matrix
    let mut a = DMatrix::from_fn(n, n, |j, k| 0.5 * (h[(j, k)] + h[(k, j)].conj()));
    let mut v = DMatrix::<Complex64>::identity(n, n);

    let frob: f64 = a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let thresh = 1e-15 * frob.max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|j| (0..n).filter(move |&k| k != j).map(move |k| (j, k)))
            .map(|(j, k)| a[(j, k)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= thresh {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= f64::MIN_POSITIVE || mag <= 1e-18 * frob {
                    a[(p, q)] = Complex64::new(0.0, 0.0);
                    a[(q, p)] = Complex64::new(0.0, 0.0);
                    continue;
                }
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|j| a[(j, j)].re).collect();
    order.sort_by(|&x, &y| diag[x].total_cmp(&diag[y]));
    let mu = order.iter().map(|&j| diag[j]).collect();
    let u = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok((mu, u))
}

/// One complex Jacobi rotation annihilating `a[(p, q)]`.
///
/// With `a_pq = |a_pq| e^{i theta}` the rotation is a phase on column `q`
/// followed by the classical real rotation.
fn rotate(a: &mut DMatrix<Complex64>, v: &mut DMatrix<Complex64>, p: usize, q: usize) {
    let n = a.nrows();
    let apq = a[(p, q)];
    let mag = apq.norm();
    let phase = apq / mag; // e^{i theta}
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = (aqq - app) / (2.0 * mag);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // J = [[c, s], [-s e^{-i theta}, c e^{-i theta}]] on columns (p, q)
    let jpp = Complex64::new(c, 0.0);
    let jpq = Complex64::new(s, 0.0);
    let jqp = -s * phase.conj();
    let jqq = c * phase.conj();

    // A <- A J
    for r in 0..n {
        let arp = a[(r, p)];
        let arq = a[(r, q)];
        a[(r, p)] = arp * jpp + arq * jqp;
        a[(r, q)] = arp * jpq + arq * jqq;
    }
    // A <- J* A
    for col in 0..n {
        let apc = a[(p, col)];
        let aqc = a[(q, col)];
        a[(p, col)] = jpp.conj() * apc + jqp.conj() * aqc;
        a[(q, col)] = jpq.conj() * apc + jqq.conj() * aqc;
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
    for r in 0..n {
        let vrp = v[(r, p)];
        let vrq = v[(r, q)];
        v[(r, p)] = vrp * jpp + vrq * jqp;
        v[(r, q)] = vrp * jpq + vrq * jqq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn reconstruct(mu: &[f64], u: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let d = DMatrix::from_fn(mu.len(), mu.len(), |j, k| {
            if j == k {
                c(mu[j], 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        u * d * u.adjoint()
    }

    #[test]
    fn diagonal_input_is_sorted() {
        let h =
            DMatrix::from_row_slice(2, 2, &[c(3.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
        let (mu, u) = eigen_ascending(&h).unwrap();
        assert_eq!(mu, vec![-1.0, 3.0]);
        assert!((u[(1, 0)].norm() - 1.0).abs() < 1e-15);
        assert!((u[(0, 1)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn antidiagonal_two_by_two() {
        let z = c(0.3, -0.4);
        let h = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), z, z.conj(), c(0.0, 0.0)]);
        let (mu, u) = eigen_ascending(&h).unwrap();
        assert!((mu[0] + 0.5).abs() < 1e-14);
        assert!((mu[1] - 0.5).abs() < 1e-14);
        assert!((reconstruct(&mu, &u) - h).norm() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let h =
            DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(
            eigen_ascending(&h),
            Err(GeometryError::NotHermitian { .. })
        ));
    }

    #[test]
    fn reconstruction_and_unitarity() {
        let h = DMatrix::from_row_slice(
            3,
            3,
            &[
                c(2.0, 0.0),
                c(1.0, 1.0),
                c(0.0, -0.5),
                c(1.0, -1.0),
                c(-1.0, 0.0),
                c(0.25, 0.0),
                c(0.0, 0.5),
                c(0.25, 0.0),
                c(0.5, 0.0),
            ],
        );
        let (mu, u) = eigen_ascending(&h).unwrap();
        assert!(mu.windows(2).all(|w| w[0] <= w[1]));
        assert!((reconstruct(&mu, &u) - &h).norm() < 1e-12);
        assert!((u.adjoint() * &u - DMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn repeated_eigenvalues() {
        let h = DMatrix::<Complex64>::identity(4, 4) * c(2.0, 0.0);
        let (mu, _) = eigen_ascending(&h).unwrap();
        assert_eq!(mu, vec![2.0; 4]);
    }
}
