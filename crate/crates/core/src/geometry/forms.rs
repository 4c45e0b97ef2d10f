//! (0,q)-form coefficient arrays and the action of Hermitian (1,1)-forms on them.
//!
//! Components are indexed by strictly increasing multi-indices. For a
//! non-increasing index list `kJ` the coefficient is `(-1)^s f_K`, where `K`
//! is the sorted set and `s` the number of transpositions needed to sort it.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::GeometryError;

/// All strictly increasing multi-indices of length `q` over `0..dim`, in lexicographic order.
pub fn increasing_multi_indices(dim: usize, q: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, dim: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for k in start..dim {
            if dim - k < left {
                break;
            }
            cur.push(k);
            rec(k + 1, dim, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if q <= dim {
        rec(0, dim, q, &mut Vec::with_capacity(q), &mut out);
    }
    out
}

/// Sort the index list `k, J` (with `J` increasing). Returns the sign of the
/// sorting permutation and the sorted multi-index, or `None` when `k` is in `J`.
pub fn prepend_index(k: usize, j: &[usize]) -> Option<(f64, Vec<usize>)> {
    if j.contains(&k) {
        return None;
    }
    let pos = j.iter().filter(|&&x| x < k).count();
    let mut out = Vec::with_capacity(j.len() + 1);
    out.extend_from_slice(&j[..pos]);
    out.push(k);
    out.extend_from_slice(&j[pos..]);
    let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
    Some((sign, out))
}

/// Coefficients of a (0,q)-form at a point, over a frame of dimension `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct FormCoeffs {
    pub dim: usize,
    pub q: usize,
    pub coeffs: BTreeMap<Vec<usize>, Complex64>,
}

impl FormCoeffs {
    pub fn zero(dim: usize, q: usize) -> Self {
        Self {
            dim,
            q,
            coeffs: BTreeMap::new(),
        }
    }

    /// Build from a dense vector ordered like [`increasing_multi_indices`].
    pub fn from_dense(dim: usize, q: usize, values: &[Complex64]) -> Self {
        let idx = increasing_multi_indices(dim, q);
        assert_eq!(idx.len(), values.len(), "dense length must be C(dim, q)");
        Self {
            dim,
            q,
            coeffs: idx.into_iter().zip(values.iter().copied()).collect(),
        }
    }

    pub fn get(&self, k: &[usize]) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    /// `f_{kJ}` with the sign convention of the module docs.
    pub fn get_prepended(&self, k: usize, j: &[usize]) -> Complex64 {
        match prepend_index(k, j) {
            Some((s, key)) => self.get(&key) * s,
            None => Complex64::new(0.0, 0.0),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm_sqr()).sum()
    }

    fn validate(&self) -> Result<(), GeometryError> {
        for k in self.coeffs.keys() {
            let increasing = k.windows(2).all(|w| w[0] < w[1]);
            if k.len() != self.q || !increasing || k.iter().any(|&i| i >= self.dim) {
                return Err(GeometryError::IndexMismatch {
                    q: self.q,
                    dim: self.dim,
                    index: k.clone(),
                });
            }
        }
        Ok(())
    }
}

/// `sum_{J in I_{q-1}} sum_{j,k} h[(j, k)] f_{kJ} conj(f_{jJ})`.
pub fn form_action(h: &DMatrix<Complex64>, f: &FormCoeffs) -> Result<f64, GeometryError> {
    if h.nrows() != f.dim || h.ncols() != f.dim {
        return Err(GeometryError::DimensionMismatch {
            expected: f.dim,
            got: h.nrows(),
        });
    }
    f.validate()?;
    if f.q == 0 {
        return Ok(0.0);
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for jset in increasing_multi_indices(f.dim, f.q - 1) {
        for j in 0..f.dim {
            let fj = f.get_prepended(j, &jset);
            if fj == Complex64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..f.dim {
                acc += h[(j, k)] * f.get_prepended(k, &jset) * fj.conj();
            }
        }
    }
    Ok(acc.re)
}

/// Hermitian matrix `M` over increasing q-indices with `form_action(h, f) = f* M f`.
pub fn form_action_matrix(h: &DMatrix<Complex64>, q: usize) -> DMatrix<Complex64> {
    let dim = h.nrows();
    let basis = increasing_multi_indices(dim, q);
    let pos: BTreeMap<&Vec<usize>, usize> = basis.iter().enumerate().map(|(i, k)| (k, i)).collect();
    let mut m = DMatrix::from_element(basis.len(), basis.len(), Complex64::new(0.0, 0.0));
    if q == 0 {
        return m;
    }
    for jset in increasing_multi_indices(dim, q - 1) {
        for j in 0..dim {
            let Some((sj, a)) = prepend_index(j, &jset) else {
                continue;
            };
            for k in 0..dim {
                let Some((sk, b)) = prepend_index(k, &jset) else {
                    continue;
                };
                m[(pos[&a], pos[&b])] += h[(j, k)] * (sj * sk);
            }
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multi_index_enumeration() {
        assert_eq!(
            increasing_multi_indices(3, 2),
            vec![vec![0, 1], vec![0, 2], vec![1, 2]]
        );
        assert_eq!(increasing_multi_indices(3, 0), vec![Vec::<usize>::new()]);
        assert!(increasing_multi_indices(2, 3).is_empty());
    }

    #[test]
    fn prepend_signs() {
        assert_eq!(prepend_index(0, &[1, 2]), Some((1.0, vec![0, 1, 2])));
        assert_eq!(prepend_index(1, &[0, 2]), Some((-1.0, vec![0, 1, 2])));
        assert_eq!(prepend_index(2, &[0, 1]), Some((1.0, vec![0, 1, 2])));
        assert_eq!(prepend_index(1, &[1]), None);
    }

    #[test]
    fn q1_is_quadratic_form() {
        let h = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 2.0),
                Complex64::new(0.0, -2.0),
                Complex64::new(3.0, 0.0),
            ],
        );
        let v = [Complex64::new(0.5, 1.0), Complex64::new(-1.0, 0.25)];
        let f = FormCoeffs::from_dense(2, 1, &v);
        let vv = nalgebra::DVector::from_column_slice(&v);
        let expected = (vv.adjoint() * &h * &vv)[(0, 0)].re;
        assert!((form_action(&h, &f).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn identity_gives_q_times_norm() {
        let h = DMatrix::<Complex64>::identity(4, 4);
        let vals: Vec<Complex64> = (0..6)
            .map(|i| Complex64::new(i as f64 * 0.3 - 0.7, 0.1 * i as f64))
            .collect();
        let f = FormCoeffs::from_dense(4, 2, &vals);
        assert!((form_action(&h, &f).unwrap() - 2.0 * f.norm_sqr()).abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_index() {
        let mut f = FormCoeffs::zero(3, 2);
        f.coeffs.insert(vec![2, 1], Complex64::new(1.0, 0.0));
        let h = DMatrix::<Complex64>::identity(3, 3);
        assert!(matches!(
            form_action(&h, &f),
            Err(GeometryError::IndexMismatch { .. })
        ));
    }

    #[test]
    fn matrix_agrees_with_action() {
        let h = DMatrix::from_fn(3, 3, |j, k| {
            let a = Complex64::new((j + 2 * k) as f64 * 0.1, (j as f64 - k as f64) * 0.2);
            if j == k {
                Complex64::new(a.re, 0.0)
            } else {
                a
            }
        });
        let h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
        let vals = [
            Complex64::new(1.0, -0.5),
            Complex64::new(0.2, 0.3),
            Complex64::new(-0.4, 0.0),
        ];
        let f = FormCoeffs::from_dense(3, 2, &vals);
        let m = form_action_matrix(&h, 2);
        let v = nalgebra::DVector::from_column_slice(&vals);
        let quad = (v.adjoint() * m * &v)[(0, 0)].re;
        assert!((quad - form_action(&h, &f).unwrap()).abs() < 1e-14);
    }
}
