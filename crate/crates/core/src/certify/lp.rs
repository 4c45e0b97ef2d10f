//! Exact solution of the diagonal weak Z(q) linear program.
//!
//! With `S = mu_1 + ... + mu_q` the feasible set is
//! `{lambda in [0,1]^m : sum lambda_j mu_j <= S}`. Branch `+` minimises the
//! trace, branch `-` maximises it; both are fractional knapsacks solved by a
//! greedy sweep over the sorted spectrum. The dual functions below give an
//! independent value for the optimum.

use super::{Branch, Certificate, CertifyError};

/// Optimal margins at or below this are reported as infeasible.
pub const LP_ABSENT_TOL: f64 = 1e-9;

fn check_sorted(mu: &[f64]) {
    debug_assert!(mu.windows(2).all(|w| w[0] <= w[1]), "mu must be ascending");
}

/// Optimal weights for the branch, or `None` when `q` exceeds the dimension.
fn optimal_lambda(mu: &[f64], q: usize, branch: Branch) -> Option<Vec<f64>> {
    check_sorted(mu);
    let m = mu.len();
    if q > m {
        return None;
    }
    let budget: f64 = mu[..q].iter().sum();
    let mut lambda = vec![0.0; m];
    match branch {
        Branch::Plus => {
            if budget >= 0.0 {
                return Some(lambda);
            }
            // most negative eigenvalues buy the most room per unit of trace
            let mut need = -budget;
            for (j, &mu_j) in mu.iter().enumerate() {
                if need <= 0.0 || mu_j >= 0.0 {
                    break;
                }
                let take = (need / -mu_j).min(1.0);
                lambda[j] = take;
                need -= take * -mu_j;
            }
        }
        Branch::Minus => {
            let mut cur = 0.0;
            for (j, &mu_j) in mu.iter().enumerate() {
                if mu_j <= 0.0 {
                    lambda[j] = 1.0;
                    cur += mu_j;
                }
            }
            let mut room = budget - cur;
            for (j, &mu_j) in mu.iter().enumerate() {
                if mu_j <= 0.0 {
                    continue;
                }
                if room <= 0.0 {
                    break;
                }
                let take = (room / mu_j).min(1.0);
                lambda[j] = take;
                room -= take * mu_j;
            }
        }
    }
    Some(lambda)
}

/// Optimal trace of the branch program: the minimum for `Plus`, the maximum for `Minus`.
pub fn lp_optimal_trace(mu: &[f64], q: usize, branch: Branch) -> Option<f64> {
    optimal_lambda(mu, q, branch).map(|l| l.iter().sum())
}

/// Value of the Lagrangian dual of the branch program, evaluated at every
/// breakpoint of the piecewise linear dual function.
pub fn lp_dual_trace(mu: &[f64], q: usize, branch: Branch) -> Option<f64> {
    if q > mu.len() {
        return None;
    }
    let s: f64 = mu[..q].iter().sum();
    match branch {
        Branch::Plus => {
            let dual = |y: f64| -y * s + mu.iter().map(|m| (1.0 + y * m).min(0.0)).sum::<f64>();
            let ys = std::iter::once(0.0).chain(mu.iter().filter(|&&m| m < 0.0).map(|m| -1.0 / m));
            Some(ys.map(dual).fold(f64::NEG_INFINITY, f64::max))
        }
        Branch::Minus => {
            let dual = |y: f64| y * s + mu.iter().map(|m| (1.0 - y * m).max(0.0)).sum::<f64>();
            let ys = std::iter::once(0.0).chain(mu.iter().filter(|&&m| m > 0.0).map(|m| 1.0 / m));
            Some(ys.map(dual).fold(f64::INFINITY, f64::min))
        }
    }
}

/// Margin-maximising diagonal certificate for the branch, if its margin exceeds [`LP_ABSENT_TOL`].
pub fn weak_zq_lp(mu: &[f64], q: usize, branch: Branch) -> Option<Certificate> {
    let lambda = optimal_lambda(mu, q, branch)?;
    let cert = Certificate::from_weights(branch, q, lambda, mu).ok()?;
    debug_assert!({
        let dual = lp_dual_trace(mu, q, branch).unwrap_or(f64::NAN);
        let scale = 1.0 + mu.iter().map(|m| m.abs()).fold(0.0, f64::max);
        (dual - cert.trace).abs() <= 1e-9 * scale * mu.len().max(1) as f64 || !dual.is_finite()
    });
    (cert.margin > LP_ABSENT_TOL).then_some(cert)
}

/// Smallest `m` such that `lambda = (1,...,1,0,...,0)` with `m` ones is a
/// certificate: `m < q` for `Plus`, `m > q` for `Minus`.
pub fn binary_weak_zq(mu: &[f64], q: usize, branch: Branch) -> Option<usize> {
    check_sorted(mu);
    let dim = mu.len();
    if q > dim {
        return None;
    }
    // prefix(m) <= prefix(q) is decided on the partial sum between m and q
    match branch {
        Branch::Plus => (0..q).find(|&m| mu[m..q].iter().sum::<f64>() >= 0.0),
        Branch::Minus => (q + 1..=dim).find(|&m| mu[q..m].iter().sum::<f64>() <= 0.0),
    }
}

/// Transport a certificate for `(mu, q)` to the dual problem
/// `(-reverse(mu), n - 1 - q)` with weights `1 - reverse(lambda)`.
pub fn duality_transform(
    cert: &Certificate,
    mu: &[f64],
) -> Result<(Certificate, Vec<f64>), CertifyError> {
    let dim = mu.len();
    if cert.lambda.len() != dim || cert.complement.len() != dim {
        return Err(CertifyError::InvalidCertificate(format!(
            "certificate has {} weights, spectrum has {}",
            cert.lambda.len(),
            dim
        )));
    }
    if cert.q > dim {
        return Err(CertifyError::InvalidQ {
            q: cert.q,
            n: dim + 1,
        });
    }
    if !mu.windows(2).all(|w| w[0] <= w[1]) {
        return Err(CertifyError::InvalidCertificate(
            "spectrum is not ascending".into(),
        ));
    }
    let mu_dual: Vec<f64> = mu.iter().rev().map(|m| -m).collect();
    let lambda: Vec<f64> = cert.complement.iter().rev().copied().collect();
    let complement: Vec<f64> = cert.lambda.iter().rev().copied().collect();
    let dual = Certificate::from_parts(
        cert.branch.flip(),
        dim - cert.q,
        lambda,
        complement,
        &mu_dual,
    )?;
    Ok((dual, mu_dual))
}
