//! Lanczos approximation of `e^{−iHt} v` for real symmetric `H`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::SparseAction;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovOptions {
    /// Largest Krylov subspace dimension.
    pub max_dim: usize,
    /// Target a-posteriori error per substep, relative to `‖v‖`.
    pub tol: f64,
    /// Number of step halvings allowed before giving up on one substep.
    pub max_halvings: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions {
            max_dim: 30,
            tol: 1e-12,
            max_halvings: 60,
        }
    }
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn cdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn cnorm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

struct Lanczos {
    basis: Vec<Vec<Complex64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    /// Norm of the residual after the last basis vector.
    beta_next: f64,
}

fn lanczos(action: &SparseAction, v: &[Complex64], norm: f64, max_dim: usize) -> Lanczos {
    let dim = v.len();
    let mut basis = vec![v.iter().map(|x| x / norm).collect::<Vec<_>>()];
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    let mut w = vec![ZERO; dim];
    let steps = max_dim.min(dim);
    let mut beta_next = 0.0;
    for k in 0..steps {
        action.apply_slice(&basis[k], &mut w);
        alpha.push(cdot(&basis[k], &w).re);
        // Two passes of full reorthogonalization.
        for _ in 0..2 {
            for q in &basis {
                let c = cdot(q, &w);
                w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= c * qi);
            }
        }
        beta_next = cnorm(&w);
        if k + 1 == steps || beta_next <= 1e-14 * alpha.iter().fold(1.0, |m: f64, a| m.max(a.abs())) {
            break;
        }
        beta.push(beta_next);
        basis.push(w.iter().map(|x| x / beta_next).collect());
    }
    if basis.len() == dim {
        beta_next = 0.0;
    }
    Lanczos {
        basis,
        alpha,
        beta,
        beta_next,
    }
}

/// `e^{−i T dt} e₁` for the symmetric tridiagonal `T = tridiag(beta, alpha, beta)`.
///
/// For `‖T‖·|dt| ≤ 1` the Taylor series is summed until every component has
/// converged to full relative precision, so components of size `O(dt^k)` keep
/// their relative accuracy. Otherwise `T` is diagonalized.
pub(crate) fn small_expm_e1(alpha: &[f64], beta: &[f64], dt: f64) -> Vec<Complex64> {
    let m = alpha.len();
    let tnorm = (0..m)
        .map(|i| {
            alpha[i].abs()
                + if i > 0 { beta[i - 1].abs() } else { 0.0 }
                + if i + 1 < m { beta[i].abs() } else { 0.0 }
        })
        .fold(0.0, f64::max);
    if tnorm * dt.abs() <= 1.0 {
        let mut y = vec![ZERO; m];
        let mut term = vec![ZERO; m];
        y[0] = Complex64::new(1.0, 0.0);
        term[0] = y[0];
        let mut next = vec![ZERO; m];
        for j in 1..400 {
            let f = Complex64::new(0.0, -dt / j as f64);
            for i in 0..m {
                let mut acc = term[i] * alpha[i];
                if i > 0 {
                    acc += term[i - 1] * beta[i - 1];
                }
                if i + 1 < m {
                    acc += term[i + 1] * beta[i];
                }
                next[i] = acc * f;
            }
            std::mem::swap(&mut term, &mut next);
            let mut done = j >= m;
            for i in 0..m {
                y[i] += term[i];
                if term[i].norm() > 1e-17 * y[i].norm() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        return y;
    }
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = t.symmetric_eigen();
    (0..m)
        .map(|i| {
            (0..m)
                .map(|k| {
                    let q = eig.eigenvectors[(i, k)] * eig.eigenvectors[(0, k)];
                    Complex64::from_polar(q, -eig.eigenvalues[k] * dt)
                })
                .sum()
        })
        .collect()
}

/// `e^{−iHt} v` by adaptive Lanczos substeps.
pub fn expmv(
    action: &SparseAction,
    v: &[Complex64],
    t: f64,
    opts: &KrylovOptions,
) -> Result<Vec<Complex64>> {
    let mut w = v.to_vec();
    let mut remaining = t.abs();
    let sign = t.signum();
    while remaining > 0.0 {
        let norm = cnorm(&w);
        if norm == 0.0 {
            return Ok(w);
        }
        let lz = lanczos(action, &w, norm, opts.max_dim);
        let mut dt = remaining;
        let mut halvings = 0;
        loop {
            let y = small_expm_e1(&lz.alpha, &lz.beta, sign * dt);
            let err = lz.beta_next * y.last().map_or(0.0, |c| c.norm());
            if err <= opts.tol {
                let mut out = vec![ZERO; w.len()];
                for (q, c) in lz.basis.iter().zip(&y) {
                    let c = c * norm;
                    out.iter_mut().zip(q).for_each(|(o, qi)| *o += c * qi);
                }
                w = out;
                remaining = if dt == remaining { 0.0 } else { remaining - dt };
                break;
            }
            halvings += 1;
            if halvings > opts.max_halvings {
                return Err(Error::NonConvergence {
                    method: "krylov_expmv",
                    iterations: halvings,
                    residual: err,
                });
            }
            dt /= 2.0;
        }
    }
    Ok(w)
}
