//! Berlekamp–Welch recovery of a degree-`d` polynomial from samples of which
//! at most `e` are corrupted.
//!
//! With the error locator `E` monic of degree `e` and `Q = q·E` of degree
//! `d + e`, every sample satisfies `Q(t_i) = y_i E(t_i)`. Any solution of this
//! linear system yields `q = Q / E` when at most `e` samples are wrong.

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::domain::{Polynomial, SampleSet};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WelchMode {
    /// Exact rational arithmetic on the (exactly representable) sample values.
    Exact,
    /// Floating-point least-norm solve with residual gating.
    Float,
}

fn check_budget(len: usize, d: usize, e: usize) -> Result<()> {
    if len < d + 1 + 2 * e {
        return Err(Error::invalid(format!(
            "need at least d + 1 + 2e = {} samples, got {len}",
            d + 1 + 2 * e
        )));
    }
    Ok(())
}

pub fn berlekamp_welch_recover(
    samples: &SampleSet,
    d: usize,
    e_max: usize,
    mode: WelchMode,
) -> Result<Polynomial> {
    match mode {
        WelchMode::Exact => {
            let pts: Vec<(BigRational, BigRational)> = samples
                .points()
                .iter()
                .map(|p| Ok((to_rational(p.t)?, to_rational(p.y)?)))
                .collect::<Result<_>>()?;
            let q = berlekamp_welch_exact(&pts, d, e_max)?;
            Ok(Polynomial::new(
                q.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect(),
            ))
        }
        WelchMode::Float => berlekamp_welch_float(samples, d, e_max),
    }
}

fn to_rational(v: f64) -> Result<BigRational> {
    BigRational::from_float(v).ok_or_else(|| Error::invalid(format!("non-finite sample {v}")))
}

fn eval_rational(coeffs: &[BigRational], t: &BigRational) -> BigRational {
    coeffs
        .iter()
        .rev()
        .fold(BigRational::zero(), |acc, c| acc * t + c)
}

/// Exact recovery; returns the coefficients of `q` (length `d + 1`).
pub fn berlekamp_welch_exact(
    points: &[(BigRational, BigRational)],
    d: usize,
    e: usize,
) -> Result<Vec<BigRational>> {
    check_budget(points.len(), d, e)?;
    let nq = d + e + 1;
    let unknowns = nq + e;
    // Rows: [t^0 .. t^{d+e} | −y t^0 .. −y t^{e−1} | y t^e]
    let mut rows: Vec<Vec<BigRational>> = points
        .iter()
        .map(|(t, y)| {
            let mut row = Vec::with_capacity(unknowns + 1);
            let mut p = BigRational::one();
            let mut powers = Vec::with_capacity(nq);
            for _ in 0..nq {
                powers.push(p.clone());
                p *= t;
            }
            row.extend(powers.iter().cloned());
            row.extend(powers.iter().take(e).map(|pk| -(y * pk)));
            row.push(y * &powers[e]);
            row
        })
        .collect();
    let sol = solve_rational(&mut rows, unknowns)
        .ok_or_else(|| Error::RecoveryFailed("error-locator system is inconsistent".into()))?;
    let qpoly = sol[..nq].to_vec();
    let mut epoly = sol[nq..].to_vec();
    epoly.push(BigRational::one());
    let (quot, rem) = div_rem_rational(&qpoly, &epoly);
    if rem.iter().any(|c| !c.is_zero()) {
        return Err(Error::RecoveryFailed(
            "error locator does not divide Q; corruption budget exceeded".into(),
        ));
    }
    let mut q = quot;
    q.resize(d + 1, BigRational::zero());
    let agree = points
        .iter()
        .filter(|(t, y)| eval_rational(&q, t) == *y)
        .count();
    if agree + e < points.len() {
        return Err(Error::RecoveryFailed(format!(
            "recovered polynomial agrees with only {agree} of {} samples",
            points.len()
        )));
    }
    Ok(q)
}

/// Gaussian elimination on an augmented system; free variables are set to 0.
fn solve_rational(rows: &mut [Vec<BigRational>], unknowns: usize) -> Option<Vec<BigRational>> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..unknowns {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        for v in rows[r].iter_mut().skip(c) {
            *v *= &inv;
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let f = row[c].clone();
                for (v, pv) in row.iter_mut().zip(&pivot_row).skip(c) {
                    *v -= &f * pv;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    if rows[r..].iter().any(|row| !row[unknowns].is_zero()) {
        return None;
    }
    let mut x = vec![BigRational::zero(); unknowns];
    for (i, &c) in pivots.iter().enumerate() {
        x[c] = rows[i][unknowns].clone();
    }
    Some(x)
}

fn div_rem_rational(num: &[BigRational], den: &[BigRational]) -> (Vec<BigRational>, Vec<BigRational>) {
    let dd = den.len() - 1;
    let lead = den[dd].clone();
    let mut rem = num.to_vec();
    if rem.len() <= dd {
        return (vec![BigRational::zero()], rem);
    }
    let mut quot = vec![BigRational::zero(); rem.len() - dd];
    for k in (0..quot.len()).rev() {
        let q = &rem[k + dd] / &lead;
        for (i, c) in den.iter().enumerate() {
            rem[k + i] -= &q * c;
        }
        quot[k] = q;
    }
    rem.truncate(dd.max(1));
    (quot, rem)
}

fn berlekamp_welch_float(samples: &SampleSet, d: usize, e: usize) -> Result<Polynomial> {
    let len = samples.len();
    check_budget(len, d, e)?;
    let nq = d + e + 1;
    let unknowns = nq + e;
    let pts = samples.points();
    let mut a = DMatrix::zeros(len, unknowns);
    let mut b = DVector::zeros(len);
    for (i, p) in pts.iter().enumerate() {
        let mut pw = 1.0;
        for k in 0..nq {
            a[(i, k)] = pw;
            if k < e {
                a[(i, nq + k)] = -p.y * pw;
            }
            if k == e {
                b[i] = p.y * pw;
            }
            pw *= p.t;
        }
    }
    let svd = a.svd(true, true);
    let tol = 1e-12 * svd.singular_values.max();
    let sol = svd
        .solve(&b, tol)
        .map_err(|m| Error::RecoveryFailed(m.to_string()))?;
    let qpoly = Polynomial::new(sol.rows(0, nq).iter().copied().collect());
    let mut ec: Vec<f64> = sol.rows(nq, e).iter().copied().collect();
    ec.push(1.0);
    let (quot, rem) = qpoly.div_rem(&Polynomial::new(ec))?;
    let scale = 1.0 + qpoly.abs_coeff_sum();
    if rem.abs_coeff_sum() > 1e-6 * scale {
        return Err(Error::RecoveryFailed(format!(
            "division remainder {:e} above tolerance",
            rem.abs_coeff_sum()
        )));
    }
    let mut coeffs = quot.coeffs().to_vec();
    coeffs.resize(d + 1, 0.0);
    let q = Polynomial::new(coeffs);
    let agree = pts
        .iter()
        .filter(|p| (q.eval(p.t) - p.y).abs() < 1e-6 * (1.0 + p.y.abs()))
        .count();
    if agree + e < len {
        return Err(Error::RecoveryFailed(format!(
            "residual below 1e-6 at only {agree} of {len} samples"
        )));
    }
    Ok(q)
}

/// Integer-valued rational helper for tests and demos.
pub fn rational_from_int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Largest absolute coefficient difference, for diagnostics.
pub fn max_abs_diff(a: &[BigRational], b: &[BigRational]) -> BigRational {
    let len = a.len().max(b.len());
    (0..len)
        .map(|k| {
            let x = a.get(k).cloned().unwrap_or_else(BigRational::zero);
            let y = b.get(k).cloned().unwrap_or_else(BigRational::zero);
            (x - y).abs()
        })
        .max()
        .unwrap_or_else(BigRational::zero)
}
