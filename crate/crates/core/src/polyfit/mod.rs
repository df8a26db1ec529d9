//! Polynomial regression from noisy or corrupted samples.
//!
//! * [`lagrange_fit`] and [`extract_coefficient`]: interpolation on
//!   equidistant nodes and the amplification bound for a single coefficient.
//! * [`berlekamp_welch_recover`]: exact recovery under a corruption budget.
//! * [`robust_median_fit`]: per-node medians at Chebyshev nodes followed by a
//!   least-squares Chebyshev fit.

mod welch;

pub use welch::{
    berlekamp_welch_exact, berlekamp_welch_recover, max_abs_diff, rational_from_int, WelchMode,
};

use nalgebra::{DMatrix, DVector};

use crate::domain::poly::convolve;
use crate::domain::{binomial, ln_binomial, Polynomial, SampleSet};
use crate::error::{Error, Result};

/// Expands `Π (t − r_k)` with a balanced product tree.
pub fn roots_to_coefficients(roots: &[f64]) -> Polynomial {
    fn tree(roots: &[f64]) -> Vec<f64> {
        match roots.len() {
            0 => vec![1.0],
            1 => vec![-roots[0], 1.0],
            len => {
                let (l, r) = roots.split_at(len / 2);
                convolve(&tree(l), &tree(r))
            }
        }
    }
    Polynomial::new(tree(roots))
}

/// Unique interpolant of degree `L − 1` through the samples, in the monomial basis.
pub fn lagrange_fit(samples: &SampleSet) -> Result<Polynomial> {
    if samples.is_empty() {
        return Err(Error::invalid("no samples"));
    }
    let nodes = samples.nodes();
    let len = nodes.len();
    let mut coeffs = vec![0.0; len];
    let mut others = Vec::with_capacity(len - 1);
    for (i, p) in samples.points().iter().enumerate() {
        others.clear();
        let mut denom = 1.0;
        for (j, &tj) in nodes.iter().enumerate() {
            if j != i {
                others.push(tj);
                denom *= p.t - tj;
            }
        }
        let basis = roots_to_coefficients(&others);
        let w = p.y / denom;
        for (c, b) in coeffs.iter_mut().zip(basis.coeffs()) {
            *c += w * b;
        }
    }
    Ok(Polynomial::new(coeffs))
}

/// `δ · t₀^{−k} · (4/Δ)^d · C(d, k)`, the single-coefficient error bound with
/// the unspecified constant set to 1. Evaluated in log space; zero for `k > d`.
pub fn lemma1_bound(noise_delta: f64, t0: f64, delta_window: f64, d: usize, k: usize) -> f64 {
    if k > d || noise_delta == 0.0 {
        return 0.0;
    }
    let log = noise_delta.ln() - k as f64 * t0.ln()
        + d as f64 * (4.0 / delta_window).ln()
        + ln_binomial(d as u64, k as u64);
    log.exp()
}

/// Equidistant nodes spanning `[t₀(1−Δ), t₀(1+Δ)]`.
pub fn window_nodes(t0: f64, delta_window: f64, count: usize) -> Vec<f64> {
    crate::domain::equidistant_nodes(t0 * (1.0 - delta_window), t0 * (1.0 + delta_window), count)
}

fn check_window(nodes: &[f64], t0: f64, delta_window: f64) -> Result<()> {
    if !(delta_window > 0.0 && delta_window < 1.0) {
        return Err(Error::WindowMismatch(format!(
            "window half-width Δ = {delta_window} outside (0, 1)"
        )));
    }
    let mut sorted = nodes.to_vec();
    sorted.sort_by(f64::total_cmp);
    let expect = window_nodes(t0, delta_window, sorted.len());
    let tol = 1e-9 * t0.abs().max(1e-300);
    if sorted.len() < 2 || sorted.iter().zip(&expect).any(|(a, b)| (a - b).abs() > tol) {
        return Err(Error::WindowMismatch(format!(
            "{} nodes are not equidistant on [{}, {}]",
            sorted.len(),
            expect.first().copied().unwrap_or(f64::NAN),
            expect.last().copied().unwrap_or(f64::NAN)
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoefficientEstimate {
    pub estimate: f64,
    pub bound: f64,
}

/// Estimates the `t^k` coefficient from `d + 1` equidistant samples in the
/// window, together with the amplification bound for noise `δ`.
pub fn extract_coefficient(
    samples: &SampleSet,
    k: usize,
    t0: f64,
    delta_window: f64,
    noise_delta: f64,
) -> Result<CoefficientEstimate> {
    check_window(&samples.nodes(), t0, delta_window)?;
    let fit = lagrange_fit(samples)?;
    let d = fit.degree();
    Ok(CoefficientEstimate {
        estimate: fit.coeff(k),
        bound: lemma1_bound(noise_delta, t0, delta_window, d, k),
    })
}

/// `cos(π(2i+1)/(2L))` mapped to `[a, b]`, `i = 0..L`.
pub fn chebyshev_nodes(a: f64, b: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| {
            let s = (std::f64::consts::PI * (2 * i + 1) as f64 / (2 * count) as f64).cos();
            0.5 * (a + b) + 0.5 * (b - a) * s
        })
        .collect()
}

/// Monomial coefficients of the Chebyshev polynomial `T_k`.
pub fn chebyshev_t(k: usize) -> Polynomial {
    let mut prev = vec![1.0];
    if k == 0 {
        return Polynomial::new(prev);
    }
    let mut cur = vec![0.0, 1.0];
    for _ in 1..k {
        let mut next = vec![0.0; cur.len() + 1];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += 2.0 * c;
        }
        for (i, p) in prev.iter().enumerate() {
            next[i] -= p;
        }
        prev = cur;
        cur = next;
    }
    Polynomial::new(cur)
}

/// A Chebyshev series `Σ c_k T_k(s)` with `s` the affine image of `[a, b]` on `[−1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChebyshevSeries {
    pub a: f64,
    pub b: f64,
    pub coeffs: Vec<f64>,
}

impl ChebyshevSeries {
    fn to_unit(&self, t: f64) -> f64 {
        (2.0 * t - self.a - self.b) / (self.b - self.a)
    }

    /// Clenshaw evaluation at `t` (also valid outside `[a, b]`).
    pub fn eval(&self, t: f64) -> f64 {
        let s = self.to_unit(t);
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * s * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        s * b1 - b2 + self.coeffs.first().copied().unwrap_or(0.0)
    }

    /// Monomial coefficients in the original variable `t`.
    pub fn to_polynomial(&self) -> Polynomial {
        // s = α t + β
        let alpha = 2.0 / (self.b - self.a);
        let beta = -(self.a + self.b) / (self.b - self.a);
        let affine = Polynomial::new(vec![beta, alpha]);
        let mut in_s = Polynomial::constant(0.0);
        for (k, &c) in self.coeffs.iter().enumerate() {
            in_s = &in_s + &chebyshev_t(k).scale(c);
        }
        // Horner composition p(αt + β).
        let mut out = Polynomial::constant(0.0);
        for &c in in_s.coeffs().iter().rev() {
            out = &(&out * &affine) + &Polynomial::constant(c);
        }
        let mut coeffs = out.coeffs().to_vec();
        coeffs.resize(self.coeffs.len().max(1), 0.0);
        Polynomial::new(coeffs)
    }
}

/// Least-squares fit of degree `d` in the Chebyshev basis.
pub fn chebyshev_least_squares(
    nodes: &[f64],
    values: &[f64],
    d: usize,
    a: f64,
    b: f64,
) -> Result<ChebyshevSeries> {
    if nodes.len() < d + 1 {
        return Err(Error::invalid(format!(
            "{} nodes cannot determine degree {d}",
            nodes.len()
        )));
    }
    let mut design = DMatrix::zeros(nodes.len(), d + 1);
    for (i, &t) in nodes.iter().enumerate() {
        let s = (2.0 * t - a - b) / (b - a);
        let (mut tm1, mut tk) = (1.0, s);
        design[(i, 0)] = 1.0;
        if d >= 1 {
            design[(i, 1)] = s;
        }
        for k in 2..=d {
            let next = 2.0 * s * tk - tm1;
            design[(i, k)] = next;
            tm1 = tk;
            tk = next;
        }
    }
    let rhs = DVector::from_column_slice(values);
    let svd = design.svd(true, true);
    let sol = svd
        .solve(&rhs, 1e-14)
        .map_err(|m| Error::invalid(m.to_string()))?;
    Ok(ChebyshevSeries {
        a,
        b,
        coeffs: sol.iter().copied().collect(),
    })
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MedianFitOptions {
    /// Number of Chebyshev nodes; defaults to `4(d + 1)`.
    pub nodes: Option<usize>,
    pub repetitions: usize,
}

/// Per-node medians of `repetitions` oracle calls at Chebyshev nodes on
/// `[a, b]`, then a least-squares Chebyshev fit of degree `d`.
///
/// The oracle receives the node and the global call index, so callers can
/// derive an independent random stream per call.
pub fn robust_median_fit_series(
    oracle: impl Fn(f64, u64) -> f64,
    d: usize,
    interval: (f64, f64),
    opts: MedianFitOptions,
) -> Result<ChebyshevSeries> {
    let (a, b) = interval;
    if b.partial_cmp(&a) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::invalid(format!("empty interval [{a}, {b}]")));
    }
    if opts.repetitions == 0 {
        return Err(Error::invalid("repetitions must be positive"));
    }
    let count = opts.nodes.unwrap_or(4 * (d + 1));
    let nodes = chebyshev_nodes(a, b, count);
    let mut call = 0u64;
    let mut buf = Vec::with_capacity(opts.repetitions);
    let medians: Vec<f64> = nodes
        .iter()
        .map(|&t| {
            buf.clear();
            for _ in 0..opts.repetitions {
                buf.push(oracle(t, call));
                call += 1;
            }
            median(&mut buf)
        })
        .collect();
    chebyshev_least_squares(&nodes, &medians, d, a, b)
}

/// [`robust_median_fit_series`] converted to the monomial basis.
pub fn robust_median_fit(
    oracle: impl Fn(f64, u64) -> f64,
    d: usize,
    interval: (f64, f64),
    opts: MedianFitOptions,
) -> Result<Polynomial> {
    Ok(robust_median_fit_series(oracle, d, interval, opts)?.to_polynomial())
}

/// `(Σ|a_k|, 4^d · max_{[−1,1]} |q|)` with the maximum over a 10⁴-point grid.
pub fn sum_of_coefficients_bound_check(q: &Polynomial) -> (f64, f64) {
    let lhs = q.abs_coeff_sum();
    let grid = 10_000;
    let max = (0..grid)
        .map(|i| q.eval(-1.0 + 2.0 * i as f64 / (grid - 1) as f64).abs())
        .fold(0.0, f64::max);
    (lhs, 4f64.powi(q.degree() as i32) * max)
}

/// `C(d, k)` as a float (exact for the sizes used here).
pub fn binomial_f64(d: usize, k: usize) -> f64 {
    binomial(d, k) as f64
}
