//! Constructive reductions from output probabilities to permanents, and the
//! analytic error bounds that accompany them.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::domain::{
    ln_binomial, ln_factorial, BitString, HamiltonianSpec, ModelClass, Rng, SampleSet,
};
use crate::error::{Error, Result};
use crate::evolve::{probability_series, Backend};
use crate::hamiltonian::{moment_sequence, operator_norm, power_vectors};
use crate::permanent::{permanent_bruteforce, permanent_ryser, submatrix_for_outcome};
use crate::polyfit::{extract_coefficient, robust_median_fit_series, window_nodes, MedianFitOptions};

/// `(2‖H‖t)^{K+1} / (K+1)!`, evaluated in log space.
pub fn truncation_error(norm_h: f64, t: f64, k: usize) -> f64 {
    let x = 2.0 * norm_h * t;
    if x == 0.0 {
        return 0.0;
    }
    ((k + 1) as f64 * x.ln() - ln_factorial(k as u64 + 1)).exp()
}

/// `‖H‖^{n+1} n^n t / (n+1)!`, evaluated in log space.
pub fn short_time_xi_bound(norm_h: f64, n: usize, t: f64) -> f64 {
    if t == 0.0 || norm_h == 0.0 {
        return 0.0;
    }
    let nf = n as f64;
    ((nf + 1.0) * norm_h.ln() + nf * nf.ln() + t.ln() - ln_factorial(n as u64 + 1)).exp()
}

/// Whether `ξ² = o(n!)` at `t = n^{−cn}` with `‖H‖ = O(n)`: holds exactly when `c > 1/2`.
pub fn xi_squared_vanishes(c: f64) -> bool {
    c > 0.5
}

/// `ln(ξ²/n!)` with `‖H‖ = 3n` and `t = n^{−cn}`. Grows like `(1 − 2c) n ln n`.
pub fn log_xi_ratio(n: usize, c: f64) -> f64 {
    let nf = n as f64;
    let ln_t = -c * nf * nf.ln();
    let ln_xi = (nf + 1.0) * (3.0 * nf).ln() + nf * nf.ln() + ln_t - ln_factorial(n as u64 + 1);
    2.0 * ln_xi - ln_factorial(n as u64)
}

/// `(3/2) n √|(t/t₀)² − 1|`.
pub fn gaussian_rescaling_tvd(t: f64, t0: f64, n: usize) -> f64 {
    let r = t / t0;
    // (r − 1)(r + 1) keeps precision for r near 1.
    1.5 * n as f64 * ((r - 1.0) * (r + 1.0)).abs().sqrt()
}

/// Additive error of the approximate-counting estimate for each model class.
///
/// * I: `(1+g) γ⁻¹ ν (2n) 2^{−2n} + g p`
/// * II: `(1+g) (√π γ/2)⁻¹ ν n^{1/2} C(2n,n)⁻¹ + g p`
pub fn stockmeyer_error(class: ModelClass, nu: f64, gamma: f64, g: f64, n: usize, p_x: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) || nu < 0.0 || g < 0.0 {
        return Err(Error::invalid("need γ ∈ (0,1), ν ≥ 0 and g ≥ 0"));
    }
    let nf = n as f64;
    let core = match class {
        ModelClass::I => {
            let log = (2.0 * nf).ln() - 2.0 * nf * std::f64::consts::LN_2;
            nu / gamma * log.exp()
        }
        ModelClass::II => {
            let log = 0.5 * nf.ln() - ln_binomial(2 * n as u64, n as u64);
            nu / (std::f64::consts::PI.sqrt() * gamma / 2.0) * log.exp()
        }
    };
    Ok((1.0 + g) * core + g * p_x)
}

/// Uniform probability scale: `2^{−2n}` for class I, `C(2n,n)⁻¹` for class II.
pub fn anticoncentration_thresholds(class: ModelClass, n: usize) -> f64 {
    match class {
        ModelClass::I => (-2.0 * n as f64 * std::f64::consts::LN_2).exp(),
        ModelClass::II => (-ln_binomial(2 * n as u64, n as u64)).exp(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OracleMode {
    /// Probabilities exactly as computed.
    Exact,
    /// Each sample perturbed by independent uniform noise in `[−δ, δ]`.
    Uniform { delta: f64, seed: u64 },
    /// Each sample perturbed by `±δ` with the sign of the node's Lagrange
    /// weight for the extracted coefficient, the worst case for the bound.
    Adversarial { delta: f64 },
}

impl OracleMode {
    fn delta(&self) -> f64 {
        match *self {
            OracleMode::Exact => 0.0,
            OracleMode::Uniform { delta, .. } | OracleMode::Adversarial { delta } => delta,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtractionReport {
    pub m: usize,
    pub nodes: Vec<f64>,
    pub samples: Vec<f64>,
    /// `n^{2m}` times the extracted `t^{2m}` coefficient.
    pub per_squared_estimate: f64,
    /// `Per(J_ST)²` by Ryser's formula.
    pub truth: f64,
    pub bound: f64,
    pub norm_h: f64,
    pub epsilon_k: f64,
}

impl ExtractionReport {
    pub fn abs_error(&self) -> f64 {
        (self.per_squared_estimate - self.truth).abs()
    }
}

/// Sign of the weight with which sample `i` enters the `t^k` coefficient of
/// the interpolant through `nodes`.
pub fn coefficient_weight_signs(nodes: &[f64], k: usize) -> Vec<f64> {
    (0..nodes.len())
        .map(|i| {
            let mut unit = vec![0.0; nodes.len()];
            unit[i] = 1.0;
            let s = SampleSet::new(nodes.iter().copied().zip(unit).collect()).expect("distinct nodes");
            let c = crate::polyfit::lagrange_fit(&s).expect("non-empty").coeff(k);
            if c >= 0.0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect()
}

/// Estimates `Per(J_ST)²` for `x ∈ X_m` from `K + 1` samples of `p(x;J;t)` on
/// `[t₀(1−Δ), t₀(1+Δ)]` via the `t^{2m}` coefficient of the interpolant.
///
/// The bound is `n^{2m}` times the single-coefficient bound with deviation
/// `δ + ε_K(‖H‖, t₀(1+Δ))` from the degree-`K` Taylor polynomial.
pub fn extract_permanent_from_dynamics(
    spec: &HamiltonianSpec,
    x: &BitString,
    t0: f64,
    delta_window: f64,
    k_deg: usize,
    mode: OracleMode,
) -> Result<ExtractionReport> {
    let n = spec.n();
    let m = x
        .hamming_class()
        .ok_or_else(|| Error::NotInHammingClass(x.to_string()))?;
    if m == 0 {
        return Err(Error::invalid("extraction needs x ∈ X_m with m ≥ 1"));
    }
    if k_deg < 2 * m {
        return Err(Error::invalid(format!("K = {k_deg} must be at least 2m = {}", 2 * m)));
    }
    let nodes = window_nodes(t0, delta_window, k_deg + 1);
    let mut samples = probability_series(spec, x, &nodes, Backend::Krylov)?;
    match mode {
        OracleMode::Exact => {}
        OracleMode::Uniform { delta, seed } => {
            let mut rng = Rng::new(seed, 0);
            samples.iter_mut().for_each(|p| *p += rng.uniform_in(-delta, delta));
        }
        OracleMode::Adversarial { delta } => {
            let signs = coefficient_weight_signs(&nodes, 2 * m);
            samples.iter_mut().zip(signs).for_each(|(p, s)| *p += s * delta);
        }
    }
    let norm_h = operator_norm(spec)?;
    let epsilon_k = truncation_error(norm_h, t0 * (1.0 + delta_window), k_deg);
    let set = SampleSet::new(nodes.iter().copied().zip(samples.iter().copied()).collect())?;
    let est = extract_coefficient(&set, 2 * m, t0, delta_window, mode.delta() + epsilon_k)?;
    let scale = (n as f64).powi(2 * m as i32);
    let per = permanent_ryser(&submatrix_for_outcome(spec.couplings(), x)?)?;
    Ok(ExtractionReport {
        m,
        nodes,
        samples,
        per_squared_estimate: est.estimate * scale,
        truth: per * per,
        bound: est.bound * scale,
        norm_h,
        epsilon_k,
    })
}

/// `a_{2m} = (⟨x|H^m|y₀⟩ / m!)²`, the leading coefficient of `p(x;t)`.
pub fn leading_coefficient_from_moments(spec: &HamiltonianSpec, x: &BitString) -> Result<f64> {
    let m = x
        .hamming_class()
        .ok_or_else(|| Error::NotInHammingClass(x.to_string()))?;
    let mu = moment_sequence(spec, x, m)?[m];
    let fact: f64 = (1..=m).map(|k| k as f64).product();
    Ok((mu / fact).powi(2))
}

/// Deviation of one outcome from the moment/permanent identity.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityCheck {
    pub x: String,
    pub m: usize,
    /// `max_{l<m} |⟨x|H^l|y₀⟩|`.
    pub max_lower: f64,
    pub moment: f64,
    /// `m!/n^m · Per(J_ST)`.
    pub expected: f64,
    pub rel_error: f64,
}

impl IdentityCheck {
    pub fn passes(&self, zero_tol: f64, rel_tol: f64) -> bool {
        self.max_lower < zero_tol && self.rel_error <= rel_tol
    }
}

/// Checks `⟨x|H^l|y₀⟩ = 0` for `l < m` and `⟨x|H^m|y₀⟩ = m!/n^m Per(J_ST)`
/// for every `x ∈ X_m`, `1 ≤ m ≤ n`.
pub fn moment_identity_sweep(spec: &HamiltonianSpec) -> Result<Vec<IdentityCheck>> {
    let n = spec.n();
    let (basis, powers) = power_vectors(spec, n)?;
    let mut out = Vec::new();
    for m in 1..=n {
        for x in crate::domain::hamming_class_members(n, m) {
            let idx = basis.index_of(&x).expect("X lies in both bases");
            let max_lower = (0..m).map(|l| powers[l][idx].abs()).fold(0.0, f64::max);
            let moment = powers[m][idx];
            let fact: f64 = (1..=m).map(|k| k as f64).product();
            let per = permanent_ryser(&submatrix_for_outcome(spec.couplings(), &x)?)?;
            let expected = fact / (n as f64).powi(m as i32) * per;
            let rel_error = if expected == 0.0 {
                moment.abs()
            } else {
                ((moment - expected) / expected).abs()
            };
            out.push(IdentityCheck {
                x: x.to_string(),
                m,
                max_lower,
                moment,
                expected,
                rel_error,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct WorstToAverageReport {
    pub m: usize,
    pub delta_window: f64,
    pub noise_delta: f64,
    pub per_estimate: f64,
    pub truth: f64,
    /// `(9δ/4)(4/Δ)^d` with `d = m` and `δ` the injected noise plus the
    /// rounding floor.
    pub bound: f64,
    /// `ε_mach · max |q|` over the nodes, the noise floor of exact evaluation.
    pub rounding_floor: f64,
    /// Estimate rounded to the nearest integer.
    pub rounded: f64,
    /// `m(3√Δ + Δ)`, the interpolation TVD at the window edge.
    pub tvd_at_edge: f64,
}

/// Default window `Δ = (16m)^{−2}`.
pub fn default_interpolation_window(m: usize) -> f64 {
    (16.0 * m as f64).powi(-2)
}

/// `(9δ/4)(4/Δ)^d`.
pub fn worst_to_average_bound(noise_delta: f64, delta_window: f64, d: usize) -> f64 {
    2.25 * noise_delta * (4.0 / delta_window).powi(d as i32)
}

/// `n(3√t + t)`.
pub fn interpolation_tvd(n: usize, t: f64) -> f64 {
    n as f64 * (3.0 * t.sqrt() + t)
}

/// Recovers `Per(X)` for a 0/1 matrix `X` from noisy values of
/// `q(t) = Per(tX + (1−t)Y)` on `[−Δ, Δ]`, with `Y` Gaussian.
pub fn worst_to_average_demo(
    x_hard: &DMatrix<f64>,
    delta_window: Option<f64>,
    noise_delta: f64,
    repetitions: usize,
    rng: &Rng,
) -> Result<WorstToAverageReport> {
    let m = x_hard.nrows();
    if x_hard.ncols() != m || m == 0 {
        return Err(Error::invalid("X must be square and non-empty"));
    }
    if m > 7 {
        return Err(Error::SizeGuard {
            guard: "worst_to_average_size",
            value: m,
            limit: 7,
        });
    }
    if x_hard.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::invalid("X must have 0/1 entries"));
    }
    let dw = delta_window.unwrap_or_else(|| default_interpolation_window(m));
    let mut yrng = rng.substream(0);
    let y = DMatrix::from_fn(m, m, |_, _| yrng.gaussian());
    let oracle = |t: f64, call: u64| {
        let a = x_hard * t + &y * (1.0 - t);
        let noise = rng.substream(call + 1).uniform_in(-noise_delta, noise_delta);
        permanent_ryser(&a).expect("m ≤ 7") + noise
    };
    let series = robust_median_fit_series(
        oracle,
        m,
        (-dw, dw),
        MedianFitOptions {
            nodes: None,
            repetitions,
        },
    )?;
    let est = series.eval(1.0);
    let rounding_floor = f64::EPSILON
        * crate::polyfit::chebyshev_nodes(-dw, dw, 4 * (m + 1))
            .iter()
            .map(|&t| permanent_ryser(&(x_hard * t + &y * (1.0 - t))).map(f64::abs))
            .try_fold(0.0, |a: f64, v| v.map(|v| a.max(v)))?;
    Ok(WorstToAverageReport {
        m,
        delta_window: dw,
        noise_delta,
        per_estimate: est,
        truth: permanent_bruteforce(x_hard)?,
        bound: worst_to_average_bound(noise_delta + rounding_floor, dw, m),
        rounding_floor,
        rounded: est.round(),
        tvd_at_edge: interpolation_tvd(m, dw),
    })
}

/// `√n`, the smallest `m` for which `X_m` is conjectured hard. Advisory only:
/// every pipeline here accepts any `m ≥ 1`.
pub fn advisory_min_m(n: usize) -> f64 {
    (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{sample_coupling, CouplingMatrix, ModelKind};

    #[test]
    fn closed_form_values() {
        assert!((truncation_error(1.0, 1.0, 1) - 2.0).abs() < 1e-12);
        assert_eq!(short_time_xi_bound(3.0, 4, 0.0), 0.0);
        assert_eq!(gaussian_rescaling_tvd(2.0, 2.0, 7), 0.0);
        assert!((gaussian_rescaling_tvd(1.01, 1.0, 10) - 15.0 * 0.0201f64.sqrt()).abs() < 1e-12);
        let e = stockmeyer_error(ModelClass::I, 0.1, 0.5, 0.0, 4, 0.0).unwrap();
        assert!((e - 0.00625).abs() < 1e-15);
        assert_eq!(stockmeyer_error(ModelClass::II, 0.0, 0.5, 0.0, 4, 0.3).unwrap(), 0.0);
        assert!((anticoncentration_thresholds(ModelClass::I, 2) - 1.0 / 16.0).abs() < 1e-15);
        assert!((anticoncentration_thresholds(ModelClass::II, 2) - 1.0 / 6.0).abs() < 1e-15);
        assert!((anticoncentration_thresholds(ModelClass::II, 10) - 1.0 / 184_756.0).abs() < 1e-18);
    }

    #[test]
    fn xi_bound_below_stirling_form() {
        for n in 1..30 {
            let nf = n as f64;
            let t = 0.01;
            let lhs = short_time_xi_bound(3.0 * nf, n, t);
            let rhs = (3.0 * std::f64::consts::E).powf(nf + 1.0) * nf.powf(nf) * t;
            assert!(lhs <= rhs, "n={n}");
        }
    }

    #[test]
    fn zero_couplings_extract_zero() {
        let spec = HamiltonianSpec::new(ModelKind::H3, CouplingMatrix::zeros(2));
        let r = extract_permanent_from_dynamics(&spec, &BitString::all_sigma(2), 0.1, 0.5, 8, OracleMode::Exact)
            .unwrap();
        assert_eq!(r.truth, 0.0);
        assert!(r.per_squared_estimate.abs() < 1e-12);
    }

    #[test]
    fn small_extraction() {
        let spec = HamiltonianSpec::new(ModelKind::H3, sample_coupling(2, &mut Rng::new(5, 0)));
        let r = extract_permanent_from_dynamics(&spec, &BitString::all_sigma(2), 0.1, 0.5, 10, OracleMode::Exact)
            .unwrap();
        assert!(r.abs_error() <= 1e-3 * r.truth, "{r:?}");
    }
}
