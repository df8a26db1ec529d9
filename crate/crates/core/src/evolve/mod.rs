//! Time evolution `e^{−iHt}|y₀⟩` and output probabilities `p(x;J;t)`.
//!
//! Weight-conserving kinds evolve inside the weight-`n` sector, the others in
//! the full basis. Small dimensions use a dense eigendecomposition; larger
//! ones use Lanczos exponential-times-vector substeps.

mod krylov;

pub use krylov::{expmv, KrylovOptions};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::domain::{BitString, Basis, HamiltonianSpec, StateVector};
use crate::error::{Error, Result};
use crate::hamiltonian::{natural_basis, SparseAction, MAX_DENSE_FULL_DIM};

/// Largest dimension `Backend::Auto` hands to the dense eigensolver.
pub const AUTO_DENSE_DIM: usize = 512;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Backend {
    #[default]
    Auto,
    Dense,
    Krylov,
}

impl Backend {
    fn resolve(self, dim: usize) -> Result<Backend> {
        match self {
            Backend::Auto if dim <= AUTO_DENSE_DIM => Ok(Backend::Dense),
            Backend::Auto => Ok(Backend::Krylov),
            Backend::Dense if dim > MAX_DENSE_FULL_DIM => Err(Error::SizeGuard {
                guard: "dense_dimension",
                value: dim,
                limit: MAX_DENSE_FULL_DIM,
            }),
            b => Ok(b),
        }
    }
}

/// Eigendecomposition of `H` together with the expansion of `|y₀⟩`.
#[derive(Clone, Debug)]
pub struct DensePropagator {
    n: usize,
    basis: Basis,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    /// `⟨k|y₀⟩` for each eigenvector `k`.
    overlap: DVector<f64>,
}

impl DensePropagator {
    pub fn new(spec: &HamiltonianSpec) -> Result<Self> {
        let basis = natural_basis(spec.kind());
        let dim = basis.dimension(spec.n());
        Backend::Dense.resolve(dim)?;
        let h = SparseAction::new(spec, basis)?.to_dense();
        let eig = h.symmetric_eigen();
        let i0 = basis
            .index_of(&BitString::initial(spec.n()))
            .expect("y0 lies in every basis");
        let overlap = eig.eigenvectors.row(i0).transpose();
        Ok(DensePropagator {
            n: spec.n(),
            basis,
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
            overlap,
        })
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    fn phases(&self, t: f64) -> Vec<Complex64> {
        self.eigenvalues
            .iter()
            .zip(self.overlap.iter())
            .map(|(&l, &c)| Complex64::from_polar(c, -l * t))
            .collect()
    }

    pub fn state(&self, t: f64) -> StateVector {
        let ph = self.phases(t);
        let dim = self.eigenvectors.nrows();
        let amps = (0..dim)
            .map(|r| {
                self.eigenvectors
                    .row(r)
                    .iter()
                    .zip(&ph)
                    .map(|(v, p)| p * *v)
                    .sum()
            })
            .collect();
        StateVector::new(self.n, self.basis, amps).expect("dimension fixed by construction")
    }

    pub fn amplitude(&self, x: &BitString, t: f64) -> Complex64 {
        match self.basis.index_of(x) {
            Some(r) => self
                .eigenvectors
                .row(r)
                .iter()
                .zip(self.overlap.iter())
                .zip(self.eigenvalues.iter())
                .map(|((v, c), l)| Complex64::from_polar(v * c, -l * t))
                .sum(),
            None => Complex64::new(0.0, 0.0),
        }
    }

    pub fn probability(&self, x: &BitString, t: f64) -> f64 {
        self.amplitude(x, t).norm_sqr()
    }

    /// `lim_{T→∞} (1/T)∫₀ᵀ p(x;t) dt`: eigenvalues closer than `tol` are
    /// treated as one level and the cross terms of distinct levels average out.
    pub fn infinite_time_average(&self, x: &BitString, tol: f64) -> f64 {
        let Some(r) = self.basis.index_of(x) else {
            return 0.0;
        };
        // symmetric_eigen does not sort, so order the levels first.
        let mut order: Vec<usize> = (0..self.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| self.eigenvalues[a].total_cmp(&self.eigenvalues[b]));
        let mut total = 0.0;
        let mut level = 0.0;
        let mut last = f64::NEG_INFINITY;
        for k in order {
            let e = self.eigenvalues[k];
            if e - last > tol {
                total += level * level;
                level = 0.0;
            }
            level += self.eigenvectors[(r, k)] * self.overlap[k];
            last = e;
        }
        total + level * level
    }

    /// Smallest gap between distinct levels (separated by more than `tol`).
    pub fn min_level_gap(&self, tol: f64) -> f64 {
        let mut e: Vec<f64> = self.eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e.windows(2)
            .map(|w| w[1] - w[0])
            .filter(|&g| g > tol)
            .fold(f64::INFINITY, f64::min)
    }
}

/// `e^{−iHt}|y₀⟩` with the automatic backend.
pub fn evolve_exact(spec: &HamiltonianSpec, t: f64) -> Result<StateVector> {
    evolve_with(spec, t, Backend::Auto)
}

pub fn evolve_with(spec: &HamiltonianSpec, t: f64, backend: Backend) -> Result<StateVector> {
    let mut out = None;
    evolve_times(spec, &[t], backend, |_, s| out = Some(s.clone()))?;
    Ok(out.expect("one time requested"))
}

/// Evolves `|y₀⟩` to each of `times` in turn and hands the states to `visit`.
///
/// The Krylov backend propagates from one requested time to the next, so
/// ordered grids cost one sweep.
pub fn evolve_times(
    spec: &HamiltonianSpec,
    times: &[f64],
    backend: Backend,
    mut visit: impl FnMut(usize, &StateVector),
) -> Result<()> {
    let basis = natural_basis(spec.kind());
    let n = spec.n();
    match backend.resolve(basis.dimension(n))? {
        Backend::Dense => {
            let prop = DensePropagator::new(spec)?;
            for (i, &t) in times.iter().enumerate() {
                visit(i, &prop.state(t));
            }
        }
        _ => {
            let action = SparseAction::new(spec, basis)?;
            let opts = KrylovOptions::default();
            let mut state = StateVector::basis_state(&BitString::initial(n), basis)?;
            let mut now = 0.0;
            for (i, &t) in times.iter().enumerate() {
                if t != now {
                    let amps = expmv(&action, state.amplitudes(), t - now, &opts)?;
                    state = StateVector::new(n, basis, amps)?;
                    now = t;
                }
                visit(i, &state);
            }
        }
    }
    Ok(())
}

/// `p(x;J;t) = |⟨x|e^{−iHt}|y₀⟩|²`.
pub fn output_probability(spec: &HamiltonianSpec, x: &BitString, t: f64) -> Result<f64> {
    Ok(probability_series(spec, x, &[t], Backend::Auto)?[0])
}

/// `p(x;J;t)` for every entry of `times`.
pub fn probability_series(
    spec: &HamiltonianSpec,
    x: &BitString,
    times: &[f64],
    backend: Backend,
) -> Result<Vec<f64>> {
    if x.n() != spec.n() {
        return Err(Error::invalid(format!(
            "bitstring half-size {} differs from n = {}",
            x.n(),
            spec.n()
        )));
    }
    let basis = natural_basis(spec.kind());
    if backend.resolve(basis.dimension(spec.n()))? == Backend::Dense {
        let prop = DensePropagator::new(spec)?;
        return Ok(times.iter().map(|&t| prop.probability(x, t)).collect());
    }
    let mut out = vec![0.0; times.len()];
    evolve_times(spec, times, Backend::Krylov, |i, s| out[i] = s.probability(x))?;
    Ok(out)
}

/// Uniform grid of `grid` points on `[0, T]`.
pub fn uniform_grid(t_max: f64, grid: usize) -> Vec<f64> {
    (0..grid)
        .map(|i| t_max * i as f64 / (grid - 1) as f64)
        .collect()
}

/// Trapezoid mean of a series sampled on a uniform grid.
pub fn trapezoid_mean(values: &[f64]) -> f64 {
    let k = values.len();
    if k == 1 {
        return values[0];
    }
    let inner: f64 = values.iter().sum::<f64>() - 0.5 * (values[0] + values[k - 1]);
    inner / (k - 1) as f64
}

/// `(1/T)∫₀ᵀ p(x;J;t) dt` by the trapezoid rule on `grid` uniform points.
pub fn time_average(spec: &HamiltonianSpec, x: &BitString, t_max: f64, grid: usize) -> Result<f64> {
    if grid < 100 {
        return Err(Error::invalid(format!("time-average grid must be >= 100, got {grid}")));
    }
    if t_max <= 0.0 {
        return output_probability(spec, x, 0.0);
    }
    let ps = probability_series(spec, x, &uniform_grid(t_max, grid), Backend::Auto)?;
    Ok(trapezoid_mean(&ps))
}

/// `⟨ψ|H|ψ⟩`.
pub fn energy(action: &SparseAction, state: &StateVector) -> Result<f64> {
    Ok(state.inner(&action.apply(state)?)?.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{sample_coupling, CouplingMatrix, ModelKind, Rng, WeightSector};

    fn spec(kind: ModelKind, n: usize, seed: u64) -> HamiltonianSpec {
        HamiltonianSpec::new(kind, sample_coupling(n, &mut Rng::new(seed, 0)))
    }

    #[test]
    fn zero_time_is_initial_state() {
        for kind in ModelKind::ALL {
            for backend in [Backend::Dense, Backend::Krylov] {
                let s = spec(kind, 2, 3);
                let psi = evolve_with(&s, 0.0, backend).unwrap();
                let y0 = BitString::initial(2);
                assert!((psi.probability(&y0) - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn single_pair_closed_form() {
        // σx τx on |01⟩ rotates to |10⟩: p = sin²(gt).
        let g = 0.73;
        let s = HamiltonianSpec::new(ModelKind::H1, CouplingMatrix::from_rows(&[vec![g]]).unwrap());
        let x0 = BitString::all_sigma(1);
        for &t in &[0.1, 0.5, 1.3, 4.0] {
            let p = output_probability(&s, &x0, t).unwrap();
            assert!((p - (g * t).sin().powi(2)).abs() < 1e-12, "t={t}: {p}");
        }
    }

    #[test]
    fn sector_kinds_stay_in_sector() {
        for kind in [ModelKind::H3, ModelKind::H4] {
            let s = spec(kind, 3, 8);
            let psi = evolve_with(&s, 1.7, Backend::Dense).unwrap();
            assert_eq!(psi.dimension(), WeightSector::half_filled(3).size());
            assert!((psi.norm_sqr() - 1.0).abs() < 1e-10);
            let off = BitString::from_bits(3, 0b000111 | 0b1000).unwrap();
            assert_eq!(output_probability(&s, &off, 1.7).unwrap(), 0.0);
        }
    }

    #[test]
    fn rescaling_identity() {
        let s = spec(ModelKind::H2, 2, 12);
        let x = BitString::all_sigma(2);
        let (t, t0) = (0.9, 0.4);
        let a = output_probability(&s, &x, t).unwrap();
        let b = output_probability(&s.scaled(t / t0), &x, t0).unwrap();
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn ising_time_average_even_branch() {
        let s = spec(ModelKind::H1, 2, 41);
        let x: BitString = "1100".parse().unwrap();
        let avg = time_average(&s, &x, 200.0, 20_001).unwrap();
        assert!((avg - 0.125).abs() < 0.02 * 0.125, "{avg}");
    }
}
