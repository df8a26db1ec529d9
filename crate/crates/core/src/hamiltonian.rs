//! Sparse action of `H1`–`H4` in the computational basis.
//!
//! All four couplings (with or without z fields) are real symmetric in the
//! computational basis. Writing `s(b) = +1` for bit 0 and `−1` for bit 1, the
//! pair term on σ site `i` and τ site `j` contributes
//!
//! * `H1`: flip of both bits with weight `J_ij/n`;
//! * `H2`: the same flip plus diagonal `J_ij/n · s_i s_j`;
//! * `H3`: flip with weight `J_ij/n` only when the two bits differ;
//! * `H4`: the `H3` flip plus diagonal `J_ij/(2n) · s_i s_j`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::domain::bits::low_mask;
use crate::domain::{
    BitString, Basis, HamiltonianSpec, ModelKind, Rng, StateVector, WeightSector,
};
use crate::error::{Error, Result};

/// Largest number of stored nonzeros for a sparse action.
pub const MAX_SPARSE_NNZ: usize = 40_000_000;
/// Largest dense full-basis dimension (`2n ≤ 12`).
pub const MAX_DENSE_FULL_DIM: usize = 4096;
/// Largest dense sector dimension.
pub const MAX_DENSE_SECTOR_DIM: usize = 20_000;
/// Dimension up to which spectral norms use a dense eigensolver.
pub const DENSE_NORM_DIM: usize = 1024;

/// Default cap on moment order is `2n + 4`.
pub fn default_moment_cap(n: usize) -> usize {
    2 * n + 4
}

/// Appends the nonzero entries `(target bits, value)` of the row (equivalently
/// column) belonging to `bits`. The diagonal entry, if any, comes first.
pub(crate) fn row_entries(spec: &HamiltonianSpec, bits: u64, out: &mut Vec<(u64, f64)>) {
    let n = spec.n();
    let nf = n as f64;
    let j = spec.couplings();
    let sgn = |p: usize| if (bits >> p) & 1 == 0 { 1.0 } else { -1.0 };
    let mut diag = 0.0;
    let start = out.len();
    out.push((bits, 0.0));
    for i in 0..n {
        for k in 0..n {
            let jik = j.get(i, k);
            let (a, b) = (i, n + k);
            let flip = bits ^ ((1u64 << a) | (1u64 << b));
            let differ = ((bits >> a) ^ (bits >> b)) & 1 == 1;
            match spec.kind() {
                ModelKind::H1 => out.push((flip, jik / nf)),
                ModelKind::H2 => {
                    out.push((flip, jik / nf));
                    diag += jik / nf * sgn(a) * sgn(b);
                }
                ModelKind::H3 => {
                    if differ {
                        out.push((flip, jik / nf));
                    }
                }
                ModelKind::H4 => {
                    if differ {
                        out.push((flip, jik / nf));
                    }
                    diag += jik / (2.0 * nf) * sgn(a) * sgn(b);
                }
            }
        }
    }
    if let Some(z) = spec.z_fields() {
        for i in 0..n {
            diag += z.sigma[i] * sgn(i) + z.tau[i] * sgn(n + i);
        }
    }
    if diag == 0.0 {
        out.remove(start);
    } else {
        out[start].1 = diag;
    }
}

/// Index map for the spaces a sparse action can live on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Space {
    Full { n: usize },
    Weight(WeightSector),
}

impl Space {
    pub(crate) fn dimension(self) -> usize {
        match self {
            Space::Full { n } => 1usize << (2 * n),
            Space::Weight(s) => s.size(),
        }
    }

    pub(crate) fn bits_at(self, idx: usize) -> u64 {
        match self {
            Space::Full { .. } => idx as u64,
            Space::Weight(s) => s.unrank(idx),
        }
    }

    pub(crate) fn index_of(self, bits: u64) -> Option<usize> {
        match self {
            Space::Full { .. } => Some(bits as usize),
            Space::Weight(s) => s.rank(bits),
        }
    }
}

/// Matrix-free-equivalent CSR representation of `H` on one basis.
#[derive(Clone, Debug)]
pub struct SparseAction {
    spec: HamiltonianSpec,
    basis: Basis,
    csr: Csr,
}

#[derive(Clone, Debug)]
pub(crate) struct Csr {
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl Csr {
    pub(crate) fn build(spec: &HamiltonianSpec, space: Space) -> Result<Self> {
        let dim = space.dimension();
        if dim > u32::MAX as usize {
            return Err(Error::SizeGuard {
                guard: "sparse_dimension",
                value: dim,
                limit: u32::MAX as usize,
            });
        }
        let per_row = spec.n() * spec.n() + 1;
        let estimate = dim.saturating_mul(per_row);
        if estimate > MAX_SPARSE_NNZ {
            return Err(Error::SizeGuard {
                guard: "sparse_nnz",
                value: estimate,
                limit: MAX_SPARSE_NNZ,
            });
        }
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::with_capacity(estimate);
        let mut vals = Vec::with_capacity(estimate);
        let mut buf = Vec::with_capacity(per_row);
        row_ptr.push(0);
        for r in 0..dim {
            buf.clear();
            row_entries(spec, space.bits_at(r), &mut buf);
            for &(target, v) in &buf {
                let c = space.index_of(target).ok_or_else(|| {
                    Error::BasisMismatch(format!(
                        "{} couples outside the requested basis",
                        spec.kind()
                    ))
                })?;
                cols.push(c as u32);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Ok(Csr {
            row_ptr,
            cols,
            vals,
        })
    }

    pub(crate) fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub(crate) fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub(crate) fn apply_into(&self, v: &[Complex64], out: &mut [Complex64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += v[self.cols[k] as usize] * self.vals[k];
            }
            *o = acc;
        }
    }

    pub(crate) fn apply_real_into(&self, v: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += v[self.cols[k] as usize] * self.vals[k];
            }
            *o = acc;
        }
    }

    pub(crate) fn to_dense(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        for r in 0..d {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.cols[k] as usize)] += self.vals[k];
            }
        }
        m
    }
}

/// Checks that `basis` is admissible for `kind`.
fn check_basis(kind: ModelKind, basis: Basis) -> Result<()> {
    if basis == Basis::Sector && !kind.conserves_weight() {
        return Err(Error::BasisMismatch(format!(
            "{kind} does not preserve the weight-n sector; use the full basis"
        )));
    }
    Ok(())
}

fn space_for(n: usize, basis: Basis) -> Space {
    match basis {
        Basis::Full => Space::Full { n },
        Basis::Sector => Space::Weight(WeightSector::half_filled(n)),
    }
}

/// The natural basis for a kind: sector for weight-conserving kinds.
pub fn natural_basis(kind: ModelKind) -> Basis {
    if kind.conserves_weight() {
        Basis::Sector
    } else {
        Basis::Full
    }
}

impl SparseAction {
    pub fn new(spec: &HamiltonianSpec, basis: Basis) -> Result<Self> {
        check_basis(spec.kind(), basis)?;
        let csr = Csr::build(spec, space_for(spec.n(), basis))?;
        Ok(SparseAction {
            spec: spec.clone(),
            basis,
            csr,
        })
    }

    pub fn spec(&self) -> &HamiltonianSpec {
        &self.spec
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn dimension(&self) -> usize {
        self.csr.dim()
    }

    pub fn nnz(&self) -> usize {
        self.csr.nnz()
    }

    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        if v.basis() != self.basis || v.n() != self.spec.n() {
            return Err(Error::BasisMismatch(format!(
                "state is in {:?} basis for n = {}, action is {:?} for n = {}",
                v.basis(),
                v.n(),
                self.basis,
                self.spec.n()
            )));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.dimension()];
        self.csr.apply_into(v.amplitudes(), &mut out);
        StateVector::new(self.spec.n(), self.basis, out)
    }

    /// `out = H v` on raw amplitude slices.
    pub fn apply_slice(&self, v: &[Complex64], out: &mut [Complex64]) {
        self.csr.apply_into(v, out);
    }

    pub fn apply_real(&self, v: &[f64], out: &mut [f64]) {
        self.csr.apply_real_into(v, out);
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        self.csr.to_dense()
    }
}

/// Dense real symmetric (hence Hermitian) matrix of `H` in `basis`.
pub fn dense_matrix(spec: &HamiltonianSpec, basis: Basis) -> Result<DMatrix<f64>> {
    check_basis(spec.kind(), basis)?;
    let dim = basis.dimension(spec.n());
    let limit = match basis {
        Basis::Full => MAX_DENSE_FULL_DIM,
        Basis::Sector => MAX_DENSE_SECTOR_DIM,
    };
    if dim > limit {
        return Err(Error::SizeGuard {
            guard: "dense_dimension",
            value: dim,
            limit,
        });
    }
    Ok(Csr::build(spec, space_for(spec.n(), basis))?.to_dense())
}

/// Dense block of `H` on the strings of total weight `w` (weight-conserving kinds only).
pub(crate) fn dense_weight_block(spec: &HamiltonianSpec, w: usize) -> Result<DMatrix<f64>> {
    if !spec.kind().conserves_weight() {
        return Err(Error::BasisMismatch(format!(
            "{} has no weight blocks",
            spec.kind()
        )));
    }
    Ok(Csr::build(spec, Space::Weight(WeightSector::new(spec.n(), w)))?.to_dense())
}

/// `H^l |y₀⟩` for `l = 0..=kmax` in the natural basis of the kind.
pub fn power_vectors(spec: &HamiltonianSpec, kmax: usize) -> Result<(Basis, Vec<Vec<f64>>)> {
    let basis = natural_basis(spec.kind());
    let action = SparseAction::new(spec, basis)?;
    let n = spec.n();
    let y0 = BitString::initial(n);
    let mut v = vec![0.0; action.dimension()];
    v[basis.index_of(&y0).expect("y0 lies in every basis")] = 1.0;
    let mut out = Vec::with_capacity(kmax + 1);
    out.push(v);
    for _ in 0..kmax {
        let mut next = vec![0.0; action.dimension()];
        action.apply_real(out.last().unwrap(), &mut next);
        out.push(next);
    }
    Ok((basis, out))
}

/// `⟨x|H^l|y₀⟩` for `l = 0..=kmax`.
pub fn moment_sequence(spec: &HamiltonianSpec, x: &BitString, kmax: usize) -> Result<Vec<f64>> {
    check_moment_args(spec, x, kmax)?;
    let (basis, powers) = power_vectors(spec, kmax)?;
    Ok(match basis.index_of(x) {
        Some(i) => powers.iter().map(|v| v[i]).collect(),
        None => vec![0.0; kmax + 1],
    })
}

/// `⟨x|H^k|y₀⟩` by `k` sparse applications to `|y₀⟩` (raw value, no zero suppression).
pub fn moment(spec: &HamiltonianSpec, x: &BitString, k: usize) -> Result<f64> {
    Ok(moment_sequence(spec, x, k)?[k])
}

fn check_moment_args(spec: &HamiltonianSpec, x: &BitString, k: usize) -> Result<()> {
    if x.n() != spec.n() {
        return Err(Error::invalid(format!(
            "bitstring half-size {} differs from n = {}",
            x.n(),
            spec.n()
        )));
    }
    let cap = default_moment_cap(spec.n());
    if k > cap {
        return Err(Error::SizeGuard {
            guard: "moment_order",
            value: k,
            limit: cap,
        });
    }
    Ok(())
}

/// Spectral norm `‖H‖`.
///
/// `H1` without fields is diagonal in the x basis, so its norm is
/// `max_s Σ_j |Σ_i J_ij s_i| / n` over sign vectors `s`. Weight-conserving
/// kinds are reduced to their weight blocks. Dimensions up to
/// [`DENSE_NORM_DIM`] use a dense eigensolver, larger ones a Lanczos
/// iteration from a fixed-seed start vector.
pub fn operator_norm(spec: &HamiltonianSpec) -> Result<f64> {
    let n = spec.n();
    if spec.kind() == ModelKind::H1 && spec.z_fields().is_none() && n <= 24 {
        return Ok(h1_norm_closed_form(spec));
    }
    if spec.kind().conserves_weight() {
        let mut best: f64 = 0.0;
        for w in 0..=2 * n {
            let space = Space::Weight(WeightSector::new(n, w));
            best = best.max(space_norm(spec, space)?);
        }
        return Ok(best);
    }
    space_norm(spec, Space::Full { n })
}

fn h1_norm_closed_form(spec: &HamiltonianSpec) -> f64 {
    let n = spec.n();
    let j = spec.couplings();
    let mut best: f64 = 0.0;
    for s in 0..(1u64 << n) {
        let mut total = 0.0;
        for k in 0..n {
            let col: f64 = (0..n)
                .map(|i| if (s >> i) & 1 == 0 { j.get(i, k) } else { -j.get(i, k) })
                .sum();
            total += col.abs();
        }
        best = best.max(total);
    }
    best / n as f64
}

fn space_norm(spec: &HamiltonianSpec, space: Space) -> Result<f64> {
    let dim = space.dimension();
    let csr = Csr::build(spec, space)?;
    if dim <= DENSE_NORM_DIM {
        let eig = csr.to_dense().symmetric_eigen();
        return Ok(eig.eigenvalues.iter().fold(0.0, |m: f64, v| m.max(v.abs())));
    }
    lanczos_extreme(&csr, 1e-8, 400)
}

/// Largest `|λ|` of a real symmetric CSR operator by restarted-free Lanczos
/// with full reorthogonalization.
fn lanczos_extreme(csr: &Csr, rel_tol: f64, max_iter: usize) -> Result<f64> {
    let dim = csr.dim();
    let mut rng = Rng::new(0x5eed_0f4e11, 0);
    let mut q: Vec<f64> = (0..dim).map(|_| rng.gaussian()).collect();
    normalize(&mut q);
    let mut basis: Vec<Vec<f64>> = vec![q];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; dim];
    let mut prev = f64::NAN;
    let mut residual = f64::INFINITY;
    let steps = max_iter.min(dim);
    for it in 0..steps {
        csr.apply_real_into(&basis[it], &mut w);
        let a = dot(&basis[it], &w);
        alpha.push(a);
        for b in &basis {
            let c = dot(b, &w);
            axpy(-c, b, &mut w);
        }
        for b in &basis {
            let c = dot(b, &w);
            axpy(-c, b, &mut w);
        }
        let bnext = dot(&w, &w).sqrt();
        let (lam, last) = tridiag_extreme(&alpha, &beta);
        residual = (bnext * last).abs();
        let converged = residual <= rel_tol * lam.abs().max(f64::MIN_POSITIVE)
            || (prev.is_finite() && (lam - prev).abs() <= rel_tol * 1e-3 * lam.abs() && it > 20);
        if converged || bnext <= 1e-300 || it + 1 == dim {
            return Ok(lam.abs());
        }
        prev = lam;
        beta.push(bnext);
        let mut next = w.clone();
        next.iter_mut().for_each(|v| *v /= bnext);
        basis.push(next);
    }
    Err(Error::NonConvergence {
        method: "lanczos_norm",
        iterations: steps,
        residual,
    })
}

/// Eigenvalue of largest magnitude of the tridiagonal `(alpha, beta)` and the
/// last component of its eigenvector.
fn tridiag_extreme(alpha: &[f64], beta: &[f64]) -> (f64, f64) {
    let m = alpha.len();
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
    let (k, lam) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(k, v)| (k, *v))
        .unwrap();
    (lam, eig.eigenvectors[(m - 1, k)])
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(c: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += c * xi);
}

fn normalize(v: &mut [f64]) {
    let s = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= s);
}

/// The printed upper bound `c_kind · Σ|J_ij| / n` on `‖H‖` (no fields).
pub fn norm_upper_bound(spec: &HamiltonianSpec) -> f64 {
    spec.kind().norm_prefactor() * spec.couplings().abs_sum() / spec.n() as f64
}

/// `min(1, 2^{n²} e^{−c²n²/2})`, evaluated in log space.
pub fn norm_tail_probability(c: f64, n: usize) -> f64 {
    let n2 = (n * n) as f64;
    let log = n2 * std::f64::consts::LN_2 - c * c * n2 / 2.0;
    log.min(0.0).exp()
}

/// Unclamped `2^{n²} e^{−c²n²/2}`.
pub fn norm_tail_bound_raw(c: f64, n: usize) -> f64 {
    let n2 = (n * n) as f64;
    (n2 * std::f64::consts::LN_2 - c * c * n2 / 2.0).exp()
}

/// Total `J_z`-like weight operator (number of ones) as a diagonal in `basis`.
pub fn weight_diagonal(n: usize, basis: Basis) -> DVector<f64> {
    let dim = basis.dimension(n);
    DVector::from_fn(dim, |i, _| {
        (basis.bits_at(n, i) & low_mask(2 * n)).count_ones() as f64
    })
}
