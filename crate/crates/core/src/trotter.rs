//! Product-formula circuits for `e^{−iHt}`, their exact operator-norm error,
//! nested-commutator sums `Υ_p`, and gate-count planning.
//!
//! Every gate is `exp(−i · angle · P)` for a Pauli pair `P` on one σ site and
//! one τ site. Gates are listed in application order.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::domain::{sample_coupling, BitString, Basis, HamiltonianSpec, ModelKind, Rng, StateVector, WeightSector};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::hamiltonian::{dense_matrix, dense_weight_block, MAX_DENSE_FULL_DIM};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Largest `n` for exact nested-commutator sums.
pub const MAX_UPSILON_N: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PauliPair {
    XX,
    YY,
    ZZ,
    XxYy,
    XxYyZz,
}

impl PauliPair {
    fn components(self) -> &'static [Pauli] {
        match self {
            PauliPair::XX => &[Pauli::X],
            PauliPair::YY => &[Pauli::Y],
            PauliPair::ZZ => &[Pauli::Z],
            PauliPair::XxYy => &[Pauli::X, Pauli::Y],
            PauliPair::XxYyZz => &[Pauli::X, Pauli::Y, Pauli::Z],
        }
    }
}

impl fmt::Display for PauliPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PauliPair::XX => "XX",
            PauliPair::YY => "YY",
            PauliPair::ZZ => "ZZ",
            PauliPair::XxYy => "XX+YY",
            PauliPair::XxYyZz => "XX+YY+ZZ",
        })
    }
}

impl FromStr for PauliPair {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "XX" => Ok(PauliPair::XX),
            "YY" => Ok(PauliPair::YY),
            "ZZ" => Ok(PauliPair::ZZ),
            "XX+YY" => Ok(PauliPair::XxYy),
            "XX+YY+ZZ" => Ok(PauliPair::XxYyZz),
            _ => Err(Error::invalid(format!("unknown Pauli pair `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    /// `P|b⟩ = phase · |b'⟩`.
    fn act(self, bit: u64) -> (u64, Complex64) {
        match self {
            Pauli::X => (bit ^ 1, ONE),
            Pauli::Y => (bit ^ 1, if bit == 0 { I } else { -I }),
            Pauli::Z => (bit, if bit == 0 { ONE } else { -ONE }),
        }
    }
}

/// `exp(−i · angle · P)` on σ site `sigma` and τ site `tau` (both 0-based).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gate {
    pub sigma: usize,
    pub tau: usize,
    pub tag: PauliPair,
    pub angle: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrotterOrder {
    First,
    Second,
}

impl TryFrom<u8> for TrotterOrder {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(TrotterOrder::First),
            2 => Ok(TrotterOrder::Second),
            _ => Err(Error::invalid(format!("Trotter order must be 1 or 2, got {v}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateSequence {
    n: usize,
    gates: Vec<Gate>,
}

impl GateSequence {
    pub fn new(n: usize, gates: Vec<Gate>) -> Result<Self> {
        if gates.iter().any(|g| g.sigma >= n || g.tau >= n) {
            return Err(Error::invalid("gate site outside 0..n"));
        }
        Ok(GateSequence { n, gates })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    /// One line per gate: `<order-index> <i> <j> <tag> <angle>`, sites 1-based.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (k, g) in self.gates.iter().enumerate() {
            writeln!(w, "{} {} {} {} {:e}", k, g.sigma + 1, g.tau + 1, g.tag, g.angle)?;
        }
        Ok(())
    }

    pub fn parse_text(n: usize, text: &str) -> Result<Self> {
        let mut gates = Vec::new();
        for (line_no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::invalid(format!("malformed gate line {}: `{line}`", line_no + 1));
            if f.len() != 5 {
                return Err(bad());
            }
            let site = |s: &str| s.parse::<usize>().ok().filter(|&v| v >= 1).map(|v| v - 1);
            gates.push(Gate {
                sigma: site(f[1]).ok_or_else(bad)?,
                tau: site(f[2]).ok_or_else(bad)?,
                tag: f[3].parse()?,
                angle: f[4].parse().map_err(|_| bad())?,
            });
        }
        GateSequence::new(n, gates)
    }

    /// Applies the gates in order to a full-basis amplitude vector.
    pub fn apply_full(&self, amps: &mut [Complex64]) {
        for g in &self.gates {
            apply_gate(g, self.n, amps);
        }
    }

    /// Applies the circuit to `|y₀⟩`, returning the state in the kind's natural basis.
    pub fn apply_to_initial(&self, basis: Basis) -> Result<StateVector> {
        let n = self.n;
        let mut full = StateVector::basis_state(&BitString::initial(n), Basis::Full)?.into_amplitudes();
        self.apply_full(&mut full);
        match basis {
            Basis::Full => StateVector::new(n, basis, full),
            Basis::Sector => {
                let sector = WeightSector::half_filled(n);
                let amps = sector.iter().map(|b| full[b as usize]).collect();
                StateVector::new(n, basis, amps)
            }
        }
    }
}

/// `exp(−iθP)` on one σ–τ pair of a full-basis vector.
///
/// * `XX`: `cos θ − i sin θ XX`
/// * `XX+YY`: identity on `|00⟩, |11⟩`; `cos 2θ − i sin 2θ σx` on `{|01⟩, |10⟩}`
/// * `XX+YY+ZZ = 2·SWAP − I`: `e^{iθ}(cos 2θ − i sin 2θ SWAP)`
pub fn apply_gate(g: &Gate, n: usize, amps: &mut [Complex64]) {
    let a = 1usize << g.sigma;
    let b = 1usize << (n + g.tau);
    let th = g.angle;
    for idx in 0..amps.len() {
        // Visit each 4-dimensional block once, from its |00⟩ member.
        if idx & (a | b) != 0 {
            continue;
        }
        let (i00, i10, i01, i11) = (idx, idx | a, idx | b, idx | a | b);
        let (v00, v10, v01, v11) = (amps[i00], amps[i10], amps[i01], amps[i11]);
        match g.tag {
            PauliPair::XX => {
                let (c, s) = (Complex64::new(th.cos(), 0.0), Complex64::new(0.0, -th.sin()));
                amps[i00] = c * v00 + s * v11;
                amps[i11] = c * v11 + s * v00;
                amps[i10] = c * v10 + s * v01;
                amps[i01] = c * v01 + s * v10;
            }
            PauliPair::YY => {
                // YY|00⟩ = −|11⟩, YY|01⟩ = |10⟩.
                let (c, s) = (Complex64::new(th.cos(), 0.0), Complex64::new(0.0, -th.sin()));
                amps[i00] = c * v00 - s * v11;
                amps[i11] = c * v11 - s * v00;
                amps[i10] = c * v10 + s * v01;
                amps[i01] = c * v01 + s * v10;
            }
            PauliPair::ZZ => {
                let even = Complex64::from_polar(1.0, -th);
                let odd = Complex64::from_polar(1.0, th);
                amps[i00] = even * v00;
                amps[i11] = even * v11;
                amps[i10] = odd * v10;
                amps[i01] = odd * v01;
            }
            PauliPair::XxYy => {
                let (c, s) = (
                    Complex64::new((2.0 * th).cos(), 0.0),
                    Complex64::new(0.0, -(2.0 * th).sin()),
                );
                amps[i10] = c * v10 + s * v01;
                amps[i01] = c * v01 + s * v10;
            }
            PauliPair::XxYyZz => {
                let ph = Complex64::from_polar(1.0, th);
                let (c, s) = (
                    Complex64::new((2.0 * th).cos(), 0.0),
                    Complex64::new(0.0, -(2.0 * th).sin()),
                );
                let diag = Complex64::from_polar(1.0, -th);
                amps[i00] = diag * v00;
                amps[i11] = diag * v11;
                amps[i10] = ph * (c * v10 + s * v01);
                amps[i01] = ph * (c * v01 + s * v10);
            }
        }
    }
}

/// `(tag, coefficient of the term per unit J_ij)` for each generator of a pair.
fn pair_generators(kind: ModelKind, n: usize) -> Vec<(PauliPair, f64)> {
    let nf = n as f64;
    match kind {
        ModelKind::H1 => vec![(PauliPair::XX, 1.0 / nf)],
        ModelKind::H2 => vec![(PauliPair::XX, 1.0 / nf), (PauliPair::ZZ, 1.0 / nf)],
        ModelKind::H3 => vec![(PauliPair::XxYy, 0.5 / nf)],
        ModelKind::H4 => vec![(PauliPair::XxYyZz, 0.5 / nf)],
    }
}

fn reject_fields(spec: &HamiltonianSpec) -> Result<()> {
    if spec.z_fields().is_some() {
        return Err(Error::invalid(
            "product-formula circuits are built for field-free couplings only",
        ));
    }
    Ok(())
}

/// One sweep over all pair terms in row-major `(i, j)` order with time step `dt`.
fn sweep(spec: &HamiltonianSpec, dt: f64, reverse: bool, out: &mut Vec<Gate>) {
    let n = spec.n();
    let gens = pair_generators(spec.kind(), n);
    let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    if reverse {
        pairs.reverse();
    }
    for (i, j) in pairs {
        let jij = spec.couplings().get(i, j);
        let mut push = |&(tag, c): &(PauliPair, f64)| {
            out.push(Gate {
                sigma: i,
                tau: j,
                tag,
                angle: dt * jij * c,
            })
        };
        if reverse {
            gens.iter().rev().for_each(&mut push);
        } else {
            gens.iter().for_each(&mut push);
        }
    }
}

fn single_step(spec: &HamiltonianSpec, dt: f64, order: TrotterOrder) -> Vec<Gate> {
    let mut gates = Vec::new();
    match order {
        TrotterOrder::First => sweep(spec, dt, false, &mut gates),
        TrotterOrder::Second => {
            sweep(spec, dt / 2.0, false, &mut gates);
            sweep(spec, dt / 2.0, true, &mut gates);
        }
    }
    gates
}

/// `M` repetitions of a first-order sweep, or of a forward-then-reverse
/// half-step sweep for second order.
pub fn build_trotter(
    spec: &HamiltonianSpec,
    t: f64,
    steps: usize,
    order: TrotterOrder,
) -> Result<GateSequence> {
    reject_fields(spec)?;
    if steps == 0 {
        return Err(Error::invalid("M must be at least 1"));
    }
    let step = single_step(spec, t / steps as f64, order);
    let mut gates = Vec::with_capacity(step.len() * steps);
    for _ in 0..steps {
        gates.extend_from_slice(&step);
    }
    GateSequence::new(spec.n(), gates)
}

/// The block structure used for exact error evaluation: weight sectors for
/// weight-conserving kinds, the full space otherwise.
fn blocks(spec: &HamiltonianSpec) -> Vec<Option<WeightSector>> {
    if spec.kind().conserves_weight() {
        (0..=2 * spec.n()).map(|w| Some(WeightSector::new(spec.n(), w))).collect()
    } else {
        vec![None]
    }
}

fn check_dense(spec: &HamiltonianSpec) -> Result<()> {
    let dim = 1usize << (2 * spec.n());
    if dim > MAX_DENSE_FULL_DIM {
        return Err(Error::SizeGuard {
            guard: "dense_dimension",
            value: dim,
            limit: MAX_DENSE_FULL_DIM,
        });
    }
    Ok(())
}

fn block_members(n: usize, block: Option<WeightSector>) -> Vec<usize> {
    match block {
        Some(s) => s.iter().map(|b| b as usize).collect(),
        None => (0..1usize << (2 * n)).collect(),
    }
}

/// Matrix of a gate list restricted to the block, built column by column.
fn circuit_block(gates: &[Gate], n: usize, members: &[usize]) -> DMatrix<Complex64> {
    let dim = members.len();
    let full = 1usize << (2 * n);
    let mut m = DMatrix::zeros(dim, dim);
    let mut v = vec![ZERO; full];
    for (c, &col) in members.iter().enumerate() {
        v.iter_mut().for_each(|x| *x = ZERO);
        v[col] = ONE;
        for g in gates {
            apply_gate(g, n, &mut v);
        }
        for (r, &row) in members.iter().enumerate() {
            m[(r, c)] = v[row];
        }
    }
    m
}

fn exact_block(spec: &HamiltonianSpec, t: f64, block: Option<WeightSector>) -> Result<DMatrix<Complex64>> {
    let h = match block {
        Some(s) => dense_weight_block(spec, s.weight())?,
        None => dense_matrix(spec, Basis::Full)?,
    };
    let eig = h.symmetric_eigen();
    let v = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
    let phases = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| Complex64::from_polar(1.0, -l * t)),
    );
    let mut vd = v.clone();
    for (k, mut col) in vd.column_iter_mut().enumerate() {
        col *= phases[k];
    }
    Ok(vd * v.transpose())
}

fn matrix_power(m: &DMatrix<Complex64>, mut e: usize) -> DMatrix<Complex64> {
    let mut result = DMatrix::identity(m.nrows(), m.ncols());
    let mut base = m.clone();
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    result
}

fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0, |a: f64, &s| a.max(s))
}

/// `‖e^{−iHt} − T^M‖` in the spectral norm, from dense block matrices.
pub fn trotter_operator_error(
    spec: &HamiltonianSpec,
    t: f64,
    steps: usize,
    order: TrotterOrder,
) -> Result<f64> {
    reject_fields(spec)?;
    check_dense(spec)?;
    if steps == 0 {
        return Err(Error::invalid("M must be at least 1"));
    }
    let n = spec.n();
    let step = single_step(spec, t / steps as f64, order);
    let mut worst: f64 = 0.0;
    for block in blocks(spec) {
        let members = block_members(n, block);
        let trot = matrix_power(&circuit_block(&step, n, &members), steps);
        let exact = exact_block(spec, t, block)?;
        worst = worst.max(spectral_norm(&(exact - trot)));
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct L1Check {
    /// `Σ_x |p(x) − p'(x)|` between exact and Trotterized output distributions.
    pub l1_distance: f64,
    /// `4‖U − Ũ‖`.
    pub four_norm_bound: f64,
}

impl L1Check {
    pub fn holds(&self) -> bool {
        self.l1_distance <= self.four_norm_bound * (1.0 + 1e-12) + 1e-14
    }
}

pub fn l1_unitary_bound_check(
    spec: &HamiltonianSpec,
    t: f64,
    steps: usize,
    order: TrotterOrder,
) -> Result<L1Check> {
    let err = trotter_operator_error(spec, t, steps, order)?;
    let n = spec.n();
    let exact = crate::evolve::evolve_with(spec, t, crate::evolve::Backend::Dense)?.to_full();
    let trot = build_trotter(spec, t, steps, order)?.apply_to_initial(Basis::Full)?;
    let l1 = exact
        .amplitudes()
        .iter()
        .zip(trot.amplitudes())
        .map(|(a, b)| (a.norm_sqr() - b.norm_sqr()).abs())
        .sum();
    debug_assert_eq!(exact.n(), n);
    Ok(L1Check {
        l1_distance: l1,
        four_norm_bound: 4.0 * err,
    })
}

/// One Hamiltonian term `coeff · P` on σ site `sigma`, τ site `tau`.
#[derive(Clone, Copy, Debug)]
struct Term {
    sigma: usize,
    tau: usize,
    tag: PauliPair,
    coeff: f64,
}

impl Term {
    fn sites(&self, n: usize) -> [usize; 2] {
        [self.sigma, n + self.tau]
    }
}

fn terms(spec: &HamiltonianSpec) -> Vec<Term> {
    let n = spec.n();
    let gens = pair_generators(spec.kind(), n);
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for &(tag, c) in &gens {
                out.push(Term {
                    sigma: i,
                    tau: j,
                    tag,
                    coeff: c * spec.couplings().get(i, j),
                });
            }
        }
    }
    out
}

/// Dense matrix of `term` on the local qubits `sites` (bit `q` of the local index is `sites[q]`).
fn local_matrix(term: &Term, n: usize, sites: &[usize]) -> DMatrix<Complex64> {
    let dim = 1usize << sites.len();
    let [ga, gb] = term.sites(n);
    let qa = sites.iter().position(|&s| s == ga).expect("site in support");
    let qb = sites.iter().position(|&s| s == gb).expect("site in support");
    let mut m = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        for &p in term.tag.components() {
            let (ba, pa) = p.act(((col >> qa) & 1) as u64);
            let (bb, pb) = p.act(((col >> qb) & 1) as u64);
            let row = (col & !(1 << qa) & !(1 << qb)) | ((ba as usize) << qa) | ((bb as usize) << qb);
            m[(row, col)] += pa * pb * term.coeff;
        }
    }
    m
}

fn support(ts: &[&Term], n: usize) -> Vec<usize> {
    let mut s: Vec<usize> = ts.iter().flat_map(|t| t.sites(n)).collect();
    s.sort_unstable();
    s.dedup();
    s
}

fn shares_site(a: &[usize], b: &[usize]) -> bool {
    a.iter().any(|x| b.contains(x))
}

fn commutator(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a * b - b * a
}

/// `Υ_p = Σ ‖[h_{i_{p+1}}, …, [h_{i_2}, h_{i_1}]]‖` over all ordered tuples of
/// terms, `p ∈ {1, 2}`. Tuples whose commutator vanishes because supports do
/// not overlap are skipped when `skip_disjoint` is set; the result is the same.
pub fn upsilon_with(spec: &HamiltonianSpec, p: usize, skip_disjoint: bool) -> Result<f64> {
    reject_fields(spec)?;
    let n = spec.n();
    if n > MAX_UPSILON_N {
        return Err(Error::SizeGuard {
            guard: "upsilon_n",
            value: n,
            limit: MAX_UPSILON_N,
        });
    }
    let ts = terms(spec);
    let mut total = 0.0;
    match p {
        1 => {
            for a in &ts {
                for b in &ts {
                    if skip_disjoint && !shares_site(&a.sites(n), &b.sites(n)) {
                        continue;
                    }
                    let sup = support(&[a, b], n);
                    let c = commutator(&local_matrix(b, n, &sup), &local_matrix(a, n, &sup));
                    total += spectral_norm(&c);
                }
            }
        }
        2 => {
            for a in &ts {
                for b in &ts {
                    if skip_disjoint && !shares_site(&a.sites(n), &b.sites(n)) {
                        continue;
                    }
                    let ab = support(&[a, b], n);
                    for c in &ts {
                        if skip_disjoint && !shares_site(&c.sites(n), &ab) {
                            continue;
                        }
                        let sup = support(&[a, b, c], n);
                        let inner = commutator(&local_matrix(b, n, &sup), &local_matrix(a, n, &sup));
                        total += spectral_norm(&commutator(&local_matrix(c, n, &sup), &inner));
                    }
                }
            }
        }
        _ => return Err(Error::invalid(format!("Υ_p needs p ∈ {{1, 2}}, got {p}"))),
    }
    Ok(total)
}

pub fn upsilon(spec: &HamiltonianSpec, p: usize) -> Result<f64> {
    upsilon_with(spec, p, true)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GatePlan {
    /// Trotter steps `M`, rounded up.
    pub steps: u64,
    /// `2n²M`.
    pub gates: u64,
}

/// `M = ⌈√(P n³ t₀³ / ε)⌉` and `2n²M` gates for a second-order circuit.
pub fn gate_count_plan(n: usize, t0: f64, eps_t: f64, prefactor: f64) -> Result<GatePlan> {
    if n == 0 || !(t0 > 0.0 && eps_t > 0.0 && prefactor > 0.0) {
        return Err(Error::invalid("gate planning needs positive arguments"));
    }
    let nf = n as f64;
    let steps = (prefactor * nf.powi(3) * t0.powi(3) / eps_t).sqrt().ceil() as u64;
    Ok(GatePlan {
        steps,
        gates: 2 * (n as u64) * (n as u64) * steps,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrefactorFit {
    pub prefactor: f64,
    /// `(M, mean error over draws)`.
    pub errors: Vec<(usize, f64)>,
    pub draws: usize,
}

/// Default number of coupling draws averaged per grid point.
pub const DEFAULT_PREFACTOR_DRAWS: usize = 8;

/// Fits `ε ≈ P n³ t₀³ / M²` to second-order errors averaged over `draws`
/// couplings (draw `d` uses stream `d` of `seed`).
pub fn estimate_prefactor(
    kind: ModelKind,
    n: usize,
    t0: f64,
    m_grid: &[usize],
    draws: usize,
    seed: u64,
    exec: Execution,
) -> Result<PrefactorFit> {
    if m_grid.is_empty() || draws == 0 {
        return Err(Error::invalid("prefactor fit needs a non-empty grid and at least one draw"));
    }
    let per_draw = exec.try_map(draws, |d| {
        let j = sample_coupling(n, &mut Rng::new(seed, d as u64));
        let spec = HamiltonianSpec::new(kind, j);
        m_grid
            .iter()
            .map(|&m| trotter_operator_error(&spec, t0, m, TrotterOrder::Second))
            .collect::<Result<Vec<f64>>>()
    })?;
    let scale = (n as f64).powi(3) * t0.powi(3);
    let mut num = 0.0;
    let mut den = 0.0;
    let mut errors = Vec::with_capacity(m_grid.len());
    for (k, &m) in m_grid.iter().enumerate() {
        let mean = per_draw.iter().map(|v| v[k]).sum::<f64>() / draws as f64;
        let x = scale / (m as f64).powi(2);
        num += mean * x;
        den += x * x;
        errors.push((m, mean));
    }
    Ok(PrefactorFit {
        prefactor: num / den,
        errors,
        draws,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let k = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::CouplingMatrix;

    fn pauli(p: Pauli) -> DMatrix<Complex64> {
        DMatrix::from_fn(2, 2, |r, c| {
            let (b, ph) = p.act(c as u64);
            if b as usize == r {
                ph
            } else {
                ZERO
            }
        })
    }

    /// `exp(−iθP)` on two qubits via the matrix exponential of `−iθP`.
    fn expm_oracle(tag: PauliPair, th: f64) -> DMatrix<Complex64> {
        let mut p = DMatrix::<Complex64>::zeros(4, 4);
        for &q in tag.components() {
            // qubit 0 is the low bit: kron(high, low) = kron(τ, σ).
            p += pauli(q).kronecker(&pauli(q));
        }
        (p * Complex64::new(0.0, -th)).exp()
    }

    #[test]
    fn closed_form_gates_match_expm() {
        for tag in [PauliPair::XX, PauliPair::YY, PauliPair::ZZ, PauliPair::XxYy, PauliPair::XxYyZz] {
            let th = 0.37;
            let g = Gate { sigma: 0, tau: 0, tag, angle: th };
            let oracle = expm_oracle(tag, th);
            for col in 0..4 {
                let mut v = vec![ZERO; 4];
                v[col] = ONE;
                apply_gate(&g, 1, &mut v);
                for row in 0..4 {
                    assert!((v[row] - oracle[(row, col)]).norm() < 1e-12, "{tag} ({row},{col})");
                }
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let j = CouplingMatrix::from_rows(&[vec![0.5, -1.0], vec![2.0, 0.25]]).unwrap();
        let spec = HamiltonianSpec::new(ModelKind::H4, j);
        let seq = build_trotter(&spec, 1.0, 2, TrotterOrder::Second).unwrap();
        let mut buf = Vec::new();
        seq.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("0 1 1 XX+YY+ZZ "));
        let back = GateSequence::parse_text(2, &text).unwrap();
        assert_eq!(back.gate_count(), seq.gate_count());
        for (a, b) in back.gates().iter().zip(seq.gates()) {
            assert_eq!((a.sigma, a.tau, a.tag), (b.sigma, b.tau, b.tag));
            assert!((a.angle - b.angle).abs() <= 1e-15 * b.angle.abs());
        }
    }

    #[test]
    fn gate_counts() {
        let spec = HamiltonianSpec::new(ModelKind::H3, sample_coupling(2, &mut Rng::new(1, 0)));
        for m in [1, 3, 7] {
            assert_eq!(build_trotter(&spec, 1.0, m, TrotterOrder::First).unwrap().gate_count(), 4 * m);
            assert_eq!(build_trotter(&spec, 1.0, m, TrotterOrder::Second).unwrap().gate_count(), 8 * m);
        }
    }

    #[test]
    fn fields_rejected() {
        let spec = HamiltonianSpec::new(ModelKind::H3, CouplingMatrix::zeros(1))
            .with_z_fields(vec![1.0], vec![1.0])
            .unwrap();
        assert!(build_trotter(&spec, 1.0, 1, TrotterOrder::First).is_err());
    }

    #[test]
    fn planner_reference_values() {
        let t0 = 5.0 * 100f64.ln();
        let g = gate_count_plan(100, t0, 0.1, 2.97e-4).unwrap();
        assert!((g.gates as f64 / 1.2e8 - 1.0).abs() < 0.1, "{g:?}");
        let expect = (2.97e-4 * 1e6 * t0.powi(3) / 0.1f64).sqrt().ceil() as u64;
        assert_eq!(g.steps, expect);
        assert_eq!(g.gates, 2 * 100 * 100 * expect);
    }
}
