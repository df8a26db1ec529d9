use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use spinperm::exec::Execution;
use spinperm::trotter::*;
use spinperm::Rng;
use spinperm::*;

fn spec(kind: ModelKind, n: usize, seed: u64) -> HamiltonianSpec {
    HamiltonianSpec::new(kind, sample_coupling(n, &mut Rng::new(seed, 0)))
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn pauli(which: char) -> DMatrix<Complex64> {
    match which {
        'X' => DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
        'Y' => DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]),
        _ => DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]),
    }
}

/// `P ⊗ P` on sites `a` and `b` of `sites` qubits, site `p` on bit `p`.
fn pair_operator(p: char, a: usize, b: usize, sites: usize) -> DMatrix<Complex64> {
    let mut m = DMatrix::<Complex64>::identity(1, 1);
    for s in (0..sites).rev() {
        let op = if s == a || s == b { pauli(p) } else { DMatrix::identity(2, 2) };
        m = m.kronecker(&op);
    }
    m
}

/// The full `(i, j)` coupling term of `H`.
fn pair_term(s: &HamiltonianSpec, i: usize, j: usize) -> DMatrix<Complex64> {
    let n = s.n();
    let g = s.couplings().get(i, j);
    let nf = n as f64;
    let (ops, scale): (&[char], f64) = match s.kind() {
        ModelKind::H1 => (&['X'], g / nf),
        ModelKind::H2 => (&['X', 'Z'], g / nf),
        ModelKind::H3 => (&['X', 'Y'], g / (2.0 * nf)),
        ModelKind::H4 => (&['X', 'Y', 'Z'], g / (2.0 * nf)),
    };
    ops.iter()
        .map(|&p| pair_operator(p, i, n + j, 2 * n))
        .fold(DMatrix::zeros(1 << (2 * n), 1 << (2 * n)), |acc, m| acc + m)
        * c(scale, 0.0)
}

fn expm_i(h: &DMatrix<Complex64>, dt: f64) -> DMatrix<Complex64> {
    (h * c(0.0, -dt)).exp()
}

/// Row-major product formula assembled from matrix exponentials.
fn oracle_circuit(s: &HamiltonianSpec, t: f64, steps: usize, order: TrotterOrder) -> DMatrix<Complex64> {
    let n = s.n();
    let dim = 1 << (2 * n);
    let dt = t / steps as f64;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let mut step = DMatrix::<Complex64>::identity(dim, dim);
    match order {
        TrotterOrder::First => {
            for &(i, j) in &pairs {
                step = expm_i(&pair_term(s, i, j), dt) * step;
            }
        }
        TrotterOrder::Second => {
            for &(i, j) in pairs.iter().chain(pairs.iter().rev()) {
                step = expm_i(&pair_term(s, i, j), dt / 2.0) * step;
            }
        }
    }
    let mut u = DMatrix::<Complex64>::identity(dim, dim);
    for _ in 0..steps {
        u = &step * u;
    }
    u
}

fn circuit_matrix(seq: &GateSequence) -> DMatrix<Complex64> {
    let dim = 1 << (2 * seq.n());
    let mut m = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let mut v = vec![Complex64::default(); dim];
        v[col] = c(1.0, 0.0);
        seq.apply_full(&mut v);
        for (row, a) in v.into_iter().enumerate() {
            m[(row, col)] = a;
        }
    }
    m
}

fn max_entry(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn circuits_match_matrix_exponential_oracle() {
    for kind in ModelKind::ALL {
        for order in [TrotterOrder::First, TrotterOrder::Second] {
            for n in 1..=2 {
                let s = spec(kind, n, 40 + n as u64);
                let seq = build_trotter(&s, 1.3, 3, order).unwrap();
                let diff = max_entry(&(circuit_matrix(&seq) - oracle_circuit(&s, 1.3, 3, order)));
                assert!(diff < 1e-12, "{kind} {order:?} n={n}: {diff}");
            }
        }
    }
}

#[test]
fn operator_error_matches_full_space_oracle() {
    for kind in ModelKind::ALL {
        let s = spec(kind, 2, 9);
        let h = dense_full(&s);
        let exact = expm_i(&h, 2.0);
        for order in [TrotterOrder::First, TrotterOrder::Second] {
            for steps in [2, 5] {
                let diff = exact.clone() - oracle_circuit(&s, 2.0, steps, order);
                let oracle = diff.singular_values().max();
                let ours = trotter_operator_error(&s, 2.0, steps, order).unwrap();
                assert!((ours - oracle).abs() <= 1e-10 * (1.0 + oracle), "{kind} {order:?} M={steps}: {ours} vs {oracle}");
            }
        }
    }
}

fn dense_full(s: &HamiltonianSpec) -> DMatrix<Complex64> {
    spinperm::hamiltonian::dense_matrix(s, Basis::Full).unwrap().map(|v| c(v, 0.0))
}

#[test]
fn ising_product_formula_is_exact() {
    for n in 1..=4 {
        let s = spec(ModelKind::H1, n, 2);
        for steps in [1, 3, 8, 17, 64] {
            for order in [TrotterOrder::First, TrotterOrder::Second] {
                let e = trotter_operator_error(&s, 3.0, steps, order).unwrap();
                assert!(e < 1e-10, "n={n} M={steps}: {e}");
            }
        }
    }
}

#[test]
fn error_scaling_slopes() {
    let grid = [8usize, 16, 32, 64];
    for kind in [ModelKind::H3, ModelKind::H4] {
        let s = spec(kind, 3, 5);
        for (order, target) in [(TrotterOrder::First, -1.0), (TrotterOrder::Second, -2.0)] {
            let pts: Vec<(f64, f64)> = grid
                .iter()
                .map(|&m| (m as f64, trotter_operator_error(&s, 1.0, m, order).unwrap()))
                .collect();
            let slope = log_log_slope(&pts);
            assert!((slope - target).abs() <= 0.15, "{kind} {order:?}: {slope}");
        }
    }
}

#[test]
fn l1_distance_bounded_by_operator_error() {
    for kind in [ModelKind::H2, ModelKind::H3, ModelKind::H4] {
        for seed in 0..2 {
            let s = spec(kind, 3, seed);
            for steps in [1, 2, 4, 8] {
                let check = l1_unitary_bound_check(&s, 2.0, steps, TrotterOrder::Second).unwrap();
                assert!(check.holds(), "{kind} seed={seed} M={steps}: {check:?}");
            }
        }
    }
}

#[test]
fn restricted_commutator_sum_equals_naive_sum() {
    for kind in ModelKind::ALL {
        for n in 1..=3 {
            let s = spec(kind, n, 13);
            for p in [1, 2] {
                if p == 2 && n == 3 {
                    continue;
                }
                let fast = upsilon_with(&s, p, true).unwrap();
                let naive = upsilon_with(&s, p, false).unwrap();
                assert!((fast - naive).abs() <= 1e-10 * (1.0 + naive), "{kind} n={n} p={p}");
            }
        }
    }
    let s = spec(ModelKind::H3, 4, 13);
    let fast = upsilon(&s, 1).unwrap();
    let naive = upsilon_with(&s, 1, false).unwrap();
    assert!((fast - naive).abs() <= 1e-10 * (1.0 + naive));
}

#[test]
fn prefactor_fit_is_execution_independent() {
    let a = estimate_prefactor(ModelKind::H3, 2, 1.0, &[4, 8], 3, 5, Execution::Sequential).unwrap();
    let b = estimate_prefactor(ModelKind::H3, 2, 1.0, &[4, 8], 3, 5, Execution::Parallel).unwrap();
    assert_eq!(a, b);
    assert!(a.prefactor > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gates_preserve_norm(kind_idx in 0usize..4, seed in any::<u64>(), t in 0.0f64..10.0, steps in 1usize..6) {
        let s = spec(ModelKind::ALL[kind_idx], 2, seed);
        let seq = build_trotter(&s, t, steps, TrotterOrder::Second).unwrap();
        let mut rng = Rng::new(seed, 1);
        let mut v: Vec<Complex64> = (0..16).map(|_| c(rng.gaussian(), rng.gaussian())).collect();
        let before: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        seq.apply_full(&mut v);
        let after: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((after - before).abs() <= 1e-10 * before);
    }

    #[test]
    fn planner_is_closed_form(n in 1usize..200, t0 in 0.01f64..50.0, eps in 1e-6f64..1.0, p in 1e-6f64..1.0) {
        let plan = gate_count_plan(n, t0, eps, p).unwrap();
        let m = (p * (n as f64).powi(3) * t0.powi(3) / eps).sqrt().ceil() as u64;
        prop_assert_eq!(plan.steps, m);
        prop_assert_eq!(plan.gates, 2 * (n * n) as u64 * m);
    }

    #[test]
    fn gate_text_round_trip(kind_idx in 0usize..4, n in 1usize..4, seed in any::<u64>(), steps in 1usize..4) {
        let s = spec(ModelKind::ALL[kind_idx], n, seed);
        let seq = build_trotter(&s, 0.7, steps, TrotterOrder::First).unwrap();
        let mut buf = Vec::new();
        seq.write_text(&mut buf).unwrap();
        let back = GateSequence::parse_text(n, std::str::from_utf8(&buf).unwrap()).unwrap();
        prop_assert_eq!(back.gate_count(), seq.gate_count());
        for (a, b) in back.gates().iter().zip(seq.gates()) {
            prop_assert_eq!((a.sigma, a.tau, a.tag), (b.sigma, b.tau, b.tag));
            prop_assert!((a.angle - b.angle).abs() <= 1e-15 * (1.0 + b.angle.abs()));
        }
    }
}
