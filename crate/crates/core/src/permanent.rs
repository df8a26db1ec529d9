//! Matrix permanents and Gaussian-permanent statistics.

use nalgebra::DMatrix;

use crate::domain::{outcome_index_sets, sample_coupling, BitString, CouplingMatrix, Rng};
use crate::error::{Error, Result};
use crate::exec::Execution;

pub const MAX_RYSER_SIZE: usize = 30;
pub const MAX_BRUTEFORCE_SIZE: usize = 9;
/// From this size on, the Gray-code sum is accumulated with Neumaier compensation.
pub const COMPENSATED_FROM: usize = 16;

fn check_square(a: &DMatrix<f64>) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::invalid(format!(
            "permanent needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(a.nrows())
}

/// Ryser's formula with Gray-code row-sum updates, `O(2^m m)`.
///
/// `Per(A) = (−1)^m Σ_{S ⊆ [m]} (−1)^{|S|} Π_i Σ_{j∈S} a_ij`
pub fn permanent_ryser(a: &DMatrix<f64>) -> Result<f64> {
    let m = check_square(a)?;
    if m > MAX_RYSER_SIZE {
        return Err(Error::SizeGuard {
            guard: "ryser_size",
            value: m,
            limit: MAX_RYSER_SIZE,
        });
    }
    if m == 0 {
        return Ok(1.0);
    }
    let mut row_sums = vec![0.0; m];
    let mut in_set = vec![false; m];
    let mut size = 0usize;
    let mut sum = Neumaier::default();
    let compensated = m >= COMPENSATED_FROM;
    let mut plain = 0.0;
    for k in 1u64..(1u64 << m) {
        let col = k.trailing_zeros() as usize;
        let sign_in = if in_set[col] { -1.0 } else { 1.0 };
        in_set[col] = !in_set[col];
        if sign_in > 0.0 {
            size += 1;
        } else {
            size -= 1;
        }
        for (i, r) in row_sums.iter_mut().enumerate() {
            *r += sign_in * a[(i, col)];
        }
        let prod: f64 = row_sums.iter().product();
        let term = if size.is_multiple_of(2) { prod } else { -prod };
        if compensated {
            sum.add(term);
        } else {
            plain += term;
        }
    }
    let total = if compensated { sum.value() } else { plain };
    Ok(if m % 2 == 0 { total } else { -total })
}

#[derive(Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Direct sum over all `m!` permutations (Heap's algorithm).
pub fn permanent_bruteforce(a: &DMatrix<f64>) -> Result<f64> {
    let m = check_square(a)?;
    if m > MAX_BRUTEFORCE_SIZE {
        return Err(Error::SizeGuard {
            guard: "bruteforce_size",
            value: m,
            limit: MAX_BRUTEFORCE_SIZE,
        });
    }
    if m == 0 {
        return Ok(1.0);
    }
    let mut perm: Vec<usize> = (0..m).collect();
    let term = |p: &[usize]| p.iter().enumerate().map(|(i, &j)| a[(i, j)]).product::<f64>();
    let mut total = term(&perm);
    let mut c = vec![0usize; m];
    let mut i = 1;
    while i < m {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            total += term(&perm);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(total)
}

/// `J_ST` for an outcome `x ∈ X_m`: rows `S = {i : x_i = 1}`, columns
/// `T = {j : x_{n+j} = 0}`, both ascending. For `m = 0` the result is `0 × 0`.
pub fn submatrix_for_outcome(j: &CouplingMatrix, x: &BitString) -> Result<DMatrix<f64>> {
    if x.n() != j.n() {
        return Err(Error::invalid(format!(
            "bitstring half-size {} differs from n = {}",
            x.n(),
            j.n()
        )));
    }
    if x.hamming_class().is_none() {
        return Err(Error::NotInHammingClass(x.to_string()));
    }
    let (s, t) = outcome_index_sets(x);
    j.submatrix(&s, &t)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VarianceEstimate {
    /// Sample mean of `Per(J)² / m!`.
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
}

/// Monte-Carlo estimate of `E[Per(J)²] / m!` for `J ~ N(0,1)^{m×m}`, which
/// should approach 1. Trial `i` draws from stream `i` of the seed.
pub fn gaussian_permanent_variance_check(
    m: usize,
    trials: usize,
    rng: &Rng,
    exec: Execution,
) -> Result<VarianceEstimate> {
    if m == 0 || m > 8 {
        return Err(Error::invalid(format!("m = {m} outside 1..=8")));
    }
    if trials < 1000 {
        return Err(Error::invalid(format!("need at least 1000 trials, got {trials}")));
    }
    let fact: f64 = (1..=m).map(|k| k as f64).product();
    let vals = exec.try_map(trials, |i| {
        let j = sample_coupling(m, &mut rng.substream(i as u64));
        permanent_ryser(j.matrix()).map(|p| p * p / fact)
    })?;
    let nf = trials as f64;
    let mean = vals.iter().sum::<f64>() / nf;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    Ok(VarianceEstimate {
        mean,
        std_error: (var / nf).sqrt(),
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_matrix(m: usize, rng: &mut Rng) -> DMatrix<f64> {
        DMatrix::from_fn(m, m, |_, _| rng.gaussian())
    }

    #[test]
    fn small_closed_forms() {
        assert_eq!(permanent_ryser(&DMatrix::identity(3, 3)).unwrap(), 1.0);
        for m in 1..=7 {
            let ones = DMatrix::from_element(m, m, 1.0);
            let fact: f64 = (1..=m).map(|k| k as f64).product();
            assert_eq!(permanent_ryser(&ones).unwrap(), fact);
            assert_eq!(permanent_bruteforce(&ones).unwrap(), fact);
        }
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 3.0, 5.0, 7.0]);
        assert_eq!(permanent_bruteforce(&a).unwrap(), 2.0 * 7.0 + 3.0 * 5.0);
        assert_eq!(permanent_ryser(&a).unwrap(), 29.0);
        let one = DMatrix::from_element(1, 1, -1.5);
        assert_eq!(permanent_bruteforce(&one).unwrap(), -1.5);
    }

    #[test]
    fn ryser_matches_bruteforce() {
        let mut rng = Rng::new(11, 0);
        for m in 2..=8 {
            for _ in 0..100 {
                let a = random_matrix(m, &mut rng);
                let r = permanent_ryser(&a).unwrap();
                let b = permanent_bruteforce(&a).unwrap();
                assert!((r - b).abs() <= 1e-10 * b.abs(), "m={m}: {r} vs {b}");
            }
        }
    }

    #[test]
    fn compensated_path_matches_block_product() {
        // Per of a block-diagonal matrix is the product of the block permanents.
        let mut rng = Rng::new(21, 0);
        let a = random_matrix(8, &mut rng);
        let b = random_matrix(8, &mut rng);
        let mut m = DMatrix::zeros(16, 16);
        m.view_mut((0, 0), (8, 8)).copy_from(&a);
        m.view_mut((8, 8), (8, 8)).copy_from(&b);
        let expect = permanent_bruteforce(&a).unwrap() * permanent_bruteforce(&b).unwrap();
        let p = permanent_ryser(&m).unwrap();
        assert!((p - expect).abs() <= 1e-8 * expect.abs(), "{p} vs {expect}");
    }

    #[test]
    fn guards() {
        let big = DMatrix::zeros(10, 10);
        assert_eq!(
            permanent_bruteforce(&big).unwrap_err().guard_name(),
            Some("bruteforce_size")
        );
        assert!(permanent_ryser(&DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn outcome_submatrix() {
        let mut rng = Rng::new(3, 0);
        let j = sample_coupling(3, &mut rng);
        assert_eq!(submatrix_for_outcome(&j, &BitString::all_sigma(3)).unwrap(), *j.matrix());
        let bad = BitString::from_bits(3, 0b111111).unwrap();
        assert!(matches!(
            submatrix_for_outcome(&j, &bad),
            Err(Error::NotInHammingClass(_))
        ));
    }

    #[test]
    fn single_entry_variance() {
        let est = gaussian_permanent_variance_check(1, 20_000, &Rng::new(8, 0), Execution::Sequential)
            .unwrap();
        assert!((est.mean - 1.0).abs() < 5.0 * est.std_error);
    }
}
