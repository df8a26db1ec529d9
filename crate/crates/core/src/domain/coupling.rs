use nalgebra::DMatrix;

use super::bits::BitString;
use super::rng::Rng;
use crate::error::{Error, Result};

/// The `n × n` real coupling matrix `J` between σ site `i` and τ site `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingMatrix {
    entries: DMatrix<f64>,
}

impl CouplingMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::invalid(format!(
                "coupling matrix must be square and non-empty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("coupling matrix has non-finite entries"));
        }
        Ok(CouplingMatrix { entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("coupling rows must form a square matrix"));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn zeros(n: usize) -> Self {
        CouplingMatrix {
            entries: DMatrix::zeros(n, n),
        }
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn scaled(&self, c: f64) -> Self {
        CouplingMatrix {
            entries: &self.entries * c,
        }
    }

    pub fn abs_sum(&self) -> f64 {
        self.entries.iter().map(|v| v.abs()).sum()
    }

    /// `J_ST`: rows `S`, columns `T`, both 0-based and kept in the given order.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Result<DMatrix<f64>> {
        if rows.len() != cols.len() {
            return Err(Error::invalid(format!(
                "|S| = {} differs from |T| = {}",
                rows.len(),
                cols.len()
            )));
        }
        let n = self.n();
        if rows.iter().chain(cols).any(|&k| k >= n) {
            return Err(Error::invalid("submatrix index out of range"));
        }
        Ok(DMatrix::from_fn(rows.len(), cols.len(), |a, b| {
            self.entries[(rows[a], cols[b])]
        }))
    }
}

/// Draws `J ~ N(0,1)^{n×n}`, filling row by row.
pub fn sample_coupling(n: usize, rng: &mut Rng) -> CouplingMatrix {
    assert!(n >= 1, "n must be positive");
    let mut entries = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            entries[(i, j)] = rng.gaussian();
        }
    }
    CouplingMatrix { entries }
}

/// Row set `S = {i : x_i = 1}` and column set `T = {j : x_{n+j} = 0}`, 0-based.
pub fn outcome_index_sets(x: &BitString) -> (Vec<usize>, Vec<usize>) {
    let n = x.n();
    let s = (0..n).filter(|&i| x.bit(i)).collect();
    let t = (0..n).filter(|&j| !x.bit(n + j)).collect();
    (s, t)
}
