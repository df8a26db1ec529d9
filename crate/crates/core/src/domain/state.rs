use num_complex::Complex64;

use super::bits::{BitString, WeightSector};
use crate::error::{Error, Result};

/// Amplitude indexing: all `2^{2n}` strings, or the weight-`n` sector in
/// lexicographic order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    Full,
    Sector,
}

impl Basis {
    pub fn dimension(self, n: usize) -> usize {
        match self {
            Basis::Full => 1usize << (2 * n),
            Basis::Sector => WeightSector::half_filled(n).size(),
        }
    }

    /// Amplitude index of `x`, or `None` when `x` lies outside the basis.
    pub fn index_of(self, x: &BitString) -> Option<usize> {
        match self {
            Basis::Full => Some(x.bits() as usize),
            Basis::Sector => WeightSector::half_filled(x.n()).rank(x.bits()),
        }
    }

    /// Packed bits of the `index`-th basis string.
    pub fn bits_at(self, n: usize, index: usize) -> u64 {
        match self {
            Basis::Full => index as u64,
            Basis::Sector => WeightSector::half_filled(n).unrank(index),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    basis: Basis,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(n: usize, basis: Basis, amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = basis.dimension(n);
        if amplitudes.len() != dim {
            return Err(Error::BasisMismatch(format!(
                "{} amplitudes for a basis of dimension {dim}",
                amplitudes.len()
            )));
        }
        Ok(StateVector {
            n,
            basis,
            amplitudes,
        })
    }

    pub fn basis_state(x: &BitString, basis: Basis) -> Result<Self> {
        let n = x.n();
        let idx = basis.index_of(x).ok_or_else(|| {
            Error::BasisMismatch(format!("{x} is outside the {basis:?} basis"))
        })?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); basis.dimension(n)];
        amplitudes[idx] = Complex64::new(1.0, 0.0);
        Ok(StateVector {
            n,
            basis,
            amplitudes,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn dimension(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Amplitude of `x`; zero when `x` lies outside a sector basis.
    pub fn amplitude(&self, x: &BitString) -> Complex64 {
        match self.basis.index_of(x) {
            Some(i) if x.n() == self.n => self.amplitudes[i],
            _ => Complex64::new(0.0, 0.0),
        }
    }

    pub fn probability(&self, x: &BitString) -> f64 {
        self.amplitude(x).norm_sqr()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.basis != other.basis || self.n != other.n {
            return Err(Error::BasisMismatch("inner product across bases".into()));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Re-expresses a sector state in the full basis.
    pub fn to_full(&self) -> StateVector {
        match self.basis {
            Basis::Full => self.clone(),
            Basis::Sector => {
                let sector = WeightSector::half_filled(self.n);
                let mut amps = vec![Complex64::new(0.0, 0.0); Basis::Full.dimension(self.n)];
                for (i, a) in self.amplitudes.iter().enumerate() {
                    amps[sector.unrank(i) as usize] = *a;
                }
                StateVector {
                    n: self.n,
                    basis: Basis::Full,
                    amplitudes: amps,
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sector_and_full_agree_on_basis_states() {
        let n = 3;
        for x in super::super::bits::hamming_class_members(n, 1) {
            let s = StateVector::basis_state(&x, Basis::Sector).unwrap();
            let f = StateVector::basis_state(&x, Basis::Full).unwrap();
            assert_eq!(s.to_full(), f);
            assert_eq!(s.probability(&x), 1.0);
        }
    }

    #[test]
    fn outside_sector_rejected() {
        let x = BitString::from_bits(2, 0b0111).unwrap();
        assert!(StateVector::basis_state(&x, Basis::Sector).is_err());
    }
}
