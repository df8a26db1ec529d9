//! Outcome bitstrings over the `2n` spins of the bipartite model.
//!
//! Bit `i` of the packed integer is spin `i + 1`: the σ group occupies the low
//! `n` bits and the τ group the high `n` bits. The packed integer is therefore
//! also the amplitude index in the full `2^{2n}` basis.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest supported half-size (the packed representation is a `u64`).
pub const MAX_HALF_SIZE: usize = 32;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct BitString {
    bits: u64,
    n: usize,
}

impl BitString {
    pub fn from_bits(n: usize, bits: u64) -> Result<Self> {
        if n == 0 || n > MAX_HALF_SIZE {
            return Err(Error::invalid(format!("half-size n = {n} out of range")));
        }
        if 2 * n < 64 && bits >> (2 * n) != 0 {
            return Err(Error::invalid(format!(
                "bits {bits:#x} exceed length 2n = {}",
                2 * n
            )));
        }
        Ok(BitString { bits, n })
    }

    /// Builds a bitstring from its σ and τ halves (bit `i` of each half is
    /// spin `i + 1` of that group).
    pub fn from_halves(n: usize, sigma: u64, tau: u64) -> Result<Self> {
        if n < 64 && (sigma >> n != 0 || tau >> n != 0) {
            return Err(Error::invalid("half exceeds n bits"));
        }
        Self::from_bits(n, sigma | (tau << n))
    }

    /// The initial state `y₀ = 0…0 1…1` (σ all zero, τ all one).
    pub fn initial(n: usize) -> Self {
        BitString {
            bits: low_mask(n) << n,
            n,
        }
    }

    /// The complement of `y₀`: σ all one, τ all zero (the unique member of `X_n`).
    pub fn all_sigma(n: usize) -> Self {
        BitString {
            bits: low_mask(n),
            n,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        2 * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// Bit of spin `i` (0-based over all `2n` spins).
    pub fn bit(&self, i: usize) -> bool {
        (self.bits >> i) & 1 == 1
    }

    pub fn sigma_half(&self) -> u64 {
        self.bits & low_mask(self.n)
    }

    pub fn tau_half(&self) -> u64 {
        (self.bits >> self.n) & low_mask(self.n)
    }

    pub fn weight(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn sigma_weight(&self) -> usize {
        self.sigma_half().count_ones() as usize
    }

    pub fn tau_weight(&self) -> usize {
        self.tau_half().count_ones() as usize
    }

    /// Returns `m` when `x ∈ X_m`, i.e. `wt(x^σ) = m` and `wt(x^τ) = n − m`.
    pub fn hamming_class(&self) -> Option<usize> {
        let m = self.sigma_weight();
        (self.tau_weight() == self.n - m).then_some(m)
    }

    /// The string with σ and τ halves exchanged.
    pub fn swap_halves(&self) -> Self {
        BitString {
            bits: self.tau_half() | (self.sigma_half() << self.n),
            n: self.n,
        }
    }

    pub fn complement(&self) -> Self {
        BitString {
            bits: !self.bits & low_mask(2 * self.n),
            n: self.n,
        }
    }

    /// Key whose integer order equals lexicographic order of the written
    /// string `x₁x₂…x₂ₙ`.
    pub fn lex_key(&self) -> u64 {
        reverse_low(self.bits, 2 * self.n)
    }
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Lexicographic order of the written string (shorter strings first).
impl Ord for BitString {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.n
            .cmp(&other.n)
            .then_with(|| self.lex_key().cmp(&other.lex_key()))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..2 * self.n {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    /// Parses `x₁x₂…x₂ₙ`, first character is spin 1.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || !s.len().is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "bitstring `{s}` must have even, non-zero length"
            )));
        }
        let mut bits = 0u64;
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => bits |= 1 << i,
                _ => return Err(Error::invalid(format!("bad character `{c}` in bitstring"))),
            }
        }
        BitString::from_bits(s.len() / 2, bits)
    }
}

pub(crate) fn low_mask(k: usize) -> u64 {
    if k >= 64 {
        u64::MAX
    } else {
        (1u64 << k) - 1
    }
}

fn reverse_low(bits: u64, len: usize) -> u64 {
    if len == 0 {
        0
    } else {
        bits.reverse_bits() >> (64 - len)
    }
}

static BINOM: [[u64; 65]; 65] = pascal();

const fn pascal() -> [[u64; 65]; 65] {
    let mut t = [[0u64; 65]; 65];
    let mut n = 0;
    while n < 65 {
        t[n][0] = 1;
        let mut k = 1;
        while k <= n {
            t[n][k] = t[n - 1][k - 1].wrapping_add(if k < n { t[n - 1][k] } else { 0 });
            k += 1;
        }
        n += 1;
    }
    t
}

/// Binomial coefficient `C(n, k)` for `n ≤ 64` (table lookup), zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    assert!(n <= 64, "binomial table covers n <= 64");
    BINOM[n][k]
}

/// `ln C(n, k)` for arbitrary `n`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// `ln n!`, exact summation below 256 and Stirling's series above.
pub fn ln_factorial(n: u64) -> f64 {
    if n < 256 {
        (2..=n).map(|i| (i as f64).ln()).sum()
    } else {
        let x = n as f64;
        x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln() + 1.0 / (12.0 * x)
            - 1.0 / (360.0 * x.powi(3))
    }
}

/// All strings of a fixed total weight over `2n` spins, indexed in
/// lexicographic order of the written string.
///
/// Ranking uses the combinatorial number system, so no lookup table is kept.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WeightSector {
    n: usize,
    weight: usize,
    size: usize,
}

impl WeightSector {
    pub fn new(n: usize, weight: usize) -> Self {
        assert!(weight <= 2 * n && n <= MAX_HALF_SIZE);
        let size = binomial(2 * n, weight) as usize;
        WeightSector { n, weight, size }
    }

    /// The sector `X = ∪ X_m` of total weight `n`.
    pub fn half_filled(n: usize) -> Self {
        Self::new(n, n)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weight(&self) -> usize {
        self.weight
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Index of `bits` in this sector, or `None` when the weight differs.
    pub fn rank(&self, bits: u64) -> Option<usize> {
        if bits.count_ones() as usize != self.weight {
            return None;
        }
        let len = 2 * self.n;
        let mut remaining = self.weight;
        let mut rank = 0u64;
        for p in 0..len {
            if remaining == 0 {
                break;
            }
            if (bits >> p) & 1 == 1 {
                // Strings sharing the prefix but holding 0 here come first.
                rank += binomial(len - p - 1, remaining);
                remaining -= 1;
            }
        }
        Some(rank as usize)
    }

    pub fn unrank(&self, mut index: usize) -> u64 {
        debug_assert!(index < self.size);
        let len = 2 * self.n;
        let mut remaining = self.weight;
        let mut bits = 0u64;
        for p in 0..len {
            if remaining == 0 {
                break;
            }
            let zeros_first = binomial(len - p - 1, remaining) as usize;
            if index >= zeros_first {
                bits |= 1 << p;
                index -= zeros_first;
                remaining -= 1;
            }
        }
        bits
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.size).map(move |i| self.unrank(i))
    }
}

/// Members of `X_m` in lexicographic order.
pub fn hamming_class_members(n: usize, m: usize) -> Vec<BitString> {
    if m > n {
        return Vec::new();
    }
    WeightSector::half_filled(n)
        .iter()
        .map(|b| BitString { bits: b, n })
        .filter(|x| x.sigma_weight() == m)
        .collect()
}
