use std::io::{Read, Write};
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Real polynomial in the monomial basis; `coeffs[k]` multiplies `t^k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        if coeffs.is_empty() {
            return Polynomial { coeffs: vec![0.0] };
        }
        Polynomial { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Polynomial { coeffs: vec![c] }
    }

    pub fn monomial(k: usize) -> Self {
        let mut coeffs = vec![0.0; k + 1];
        coeffs[k] = 1.0;
        Polynomial { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Index of the highest stored coefficient (trailing zeros count).
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficient of `t^k`; zero beyond the stored degree.
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    /// Drops trailing coefficients with `|c| ≤ tol`, keeping at least one.
    pub fn trimmed(&self, tol: f64) -> Polynomial {
        let mut c = self.coeffs.clone();
        while c.len() > 1 && c.last().is_some_and(|v| v.abs() <= tol) {
            c.pop();
        }
        Polynomial { coeffs: c }
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        Polynomial {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn abs_coeff_sum(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }

    /// Quotient and remainder by `divisor` (whose top stored coefficient must be nonzero).
    pub fn div_rem(&self, divisor: &Polynomial) -> Result<(Polynomial, Polynomial)> {
        let d = divisor.trimmed(0.0);
        let lead = *d.coeffs.last().unwrap();
        if lead == 0.0 {
            return Err(Error::invalid("division by the zero polynomial"));
        }
        let dd = d.degree();
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return Ok((Polynomial::constant(0.0), Polynomial::new(rem)));
        }
        let mut quot = vec![0.0; rem.len() - dd];
        for k in (0..quot.len()).rev() {
            let q = rem[k + dd] / lead;
            quot[k] = q;
            for (i, &c) in d.coeffs.iter().enumerate() {
                rem[k + i] -= q * c;
            }
        }
        rem.truncate(dd.max(1));
        Ok((Polynomial::new(quot), Polynomial::new(rem)))
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..len).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..len).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::new(convolve(&self.coeffs, &rhs.coeffs))
    }
}

pub(crate) fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub y: f64,
}

/// Evaluation data `{(t_i, y_i)}` with distinct nodes.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SampleSet {
    points: Vec<Sample>,
}

impl SampleSet {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        let points: Vec<Sample> = points.into_iter().map(|(t, y)| Sample { t, y }).collect();
        let mut ts: Vec<f64> = points.iter().map(|p| p.t).collect();
        ts.sort_by(f64::total_cmp);
        if let Some(w) = ts.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateNode(w[0]));
        }
        Ok(SampleSet { points })
    }

    /// Samples `f` at the given nodes.
    pub fn from_fn(nodes: &[f64], mut f: impl FnMut(f64) -> f64) -> Result<Self> {
        Self::new(nodes.iter().map(|&t| (t, f(t))).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Sample] {
        &self.points
    }

    pub fn nodes(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.y).collect()
    }

    /// Replaces the value at position `i`.
    pub fn set_value(&mut self, i: usize, y: f64) {
        self.points[i].y = y;
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for p in &self.points {
            wr.serialize(p)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut pts = Vec::new();
        for rec in rd.deserialize::<Sample>() {
            let s = rec?;
            pts.push((s.t, s.y));
        }
        Self::new(pts)
    }
}

/// `count` equidistant nodes spanning `[lo, hi]` inclusive.
pub fn equidistant_nodes(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horner_and_degree() {
        let p = Polynomial::new(vec![1.0, -2.0, 0.0, 3.0, 0.0]);
        assert_eq!(p.degree(), 4);
        assert_eq!(p.trimmed(0.0).degree(), 3);
        assert_eq!(p.eval(2.0), 1.0 - 4.0 + 24.0);
        assert_eq!(p.coeff(10), 0.0);
    }

    #[test]
    fn division_recovers_factor() {
        let a = Polynomial::new(vec![-1.0, 1.0]);
        let b = Polynomial::new(vec![2.0, 0.0, 1.0]);
        let (q, r) = (&a * &b).div_rem(&a).unwrap();
        assert!(r.coeffs().iter().all(|c| c.abs() < 1e-14));
        assert_eq!(q.trimmed(1e-14), b);
    }

    #[test]
    fn duplicate_nodes_rejected() {
        assert!(matches!(
            SampleSet::new(vec![(1.0, 2.0), (1.0, 3.0)]),
            Err(Error::DuplicateNode(_))
        ));
    }

    #[test]
    fn csv_round_trip() {
        let s = SampleSet::new(vec![(0.5, 1.25), (-1.0, 3.0e-9)]).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("t,y\n"));
        assert_eq!(SampleSet::read_csv(buf.as_slice()).unwrap(), s);
    }
}
