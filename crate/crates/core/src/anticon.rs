//! Monte-Carlo anticoncentration experiments over random couplings.
//!
//! Draw `i` of an experiment samples its couplings from stream `i` of the
//! seed and all per-draw results are reduced in draw order, so outputs do not
//! depend on the worker count.

use std::io::Write;

use serde::Serialize;

use crate::domain::{hamming_class_members, sample_coupling, BitString, HamiltonianSpec, ModelClass, ModelKind, Rng};
use crate::error::{Error, Result};
use crate::evolve::{evolve_times, Backend};
use crate::exec::Execution;
use crate::hardness::anticoncentration_thresholds;

pub const MIN_DRAWS: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentRecord {
    #[serde(serialize_with = "as_string")]
    pub x: BitString,
    pub kind: ModelKind,
    pub n: usize,
    pub t: f64,
    pub mean_p: f64,
    pub mean_p2: f64,
    pub stderr_p: f64,
    pub stderr_p2: f64,
    pub samples: usize,
}

fn as_string<S: serde::Serializer, T: std::fmt::Display>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AnticonThresholds {
    pub k: f64,
    pub lambda: f64,
    pub theta: f64,
}

impl AnticonThresholds {
    pub fn new(k: f64, lambda: f64, theta: f64) -> Result<Self> {
        if !(k > 0.0 && k <= 1.0 && lambda >= 1.0 && (0.0..=1.0).contains(&theta)) {
            return Err(Error::invalid("need 0 < K ≤ 1 ≤ Λ and θ ∈ [0,1]"));
        }
        Ok(AnticonThresholds { k, lambda, theta })
    }

    /// `K = 1/2, Λ = 4, θ = 1/2`.
    pub fn standard() -> Self {
        AnticonThresholds {
            k: 0.5,
            lambda: 4.0,
            theta: 0.5,
        }
    }

    /// The Ising variant: `Λ = 16`.
    pub fn ising() -> Self {
        AnticonThresholds {
            lambda: 16.0,
            ..Self::standard()
        }
    }

    pub fn for_class(class: ModelClass) -> Self {
        match class {
            ModelClass::I => Self::ising(),
            ModelClass::II => Self::standard(),
        }
    }

    /// `θK`: the fraction of the uniform value `p` exceeds with probability `β`.
    pub fn alpha(&self) -> f64 {
        self.theta * self.k
    }

    /// `(1−θ)² K² / Λ`.
    pub fn beta(&self) -> f64 {
        (1.0 - self.theta).powi(2) * self.k * self.k / self.lambda
    }
}

fn mean_stderr(values: impl ExactSizeIterator<Item = f64> + Clone) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.clone().sum::<f64>() / k;
    if k < 2.0 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

fn check_setup(n: usize, num_j: usize) -> Result<()> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::invalid(format!("X_(n/2) needs even n ≥ 2, got {n}")));
    }
    if num_j < MIN_DRAWS {
        return Err(Error::invalid(format!("need at least {MIN_DRAWS} draws, got {num_j}")));
    }
    Ok(())
}

/// `p(x;J;t)` for every `x` in `xs`, every `t` in `times` and every draw:
/// `out[draw][time][x]`.
fn probability_table(
    kind: ModelKind,
    n: usize,
    xs: &[BitString],
    times: &[f64],
    num_j: usize,
    rng: &Rng,
    exec: Execution,
) -> Result<Vec<Vec<Vec<f64>>>> {
    exec.try_map(num_j, |d| {
        let spec = HamiltonianSpec::new(kind, sample_coupling(n, &mut rng.substream(d as u64)));
        let mut rows = vec![Vec::new(); times.len()];
        evolve_times(&spec, times, Backend::Auto, |i, s| {
            rows[i] = xs.iter().map(|x| s.probability(x)).collect();
        })?;
        Ok(rows)
    })
}

/// Sample means of `p(x)` and `p(x)²` over `num_j` draws for every
/// `x ∈ X_{n/2}`, at each time in `times`. One evolution per draw serves all
/// outcomes and times.
pub fn estimate_moments_at(
    kind: ModelKind,
    n: usize,
    times: &[f64],
    num_j: usize,
    rng: &Rng,
    exec: Execution,
) -> Result<Vec<Vec<MomentRecord>>> {
    check_setup(n, num_j)?;
    let xs = hamming_class_members(n, n / 2);
    let table = probability_table(kind, n, &xs, times, num_j, rng, exec)?;
    Ok(times
        .iter()
        .enumerate()
        .map(|(ti, &t)| {
            xs.iter()
                .enumerate()
                .map(|(xi, x)| {
                    let ps = table.iter().map(|d| d[ti][xi]);
                    let (mean_p, stderr_p) = mean_stderr(ps.clone());
                    let (mean_p2, stderr_p2) = mean_stderr(ps.map(|p| p * p));
                    MomentRecord {
                        x: *x,
                        kind,
                        n,
                        t,
                        mean_p,
                        mean_p2,
                        stderr_p,
                        stderr_p2,
                        samples: num_j,
                    }
                })
                .collect()
        })
        .collect())
}

pub fn estimate_moments(
    kind: ModelKind,
    n: usize,
    t: f64,
    num_j: usize,
    rng: &Rng,
    exec: Execution,
) -> Result<Vec<MomentRecord>> {
    Ok(estimate_moments_at(kind, n, &[t], num_j, rng, exec)?.remove(0))
}

/// Fraction of records with `E[p] ≥ K·s` and `E[p²] ≤ Λ·s²`, where `s` is the
/// uniform probability of the class.
pub fn ratio_r(records: &[MomentRecord], thresholds: &AnticonThresholds, class: ModelClass) -> Result<f64> {
    let n = records.first().map_or(1, |r| r.n);
    if records.iter().any(|r| r.n != n) {
        return Err(Error::invalid("records mix different n"));
    }
    ratio_r_with_scale(records, thresholds, anticoncentration_thresholds(class, n))
}

/// [`ratio_r`] against an explicit scale `s`.
pub fn ratio_r_with_scale(records: &[MomentRecord], thresholds: &AnticonThresholds, scale: f64) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::invalid("ratio of an empty record set"));
    }
    let hits = records
        .iter()
        .filter(|r| r.mean_p / scale >= thresholds.k && r.mean_p2 / (scale * scale) <= thresholds.lambda)
        .count();
    Ok(hits as f64 / records.len() as f64)
}

/// `√(r(1−r)/N)`.
pub fn binomial_stderr(r: f64, count: usize) -> f64 {
    (r * (1.0 - r) / count as f64).sqrt()
}

/// `(1−θ)² E[p]² / E[p²]`.
pub fn paley_zygmund_bound(record: &MomentRecord, theta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::invalid(format!("θ = {theta} outside [0,1]")));
    }
    if record.mean_p2 <= 0.0 {
        return Err(Error::ZeroSecondMoment);
    }
    Ok((1.0 - theta).powi(2) * record.mean_p * record.mean_p / record.mean_p2)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub t: f64,
    pub mean_p: f64,
    pub stderr: f64,
}

/// Mean of `p(x;J;t)` over `x ∈ X_{n/2}` and the draws, with the standard
/// error over draws of the per-draw outcome average.
pub fn equilibration_curve(
    kind: ModelKind,
    n: usize,
    t_grid: &[f64],
    num_j: usize,
    rng: &Rng,
    exec: Execution,
) -> Result<Vec<CurvePoint>> {
    check_setup(n, num_j)?;
    equilibration_curve_for(kind, n, &hamming_class_members(n, n / 2), t_grid, num_j, rng, exec)
}

/// Like [`equilibration_curve`] over an arbitrary set of outcomes.
pub fn equilibration_curve_for(
    kind: ModelKind,
    n: usize,
    xs: &[BitString],
    t_grid: &[f64],
    num_j: usize,
    rng: &Rng,
    exec: Execution,
) -> Result<Vec<CurvePoint>> {
    if xs.is_empty() || num_j == 0 {
        return Err(Error::invalid("need outcomes and draws"));
    }
    let table = probability_table(kind, n, xs, t_grid, num_j, rng, exec)?;
    Ok(t_grid
        .iter()
        .enumerate()
        .map(|(ti, &t)| {
            let per_draw = table
                .iter()
                .map(|d| d[ti].iter().sum::<f64>() / xs.len() as f64);
            let (mean_p, stderr) = mean_stderr(per_draw);
            CurvePoint { t, mean_p, stderr }
        })
        .collect())
}

/// Splits the points with `t ≥ t_start` into `windows` consecutive windows
/// and returns the largest relative change between successive window means.
pub fn window_drift(curve: &[CurvePoint], t_start: f64, windows: usize) -> Result<f64> {
    let tail: Vec<f64> = curve.iter().filter(|p| p.t >= t_start).map(|p| p.mean_p).collect();
    if windows < 2 || tail.len() < windows {
        return Err(Error::invalid(format!(
            "{} points beyond t = {t_start} cannot fill {windows} windows",
            tail.len()
        )));
    }
    let means: Vec<f64> = (0..windows)
        .map(|w| {
            let lo = w * tail.len() / windows;
            let hi = (w + 1) * tail.len() / windows;
            tail[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    Ok(means
        .windows(2)
        .map(|p| ((p[1] - p[0]) / p[0]).abs())
        .fold(0.0, f64::max))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioRow {
    pub n: usize,
    pub t_over_logn: f64,
    pub r: f64,
    pub num_x: usize,
    #[serde(rename = "num_J")]
    pub num_j: usize,
    pub seed: u64,
}

#[derive(Serialize)]
struct EquilibrationRow {
    n: usize,
    t: f64,
    mean_p: f64,
    stderr: f64,
}

#[derive(Serialize)]
struct MomentRow {
    n: usize,
    t: f64,
    x_bits: String,
    mean_p_scaled: f64,
    mean_p2_scaled: f64,
    stderr_p: f64,
    stderr_p2: f64,
}

fn write_rows<W: Write, R: Serialize>(w: W, rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_equilibration_csv<W: Write>(w: W, n: usize, curve: &[CurvePoint]) -> Result<()> {
    write_rows(
        w,
        curve.iter().map(|p| EquilibrationRow {
            n,
            t: p.t,
            mean_p: p.mean_p,
            stderr: p.stderr,
        }),
    )
}

/// Moments in units of the class's uniform probability `s`: `E[p]/s`,
/// `E[p²]/s²`, with standard errors in the same units.
pub fn write_moments_csv<W: Write>(w: W, records: &[MomentRecord]) -> Result<()> {
    write_rows(
        w,
        records.iter().map(|r| {
            let s = anticoncentration_thresholds(r.kind.class(), r.n);
            MomentRow {
                n: r.n,
                t: r.t,
                x_bits: r.x.to_string(),
                mean_p_scaled: r.mean_p / s,
                mean_p2_scaled: r.mean_p2 / (s * s),
                stderr_p: r.stderr_p / s,
                stderr_p2: r.stderr_p2 / (s * s),
            }
        }),
    )
}

pub fn write_ratio_csv<W: Write>(w: W, rows: &[RatioRow]) -> Result<()> {
    write_rows(w, rows.iter())
}
