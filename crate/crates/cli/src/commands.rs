use std::io::Write;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use nalgebra::DMatrix;
use serde::Serialize;
use spinperm::anticon::{
    binomial_stderr, equilibration_curve, estimate_moments_at, ratio_r, window_drift, write_equilibration_csv,
    write_moments_csv, write_ratio_csv, AnticonThresholds, RatioRow,
};
use spinperm::hamiltonian::norm_tail_probability;
use spinperm::hardness::*;
use spinperm::polyfit::{berlekamp_welch_exact, lemma1_bound, rational_from_int};
use spinperm::trotter::{
    estimate_prefactor, gate_count_plan, l1_unitary_bound_check, log_log_slope, trotter_operator_error,
    TrotterOrder,
};
use spinperm::evolve::uniform_grid;
use spinperm::{sample_coupling, BitString, HamiltonianSpec, ModelKind, Rng};

use crate::{Failure, Run};

fn ln_n(n: usize) -> f64 {
    (n as f64).ln()
}

// ---------------------------------------------------------------- moments-check

#[derive(Args, Debug, Clone, Serialize)]
pub struct MomentsCheckArgs {
    /// Spins per half.
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value = "H4")]
    pub model: ModelKind,
    /// Coupling draws.
    #[arg(long, default_value_t = 20)]
    pub num_j: usize,
    /// Skip the variant with random local z fields.
    #[arg(long)]
    pub no_fields: bool,
    /// Absolute tolerance for the vanishing lower moments.
    #[arg(long, default_value_t = 1e-9)]
    pub zero_tol: f64,
    /// Relative tolerance for the leading moment.
    #[arg(long, default_value_t = 1e-8)]
    pub rel_tol: f64,
}

#[derive(Serialize)]
struct IdentityRow {
    draw: usize,
    fields: bool,
    x_bits: String,
    m: usize,
    max_lower: f64,
    moment: f64,
    expected: f64,
    rel_error: f64,
    pass: bool,
}

/// Draw `d` takes its couplings from stream `2d` and its fields from `2d + 1`.
pub fn moments_check(a: &MomentsCheckArgs, run: &mut Run) -> Result<(), Failure> {
    if a.num_j == 0 {
        return Err(Failure::Usage("--num-j must be positive".into()));
    }
    let variants: &[bool] = if a.no_fields { &[false] } else { &[false, true] };
    let seed = run.seed();
    let per_draw = run.exec().try_map(a.num_j, |d| -> Result<Vec<IdentityRow>, spinperm::Error> {
        let base = HamiltonianSpec::new(a.model, sample_coupling(a.n, &mut Rng::new(seed, 2 * d as u64)));
        let mut rows = Vec::new();
        for &fields in variants {
            let spec = if fields {
                let mut fr = Rng::new(seed, 2 * d as u64 + 1);
                let hs: Vec<f64> = (0..a.n).map(|_| fr.gaussian()).collect();
                let ht: Vec<f64> = (0..a.n).map(|_| fr.gaussian()).collect();
                base.clone().with_z_fields(hs, ht)?
            } else {
                base.clone()
            };
            for c in moment_identity_sweep(&spec)? {
                rows.push(IdentityRow {
                    draw: d,
                    fields,
                    pass: c.passes(a.zero_tol, a.rel_tol),
                    x_bits: c.x,
                    m: c.m,
                    max_lower: c.max_lower,
                    moment: c.moment,
                    expected: c.expected,
                    rel_error: c.rel_error,
                });
            }
        }
        Ok(rows)
    })?;
    let rows: Vec<IdentityRow> = per_draw.into_iter().flatten().collect();
    run.write_rows("moments_check.csv", &rows)?;
    let bad = rows.iter().filter(|r| !r.pass).count();
    let worst_rel = rows.iter().map(|r| r.rel_error).fold(0.0, f64::max);
    let worst_lower = rows.iter().map(|r| r.max_lower).fold(0.0, f64::max);
    println!(
        "{} n={} draws={}: {}/{} identities within tolerance (max |lower moment| {:.2e}, max rel error {:.2e})",
        a.model,
        a.n,
        a.num_j,
        rows.len() - bad,
        rows.len(),
        worst_lower,
        worst_rel
    );
    if bad > 0 {
        return Err(Failure::Check(format!("{bad} of {} identities outside tolerance", rows.len())));
    }
    Ok(())
}

// ---------------------------------------------------------------- equilibrate

#[derive(Args, Debug, Clone, Serialize)]
pub struct EquilibrateArgs {
    #[arg(long, default_value = "H3")]
    pub model: ModelKind,
    /// Spins per half (even).
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, default_value_t = 128)]
    pub num_j: usize,
    /// Curve end, in units of ln n.
    #[arg(long, default_value_t = 8.0)]
    pub t_max_mult: f64,
    /// Grid points on [0, t_max].
    #[arg(long, default_value_t = 161)]
    pub points: usize,
    /// Start of the drift measurement, in units of ln n.
    #[arg(long, default_value_t = 3.0)]
    pub t_start_mult: f64,
    /// Windows compared for the drift.
    #[arg(long, default_value_t = 4)]
    pub windows: usize,
}

pub fn equilibrate(a: &EquilibrateArgs, run: &mut Run) -> Result<(), Failure> {
    if a.points < 2 || a.n < 2 || a.t_max_mult <= 0.0 {
        return Err(Failure::Usage("need --points ≥ 2, --n ≥ 2 and a positive --t-max-mult".into()));
    }
    let grid = uniform_grid(a.t_max_mult * ln_n(a.n), a.points);
    let curve = equilibration_curve(a.model, a.n, &grid, a.num_j, &Rng::new(run.seed(), 0), run.exec())?;
    let w = run.create_file("equilibration.csv")?;
    write_equilibration_csv(w, a.n, &curve)?;
    let drift = window_drift(&curve, a.t_start_mult * ln_n(a.n), a.windows)?;
    let uniform = anticoncentration_thresholds(a.model.class(), a.n);
    let last = curve.last().map_or(f64::NAN, |p| p.mean_p);
    println!(
        "{} n={}: mean p at t_max = {:.6e} ({:.4} × uniform), window drift beyond t = {}·ln n: {:.2}%",
        a.model,
        a.n,
        last,
        last / uniform,
        a.t_start_mult,
        100.0 * drift
    );
    Ok(())
}

// ---------------------------------------------------------------- anticon

#[derive(Args, Debug, Clone, Serialize)]
pub struct AnticonArgs {
    #[arg(long, default_value = "H3")]
    pub model: ModelKind,
    /// Spins per half (even).
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    /// Times t = k·ln n, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "4")]
    pub t_mult: Vec<f64>,
    #[arg(long, default_value_t = 1024)]
    pub num_j: usize,
    /// Use K = 1/2, Λ = 16, θ = 1/2 regardless of the model class.
    #[arg(long)]
    pub ising_thresholds: bool,
}

pub fn anticon(a: &AnticonArgs, run: &mut Run) -> Result<(), Failure> {
    if a.n < 2 {
        return Err(Failure::Usage("--n must be at least 2".into()));
    }
    let class = a.model.class();
    let th = if a.ising_thresholds {
        AnticonThresholds::ising()
    } else {
        AnticonThresholds::for_class(class)
    };
    let times: Vec<f64> = a.t_mult.iter().map(|k| k * ln_n(a.n)).collect();
    let per_time = estimate_moments_at(a.model, a.n, &times, a.num_j, &Rng::new(run.seed(), 0), run.exec())?;
    let mut rows = Vec::with_capacity(times.len());
    for (k, records) in a.t_mult.iter().zip(&per_time) {
        let r = ratio_r(records, &th, class)?;
        println!(
            "{} n={} t = {k}·ln n: r = {r:.4} ± {:.4} over {} outcomes, {} draws (K={}, Λ={})",
            a.model,
            a.n,
            binomial_stderr(r, records.len()),
            records.len(),
            a.num_j,
            th.k,
            th.lambda
        );
        rows.push(RatioRow {
            n: a.n,
            t_over_logn: *k,
            r,
            num_x: records.len(),
            num_j: a.num_j,
            seed: run.seed(),
        });
    }
    let all: Vec<_> = per_time.into_iter().flatten().collect();
    write_moments_csv(run.create_file("moments.csv")?, &all)?;
    write_ratio_csv(run.create_file("ratio.csv")?, &rows)?;
    Ok(())
}

// ---------------------------------------------------------------- extract-permanent

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    Exact,
    Uniform,
    Adversarial,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ExtractArgs {
    #[arg(long, default_value = "H3")]
    pub model: ModelKind,
    /// Spins per half.
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// Outcome bitstring x₁…x₂ₙ; defaults to all ones on σ and zeros on τ.
    #[arg(long)]
    pub x: Option<String>,
    /// Window centre t₀.
    #[arg(long, default_value_t = 0.1)]
    pub t0: f64,
    /// Relative window half-width Δ.
    #[arg(long, default_value_t = 0.5)]
    pub delta_window: f64,
    /// Taylor degree K; defaults to 2m + 6.
    #[arg(long)]
    pub k_deg: Option<usize>,
    #[arg(long, value_enum, default_value_t = NoiseMode::Exact)]
    pub noise_mode: NoiseMode,
    /// Oracle noise amplitude δ.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 50)]
    pub draws: usize,
    /// Accept an estimate within max(bound, rel_tol · truth).
    #[arg(long, default_value_t = 1e-3)]
    pub rel_tol: f64,
}

#[derive(Serialize)]
struct ExtractionRow {
    draw: usize,
    x_bits: String,
    m: usize,
    k_deg: usize,
    per_squared_estimate: f64,
    truth: f64,
    abs_error: f64,
    bound: f64,
    epsilon_k: f64,
    norm_h: f64,
    within: bool,
}

/// Draw `d` takes its couplings from stream `2d` and its oracle noise from `2d + 1`.
pub fn extract_permanent(a: &ExtractArgs, run: &mut Run) -> Result<(), Failure> {
    let x: BitString = match &a.x {
        Some(s) => s.parse()?,
        None => BitString::all_sigma(a.n),
    };
    if x.n() != a.n {
        return Err(Failure::Usage(format!("--x has {} spins per half, --n is {}", x.n(), a.n)));
    }
    let m = x
        .hamming_class()
        .ok_or_else(|| Failure::Usage(format!("{x} is not in any Hamming class")))?;
    let k_deg = a.k_deg.unwrap_or(2 * m + 6);
    let seed = run.seed();
    let rows = run.exec().try_map(a.draws, |d| -> Result<ExtractionRow, spinperm::Error> {
        let spec = HamiltonianSpec::new(a.model, sample_coupling(a.n, &mut Rng::new(seed, 2 * d as u64)));
        let mode = match a.noise_mode {
            NoiseMode::Exact => OracleMode::Exact,
            NoiseMode::Uniform => OracleMode::Uniform {
                delta: a.noise,
                seed: Rng::new(seed, 2 * d as u64 + 1).next_u64(),
            },
            NoiseMode::Adversarial => OracleMode::Adversarial { delta: a.noise },
        };
        let r = extract_permanent_from_dynamics(&spec, &x, a.t0, a.delta_window, k_deg, mode)?;
        let tol = r.bound.max(a.rel_tol * r.truth.abs());
        Ok(ExtractionRow {
            draw: d,
            x_bits: x.to_string(),
            m,
            k_deg,
            per_squared_estimate: r.per_squared_estimate,
            truth: r.truth,
            abs_error: r.abs_error(),
            bound: r.bound,
            epsilon_k: r.epsilon_k,
            norm_h: r.norm_h,
            within: r.abs_error() <= tol,
        })
    })?;
    run.write_rows("extraction.csv", &rows)?;
    let ok = rows.iter().filter(|r| r.within).count();
    let worst = rows
        .iter()
        .map(|r| r.abs_error / r.truth.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    println!(
        "{} n={} x={x} K={k_deg}: {ok}/{} estimates within max(bound, {:e}·truth), worst relative error {:.2e}",
        a.model,
        a.n,
        rows.len(),
        a.rel_tol,
        worst
    );
    if ok < rows.len() {
        return Err(Failure::Check(format!("{} of {} extractions outside tolerance", rows.len() - ok, rows.len())));
    }
    Ok(())
}

// ---------------------------------------------------------------- worst-to-average

#[derive(Args, Debug, Clone, Serialize)]
pub struct WorstToAverageArgs {
    /// Matrix size.
    #[arg(long, default_value_t = 4)]
    pub m: usize,
    /// Interpolation half-width Δ; defaults to (16m)⁻².
    #[arg(long)]
    pub delta_window: Option<f64>,
    /// Uniform oracle noise amplitude δ.
    #[arg(long, default_value_t = 1e-12)]
    pub noise: f64,
    /// Oracle calls per node (median taken).
    #[arg(long, default_value_t = 5)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 5)]
    pub draws: usize,
    /// Probability of a one in the random 0/1 matrix.
    #[arg(long, default_value_t = 0.5)]
    pub density: f64,
}

#[derive(Serialize)]
struct WorstToAverageRow {
    draw: usize,
    m: usize,
    delta_window: f64,
    noise_delta: f64,
    per_estimate: f64,
    truth: f64,
    abs_error: f64,
    bound: f64,
    rounding_floor: f64,
    rounded: f64,
    rounded_exact: bool,
    tvd_at_edge: f64,
}

/// Draw `d` takes its 0/1 matrix from stream `2d`; the interpolation path and
/// oracle noise use stream `2d + 1`.
pub fn worst_to_average(a: &WorstToAverageArgs, run: &mut Run) -> Result<(), Failure> {
    if !(0.0..=1.0).contains(&a.density) {
        return Err(Failure::Usage("--density must lie in [0, 1]".into()));
    }
    let seed = run.seed();
    let rows = run.exec().try_map(a.draws, |d| -> Result<WorstToAverageRow, spinperm::Error> {
        let mut xr = Rng::new(seed, 2 * d as u64);
        let x = DMatrix::from_fn(a.m, a.m, |_, _| if xr.bernoulli(a.density) { 1.0 } else { 0.0 });
        let r = worst_to_average_demo(&x, a.delta_window, a.noise, a.repetitions, &Rng::new(seed, 2 * d as u64 + 1))?;
        Ok(WorstToAverageRow {
            draw: d,
            m: r.m,
            delta_window: r.delta_window,
            noise_delta: r.noise_delta,
            per_estimate: r.per_estimate,
            truth: r.truth,
            abs_error: (r.per_estimate - r.truth).abs(),
            bound: r.bound,
            rounding_floor: r.rounding_floor,
            rounded: r.rounded,
            rounded_exact: r.rounded == r.truth,
            tvd_at_edge: r.tvd_at_edge,
        })
    })?;
    run.write_rows("worst_to_average.csv", &rows)?;
    let inside = rows.iter().filter(|r| r.abs_error <= r.bound).count();
    let exact = rows.iter().filter(|r| r.rounded_exact).count();
    let max_bound = rows.iter().map(|r| r.bound).fold(0.0, f64::max);
    println!(
        "m={}: {inside}/{} estimates within bound (max bound {:.3e}), {exact}/{} exact after rounding",
        a.m,
        rows.len(),
        max_bound,
        rows.len()
    );
    if inside < rows.len() {
        return Err(Failure::Check(format!("{} of {} estimates exceed the bound", rows.len() - inside, rows.len())));
    }
    Ok(())
}

// ---------------------------------------------------------------- trotter-plan

#[derive(Args, Debug, Clone, Serialize)]
pub struct TrotterPlanArgs {
    /// Spins per half.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Evolution time t₀ = k·ln n.
    #[arg(long, default_value_t = 5.0)]
    pub t0_mult: f64,
    /// Absolute evolution time; overrides --t0-mult.
    #[arg(long)]
    pub t0: Option<f64>,
    /// Target errors, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1e-1,1e-2,1e-3")]
    pub eps: Vec<f64>,
    /// Error prefactor P in ε ≈ P n³ t₀³ / M².
    #[arg(long, default_value_t = 2.97e-4)]
    pub prefactor: f64,
}

#[derive(Serialize)]
struct PlanRow {
    n: usize,
    t0: f64,
    eps: f64,
    prefactor: f64,
    steps: u64,
    gates: u64,
}

pub fn trotter_plan(a: &TrotterPlanArgs, run: &mut Run) -> Result<(), Failure> {
    let t0 = a.t0.unwrap_or(a.t0_mult * ln_n(a.n));
    let mut rows = Vec::with_capacity(a.eps.len());
    for &eps in &a.eps {
        let plan = gate_count_plan(a.n, t0, eps, a.prefactor)?;
        println!(
            "n={} t0={t0:.4} eps={eps:e}: M = {}, gates = {:.1e} ({})",
            a.n, plan.steps, plan.gates as f64, plan.gates
        );
        rows.push(PlanRow {
            n: a.n,
            t0,
            eps,
            prefactor: a.prefactor,
            steps: plan.steps,
            gates: plan.gates,
        });
    }
    run.write_rows("plan.csv", &rows)
}

// ---------------------------------------------------------------- trotter-error

#[derive(Args, Debug, Clone, Serialize)]
pub struct TrotterErrorArgs {
    #[arg(long, default_value = "H3")]
    pub model: ModelKind,
    /// Spins per half.
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    /// Evolution time.
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    /// Evolution time as k·ln n; overrides --t.
    #[arg(long)]
    pub t_mult: Option<f64>,
    /// Product-formula orders (1 or 2), comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    pub orders: Vec<u8>,
    /// Trotter step counts M, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "8,16,32,64")]
    pub steps: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    pub draws: usize,
    /// Also compare output distributions against 4‖U − T^M‖.
    #[arg(long)]
    pub l1: bool,
    /// Fit P in ε ≈ P n³ t³ / M² to the second-order errors.
    #[arg(long)]
    pub fit_prefactor: bool,
}

#[derive(Serialize)]
struct TrotterRow {
    draw: usize,
    order: u8,
    steps: usize,
    error: f64,
    l1_distance: Option<f64>,
    four_norm_bound: Option<f64>,
}

#[derive(Serialize)]
struct PrefactorRow {
    steps: usize,
    mean_error: f64,
    prefactor: f64,
    draws: usize,
}

/// Draw `d` takes its couplings from stream `d`.
pub fn trotter_error(a: &TrotterErrorArgs, run: &mut Run) -> Result<(), Failure> {
    let t = a.t_mult.map_or(a.t, |k| k * ln_n(a.n));
    let orders = a
        .orders
        .iter()
        .map(|&o| TrotterOrder::try_from(o).map(|ord| (o, ord)))
        .collect::<Result<Vec<_>, _>>()?;
    if a.steps.is_empty() || a.draws == 0 {
        return Err(Failure::Usage("need at least one step count and one draw".into()));
    }
    let seed = run.seed();
    let per_draw = run.exec().try_map(a.draws, |d| -> Result<Vec<TrotterRow>, spinperm::Error> {
        let spec = HamiltonianSpec::new(a.model, sample_coupling(a.n, &mut Rng::new(seed, d as u64)));
        let mut rows = Vec::new();
        for &(o, ord) in &orders {
            for &m in &a.steps {
                let (error, l1, bound) = if a.l1 {
                    let c = l1_unitary_bound_check(&spec, t, m, ord)?;
                    (c.four_norm_bound / 4.0, Some(c.l1_distance), Some(c.four_norm_bound))
                } else {
                    (trotter_operator_error(&spec, t, m, ord)?, None, None)
                };
                rows.push(TrotterRow {
                    draw: d,
                    order: o,
                    steps: m,
                    error,
                    l1_distance: l1,
                    four_norm_bound: bound,
                });
            }
        }
        Ok(rows)
    })?;
    let rows: Vec<TrotterRow> = per_draw.into_iter().flatten().collect();
    run.write_rows("trotter_error.csv", &rows)?;
    for &(o, _) in &orders {
        let pts: Vec<(f64, f64)> = a
            .steps
            .iter()
            .map(|&m| {
                let errs: Vec<f64> = rows.iter().filter(|r| r.order == o && r.steps == m).map(|r| r.error).collect();
                (m as f64, errs.iter().sum::<f64>() / errs.len() as f64)
            })
            .collect();
        let slope = if pts.len() >= 2 && pts.iter().all(|p| p.1 > 0.0) {
            format!("{:.3}", log_log_slope(&pts))
        } else {
            "n/a".to_string()
        };
        let max_err = pts.iter().map(|p| p.1).fold(0.0, f64::max);
        println!("{} n={} t={t:.4} order {o}: log-log slope {slope}, max mean error {max_err:.3e}", a.model, a.n);
    }
    if a.l1 {
        let violations = rows
            .iter()
            .filter(|r| matches!((r.l1_distance, r.four_norm_bound), (Some(l), Some(b)) if l > b * (1.0 + 1e-12) + 1e-14))
            .count();
        println!("L1 distance ≤ 4‖U − T^M‖ in {}/{} cases", rows.len() - violations, rows.len());
        if violations > 0 {
            return Err(Failure::Check(format!("{violations} L1 bound violations")));
        }
    }
    if a.fit_prefactor {
        let fit = estimate_prefactor(a.model, a.n, t, &a.steps, a.draws, seed, run.exec())?;
        println!("fitted prefactor P = {:.3e} ({} draws)", fit.prefactor, fit.draws);
        let prows: Vec<PrefactorRow> = fit
            .errors
            .iter()
            .map(|&(steps, mean_error)| PrefactorRow {
                steps,
                mean_error,
                prefactor: fit.prefactor,
                draws: fit.draws,
            })
            .collect();
        run.write_rows("prefactor.csv", &prows)?;
    }
    Ok(())
}

// ---------------------------------------------------------------- bw-demo

#[derive(Args, Debug, Clone, Serialize)]
pub struct BwDemoArgs {
    /// Polynomial degree.
    #[arg(long, default_value_t = 10)]
    pub d: usize,
    /// Decoder corruption budget; L = d + 1 + 2e samples are drawn.
    #[arg(long, default_value_t = 4)]
    pub e: usize,
    /// Corruptions actually planted; defaults to e.
    #[arg(long)]
    pub corruptions: Option<usize>,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Integer coefficients are drawn from [−R, R].
    #[arg(long, default_value_t = 20)]
    pub coeff_range: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BwOutcome {
    Recovered,
    /// Decoding returned a polynomial other than the planted one.
    Wrong,
    /// Decoding reported that the corruption budget was exceeded.
    Signaled,
}

#[derive(Serialize)]
struct BwRow {
    trial: usize,
    d: usize,
    e: usize,
    corruptions: usize,
    outcome: BwOutcome,
}

/// One plant-and-recover trial with exact rational arithmetic at the integer
/// nodes `−⌊L/2⌋, …`. Trial randomness comes from `rng`.
pub fn bw_trial(d: usize, e: usize, corruptions: usize, coeff_range: u32, rng: &mut Rng) -> BwOutcome {
    let len = d + 1 + 2 * e;
    let span = 2 * coeff_range as usize + 1;
    let coeffs: Vec<i64> = (0..=d).map(|_| rng.below(span) as i64 - coeff_range as i64).collect();
    let nodes: Vec<i64> = (0..len as i64).map(|i| i - len as i64 / 2).collect();
    let mut pts: Vec<_> = nodes
        .iter()
        .map(|&t| {
            let tr = rational_from_int(t);
            let y = coeffs
                .iter()
                .rev()
                .fold(rational_from_int(0), |acc, &c| acc * &tr + rational_from_int(c));
            (tr, y)
        })
        .collect();
    for idx in rng.choose_distinct(len, corruptions) {
        let mag = 1 + rng.below(50) as i64;
        let off = if rng.bernoulli(0.5) { mag } else { -mag };
        pts[idx].1 += rational_from_int(off);
    }
    match berlekamp_welch_exact(&pts, d, e) {
        Ok(q) if q.iter().zip(&coeffs).all(|(a, &c)| *a == rational_from_int(c)) => BwOutcome::Recovered,
        Ok(_) => BwOutcome::Wrong,
        Err(_) => BwOutcome::Signaled,
    }
}

/// Trial `i` uses stream `i`.
pub fn bw_demo(a: &BwDemoArgs, run: &mut Run) -> Result<(), Failure> {
    let corruptions = a.corruptions.unwrap_or(a.e);
    let len = a.d + 1 + 2 * a.e;
    if corruptions > len {
        return Err(Failure::Usage(format!("cannot corrupt {corruptions} of {len} samples")));
    }
    let seed = run.seed();
    let outcomes = run
        .exec()
        .map(a.trials, |i| bw_trial(a.d, a.e, corruptions, a.coeff_range, &mut Rng::new(seed, i as u64)));
    let rows: Vec<BwRow> = outcomes
        .iter()
        .enumerate()
        .map(|(trial, &outcome)| BwRow {
            trial,
            d: a.d,
            e: a.e,
            corruptions,
            outcome,
        })
        .collect();
    run.write_rows("bw.csv", &rows)?;
    let count = |o: BwOutcome| outcomes.iter().filter(|&&x| x == o).count();
    println!(
        "d={} e={} corruptions={corruptions}: recovered {}, signaled {}, wrong {} of {}",
        a.d,
        a.e,
        count(BwOutcome::Recovered),
        count(BwOutcome::Signaled),
        count(BwOutcome::Wrong),
        a.trials
    );
    if corruptions <= a.e && count(BwOutcome::Recovered) < a.trials {
        return Err(Failure::Check("recovery failed within the corruption budget".into()));
    }
    Ok(())
}

// ---------------------------------------------------------------- bounds

#[derive(Args, Debug, Clone, Serialize)]
pub struct BoundsArgs {
    /// Spins per half.
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    /// Selects the model class.
    #[arg(long, default_value = "H3")]
    pub model: ModelKind,
    /// ‖H‖ used by the truncation bounds; defaults to 3n.
    #[arg(long)]
    pub norm_h: Option<f64>,
    /// Short evolution time t.
    #[arg(long, default_value_t = 0.1)]
    pub t: f64,
    /// Taylor degree K.
    #[arg(long, default_value_t = 10)]
    pub k_deg: usize,
    /// Exponent c in t = n^{−cn}.
    #[arg(long, default_value_t = 0.6)]
    pub c: f64,
    /// Window centre t₀.
    #[arg(long, default_value_t = 1.0)]
    pub t0: f64,
    /// β in the rescaled time t₀(1 + β/n²).
    #[arg(long, default_value_t = 1.0 / 64.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.1)]
    pub nu: f64,
    #[arg(long, default_value_t = 0.3)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.0)]
    pub g: f64,
    #[arg(long, default_value_t = 0.0)]
    pub p_x: f64,
    /// Oracle noise δ for the regression bounds.
    #[arg(long, default_value_t = 1e-6)]
    pub noise_delta: f64,
    /// Relative window half-width Δ.
    #[arg(long, default_value_t = 0.5)]
    pub delta_window: f64,
    /// Interpolant degree d and coefficient index k.
    #[arg(long, default_value_t = 6)]
    pub d: usize,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Matrix size for the worst-to-average bounds.
    #[arg(long, default_value_t = 4)]
    pub m: usize,
    /// Constant c in the coupling-norm tail 2^{n²} e^{−c²n²/2}.
    #[arg(long, default_value_t = 4.0)]
    pub tail_c: f64,
}

#[derive(Serialize)]
struct BoundRow {
    name: &'static str,
    value: f64,
}

pub fn bounds(a: &BoundsArgs, run: &mut Run) -> Result<(), Failure> {
    let n = a.n;
    let norm_h = a.norm_h.unwrap_or(3.0 * n as f64);
    let class = a.model.class();
    let window = default_interpolation_window(a.m);
    let rows = vec![
        BoundRow { name: "norm_h", value: norm_h },
        BoundRow { name: "truncation_error", value: truncation_error(norm_h, a.t, a.k_deg) },
        BoundRow { name: "short_time_xi_bound", value: short_time_xi_bound(norm_h, n, a.t) },
        BoundRow { name: "log_xi_ratio", value: log_xi_ratio(n, a.c) },
        BoundRow { name: "xi_squared_vanishes", value: f64::from(u8::from(xi_squared_vanishes(a.c))) },
        BoundRow {
            name: "gaussian_rescaling_tvd",
            value: gaussian_rescaling_tvd(a.t0 * (1.0 + a.beta / (n * n) as f64), a.t0, n),
        },
        BoundRow { name: "stockmeyer_error", value: stockmeyer_error(class, a.nu, a.gamma, a.g, n, a.p_x)? },
        BoundRow { name: "uniform_probability", value: anticoncentration_thresholds(class, n) },
        BoundRow { name: "lemma1_bound", value: lemma1_bound(a.noise_delta, a.t0, a.delta_window, a.d, a.k) },
        BoundRow { name: "interpolation_window", value: window },
        BoundRow { name: "worst_to_average_bound", value: worst_to_average_bound(a.noise_delta, window, a.m) },
        BoundRow { name: "interpolation_tvd", value: interpolation_tvd(a.m, window) },
        BoundRow { name: "advisory_min_m", value: advisory_min_m(n) },
        BoundRow { name: "coupling_norm_tail", value: norm_tail_probability(a.tail_c, n) },
    ];
    let mut out = std::io::stdout().lock();
    for r in &rows {
        writeln!(out, "{:<24} {:.6e}", r.name, r.value)?;
    }
    run.write_rows("bounds.csv", &rows)
}

// ---------------------------------------------------------------- replay

#[derive(Args, Debug, Clone, Serialize)]
pub struct ReplayArgs {
    /// Path to a manifest.json written by an earlier run.
    pub manifest: PathBuf,
}
