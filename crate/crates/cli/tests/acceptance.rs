//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! The report always completes. Set `SPINPERM_ACCEPTANCE_STRICT=1` to make a
//! FAIL line turn into a non-zero exit status.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use spinperm::anticon::{binomial_stderr, equilibration_curve, estimate_moments_at, ratio_r, window_drift, AnticonThresholds};
use spinperm::evolve::{evolve_times, trapezoid_mean, uniform_grid, Backend, DensePropagator};
use spinperm::hardness::{coefficient_weight_signs, extract_permanent_from_dynamics, moment_identity_sweep, OracleMode};
use spinperm::permanent::gaussian_permanent_variance_check;
use spinperm::polyfit::{extract_coefficient, window_nodes};
use spinperm::trotter::{
    estimate_prefactor, gate_count_plan, l1_unitary_bound_check, log_log_slope, trotter_operator_error, TrotterOrder,
};
use spinperm::{
    sample_coupling, BitString, Execution, HamiltonianSpec, ModelKind, Polynomial, Rng,
    SampleSet,
};
use spinperm_cli::{bw_trial, BwOutcome, Manifest, MANIFEST_FILE};

const SEED: u64 = 1;

type Criterion = (&'static str, fn() -> Result<Verdict, String>);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Result<Verdict, String> {
    Ok(Verdict { pass, detail })
}

fn spec(kind: ModelKind, n: usize, stream: u64) -> HamiltonianSpec {
    HamiltonianSpec::new(kind, sample_coupling(n, &mut Rng::new(SEED, stream)))
}

fn ln(n: usize) -> f64 {
    (n as f64).ln()
}

fn moment_identity() -> Result<Verdict, String> {
    let (mut total, mut bad) = (0, 0);
    let (mut worst_rel, mut worst_lower): (f64, f64) = (0.0, 0.0);
    for kind in ModelKind::ALL {
        for n in 2..=4 {
            for d in 0..20u64 {
                let base = spec(kind, n, 2 * d);
                let mut fr = Rng::new(SEED, 2 * d + 1);
                let hs: Vec<f64> = (0..n).map(|_| fr.gaussian()).collect();
                let ht: Vec<f64> = (0..n).map(|_| fr.gaussian()).collect();
                let fields = base.clone().with_z_fields(hs, ht).map_err(|e| e.to_string())?;
                for s in [base, fields] {
                    for c in moment_identity_sweep(&s).map_err(|e| e.to_string())? {
                        total += 1;
                        bad += usize::from(!c.passes(1e-9, 1e-8));
                        worst_rel = worst_rel.max(c.rel_error);
                        worst_lower = worst_lower.max(c.max_lower);
                    }
                }
            }
        }
    }
    verdict(
        bad == 0,
        format!("{}/{total} identities (with and without z fields), max |lower| {worst_lower:.1e}, max rel {worst_rel:.1e}", total - bad),
    )
}

fn ising_time_average() -> Result<Verdict, String> {
    let t_max = 500.0;
    let mut pass = true;
    let mut parts = Vec::new();
    for n in 2..=3 {
        let s = spec(ModelKind::H1, n, 0);
        let xs: Vec<BitString> = (0u64..1 << (2 * n)).map(|b| BitString::from_bits(n, b).unwrap()).collect();
        let grid = uniform_grid(t_max, 50_001);
        let mut rows = vec![vec![0.0; grid.len()]; xs.len()];
        evolve_times(&s, &grid, Backend::Dense, |i, st| {
            for (r, x) in rows.iter_mut().zip(&xs) {
                r[i] = st.probability(x);
            }
        })
        .map_err(|e| e.to_string())?;
        let prop = DensePropagator::new(&s).map_err(|e| e.to_string())?;
        let (mut worst_rel, mut worst_abs, mut worst_limit): (f64, f64, f64) = (0.0, 0.0, 0.0);
        for (x, series) in xs.iter().zip(&rows) {
            let closed = if (n + x.weight()) % 2 == 0 { 2.0 * 2f64.powi(-2 * n as i32) } else { 0.0 };
            let avg = trapezoid_mean(series);
            worst_limit = worst_limit.max((prop.infinite_time_average(x, 1e-9) - closed).abs());
            if closed > 0.0 {
                let rel = (avg - closed).abs() / closed;
                worst_rel = worst_rel.max(rel);
                pass &= rel <= 0.02;
            } else {
                worst_abs = worst_abs.max(avg);
                pass &= avg.abs() <= 1e-3;
            }
        }
        parts.push(format!(
            "n={n}: max rel dev {:.1}%, max zero-branch {worst_abs:.1e}, exact T→∞ limit off by {worst_limit:.0e}, min level gap {:.1e}",
            100.0 * worst_rel,
            prop.min_level_gap(1e-9)
        ));
    }
    verdict(pass, parts.join("; "))
}

fn anticoncentration() -> Result<Verdict, String> {
    let mut pass = true;
    let mut parts = Vec::new();
    let th = AnticonThresholds::standard();
    for n in [4usize, 6] {
        let mults = [2.0, 3.0, 4.0];
        let times: Vec<f64> = mults.iter().map(|k| k * ln(n)).collect();
        let recs = estimate_moments_at(ModelKind::H3, n, &times, 1024, &Rng::new(SEED, 0), Execution::default())
            .map_err(|e| e.to_string())?;
        let mut rs = Vec::new();
        for (k, r) in mults.iter().zip(&recs) {
            let v = ratio_r(r, &th, ModelKind::H3.class()).map_err(|e| e.to_string())?;
            pass &= v >= 0.3;
            rs.push(format!("{k}:{v:.2}"));
            if n == 4 && *k == 4.0 {
                let se = binomial_stderr(v, r.len());
                pass &= v >= 0.7 - 3.0 * se;
                parts.push(format!("anchor n=4 r={v:.3} (need ≥ {:.3})", 0.7 - 3.0 * se));
            }
        }
        parts.push(format!("n={n} r[t/ln n] {}", rs.join(" ")));
    }
    verdict(pass, parts.join("; "))
}

fn equilibration() -> Result<Verdict, String> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, draws) in [(4usize, 128usize), (6, 64)] {
        let grid = uniform_grid(8.0 * ln(n), 161);
        let curve = equilibration_curve(ModelKind::H3, n, &grid, draws, &Rng::new(SEED, 0), Execution::default())
            .map_err(|e| e.to_string())?;
        let drift = window_drift(&curve, 3.0 * ln(n), 4).map_err(|e| e.to_string())?;
        pass &= drift < 0.1;
        parts.push(format!("n={n} ({draws} draws) drift {:.2}%", 100.0 * drift));
    }
    verdict(pass, parts.join("; "))
}

fn extraction() -> Result<Verdict, String> {
    let (mut ok, mut total) = (0, 0);
    let mut worst: f64 = 0.0;
    for n in 2..=3 {
        let x = BitString::all_sigma(n);
        for d in 0..50u64 {
            let s = spec(ModelKind::H3, n, 2 * d);
            let r = extract_permanent_from_dynamics(&s, &x, 0.1, 0.5, 2 * n + 6, OracleMode::Exact)
                .map_err(|e| e.to_string())?;
            total += 1;
            ok += usize::from(r.abs_error() <= r.bound.max(1e-3 * r.truth.abs()));
            worst = worst.max(r.abs_error() / r.truth.abs());
        }
    }
    verdict(ok == total, format!("{ok}/{total} within max(bound, 1e-3·truth), worst rel error {worst:.1e}"))
}

fn berlekamp_welch() -> Result<Verdict, String> {
    let recovered = (0..100usize)
        .filter(|&i| {
            let (d, e) = (i % 11, (i / 11) % 5);
            bw_trial(d, e, e, 20, &mut Rng::new(SEED, i as u64)) == BwOutcome::Recovered
        })
        .count();
    // Budget e ≥ 1: with e = 0 every sample set is consistent with some polynomial.
    let outcomes: Vec<BwOutcome> = (0..100usize)
        .map(|i| {
            let (d, e) = (i % 11, 1 + i % 4);
            bw_trial(d, e, e + 1, 20, &mut Rng::new(SEED + 1, i as u64))
        })
        .collect();
    let signaled = outcomes.iter().filter(|&&o| o == BwOutcome::Signaled).count();
    verdict(
        recovered == 100 && signaled >= 95,
        format!("recovered {recovered}/100 within budget, e+1 corruptions signaled {signaled}/100"),
    )
}

fn lemma1() -> Result<Verdict, String> {
    let delta = 1e-6;
    let mut rng = Rng::new(SEED, 0);
    let (mut ok, mut total, mut configs) = (0, 0, 0);
    let mut worst_ratio: f64 = 0.0;
    for (t0, dw) in [(0.1, 0.5), (0.7, 0.4), (1.0, 0.9)] {
        for d in [1usize, 2, 4, 6, 8, 10] {
            let nodes = window_nodes(t0, dw, d + 1);
            for k in 0..=d {
                configs += 1;
                let signs = coefficient_weight_signs(&nodes, k);
                for trial in 0..1000 {
                    let truth = Polynomial::new((0..=d).map(|_| rng.gaussian()).collect());
                    let pts: Vec<(f64, f64)> = nodes
                        .iter()
                        .zip(&signs)
                        .map(|(&t, s)| {
                            let sign = if trial % 2 == 0 { *s } else if rng.bernoulli(0.5) { 1.0 } else { -1.0 };
                            (t, truth.eval(t) + sign * delta)
                        })
                        .collect();
                    let samples = SampleSet::new(pts).map_err(|e| e.to_string())?;
                    let est = extract_coefficient(&samples, k, t0, dw, delta).map_err(|e| e.to_string())?;
                    let err = (est.estimate - truth.coeff(k)).abs();
                    total += 1;
                    ok += usize::from(err <= est.bound);
                    worst_ratio = worst_ratio.max(err / est.bound);
                }
            }
        }
    }
    verdict(
        ok == total,
        format!("{ok}/{total} trials over {configs} (t0, Δ, d, k) configs, max error/bound {worst_ratio:.3}"),
    )
}

fn trotter_scaling() -> Result<Verdict, String> {
    let grid = [8usize, 16, 32, 64];
    let s = spec(ModelKind::H3, 3, 0);
    let mut pass = true;
    let mut parts = Vec::new();
    for (order, target) in [(TrotterOrder::First, -1.0), (TrotterOrder::Second, -2.0)] {
        let pts = grid
            .iter()
            .map(|&m| trotter_operator_error(&s, 1.0, m, order).map(|e| (m as f64, e)))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        let slope = log_log_slope(&pts);
        pass &= (slope - target).abs() <= 0.15;
        parts.push(format!("{order:?} slope {slope:.3}"));
    }
    let ising = spec(ModelKind::H1, 3, 0);
    let mut worst: f64 = 0.0;
    for m in [1usize, 2, 4, 8, 16, 32, 64] {
        for order in [TrotterOrder::First, TrotterOrder::Second] {
            worst = worst.max(trotter_operator_error(&ising, 1.0, m, order).map_err(|e| e.to_string())?);
        }
    }
    pass &= worst < 1e-10;
    parts.push(format!("H1 max error {worst:.1e}"));
    verdict(pass, parts.join(", "))
}

fn gate_planner() -> Result<Verdict, String> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (eps, want) in [(1e-1, 1.2e8), (1e-2, 3.8e8), (1e-3, 1.2e9)] {
        let plan = gate_count_plan(100, 5.0 * ln(100), eps, 2.97e-4).map_err(|e| e.to_string())?;
        let g = plan.gates as f64;
        pass &= (g / want - 1.0).abs() <= 0.1;
        parts.push(format!("ε={eps:e}: {g:.2e}"));
    }
    let fit = estimate_prefactor(ModelKind::H3, 5, 5.0 * ln(5), &[16, 32, 64, 128], 8, SEED, Execution::default())
        .map_err(|e| e.to_string())?;
    let ratio = (fit.prefactor / 2.97e-4).max(2.97e-4 / fit.prefactor);
    pass &= ratio <= 2.0;
    parts.push(format!("re-estimated P at n=5: {:.3e} (factor {ratio:.2} from 2.97e-4)", fit.prefactor));
    verdict(pass, parts.join(", "))
}

fn l1_bound() -> Result<Verdict, String> {
    let mut ok = 0;
    let mut worst: f64 = 0.0;
    for draw in 0..2u64 {
        let s = spec(ModelKind::H3, 3, draw);
        for m in [1usize, 2, 4, 8] {
            let c = l1_unitary_bound_check(&s, 2.0, m, TrotterOrder::Second).map_err(|e| e.to_string())?;
            ok += usize::from(c.holds());
            worst = worst.max(c.l1_distance / c.four_norm_bound);
        }
    }
    verdict(ok == 8, format!("{ok}/8 (M, J) points, max L1 / 4‖U − Ũ‖ = {worst:.3}"))
}

fn permanent_variance() -> Result<Verdict, String> {
    let mut pass = true;
    let mut parts = Vec::new();
    for m in 2..=4 {
        let est = gaussian_permanent_variance_check(m, 100_000, &Rng::new(SEED, 0), Execution::default())
            .map_err(|e| e.to_string())?;
        let z = (est.mean - 1.0) / est.std_error;
        pass &= z.abs() <= 5.0;
        parts.push(format!("m={m}: {:.4} ({z:+.2} se)", est.mean));
    }
    verdict(pass, parts.join(", "))
}

fn run_cli(args: &[&str], out: &Path) -> Result<(bool, PathBuf, String), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_spinperm"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    let text = String::from_utf8_lossy(&o.stdout).into_owned();
    let dir = text
        .lines()
        .find_map(|l| l.strip_prefix("run directory: "))
        .map(PathBuf::from)
        .ok_or_else(|| format!("{args:?}: no run directory ({})", String::from_utf8_lossy(&o.stderr).trim()))?;
    Ok((o.status.success(), dir, text))
}

fn cli_determinism() -> Result<Verdict, String> {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let experiments: [&[&str]; 10] = [
        &["moments-check", "--n", "2", "--model", "H2", "--num-j", "3"],
        &["equilibrate", "--n", "4", "--num-j", "16", "--points", "41"],
        &["anticon", "--n", "4", "--num-j", "32", "--t-mult", "2,4"],
        &["anticon", "--model", "H1", "--n", "2", "--num-j", "32", "--ising-thresholds"],
        &["extract-permanent", "--n", "2", "--draws", "3", "--noise-mode", "uniform", "--noise", "1e-9"],
        &["worst-to-average", "--m", "3", "--draws", "2"],
        &["trotter-plan"],
        &["trotter-error", "--n", "2", "--draws", "2", "--l1", "--fit-prefactor"],
        &["bw-demo", "--trials", "20", "--seed", "5"],
        &["bounds"],
    ];
    let (mut identical, mut files) = (0, 0);
    let mut problems = Vec::new();
    for args in experiments {
        let (ok, dir, _) = run_cli(args, tmp.path())?;
        if !ok {
            problems.push(format!("{} failed", args[0]));
            continue;
        }
        let manifest: Manifest = serde_json::from_str(
            &std::fs::read_to_string(dir.join(MANIFEST_FILE)).map_err(|e| e.to_string())?,
        )
        .map_err(|e| e.to_string())?;
        let o = Command::new(env!("CARGO_BIN_EXE_spinperm"))
            .arg("replay")
            .arg(dir.join(MANIFEST_FILE))
            .output()
            .map_err(|e| e.to_string())?;
        let text = String::from_utf8_lossy(&o.stdout);
        for f in &manifest.outputs {
            files += 1;
            if text.contains(&format!("identical {f}")) {
                identical += 1;
            } else {
                problems.push(format!("{} {f} differs", args[0]));
            }
        }
        if !o.status.success() {
            problems.push(format!("replay of {} exited {:?}", args[0], o.status.code()));
        }
    }
    let detail = if problems.is_empty() {
        format!("{identical}/{files} outputs of {} replayed runs byte-identical", experiments.len())
    } else {
        format!("{identical}/{files} identical; {}", problems.join(", "))
    };
    verdict(problems.is_empty() && files > 0, detail)
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("moment-permanent identity", moment_identity),
        ("Ising analytic time average", ising_time_average),
        ("anticoncentration anchor", anticoncentration),
        ("equilibration drift", equilibration),
        ("permanent extraction", extraction),
        ("Berlekamp-Welch", berlekamp_welch),
        ("coefficient bound under adversarial noise", lemma1),
        ("Trotter scaling", trotter_scaling),
        ("gate-count planner", gate_planner),
        ("L1 distance bound", l1_bound),
        ("Gaussian permanent variance", permanent_variance),
        ("CLI replay determinism", cli_determinism),
    ];
    let mut passed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match f() {
            Ok(v) => (v.pass, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        passed += usize::from(pass);
        println!(
            "{} {:>2} {name}: {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {passed}/{} criteria passed", criteria.len());
    let strict = std::env::var("SPINPERM_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && passed < criteria.len() {
        std::process::exit(1);
    }
}
