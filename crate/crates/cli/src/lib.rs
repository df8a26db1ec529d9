//! Command-line front end for the `spinperm` experiments.
//!
//! Every experiment runs in its own directory `<subcommand>-<timestamp>-seed<seed>`
//! under `--out-dir` and leaves a `manifest.json` next to its CSV outputs.
//! `spinperm replay <manifest>` re-runs the recorded arguments and compares
//! every output byte for byte.
//!
//! Exit codes: 0 on success, 1 when a numerical guard or check fails, 2 on
//! usage errors.

mod commands;
mod rundir;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use spinperm::Execution;

pub use commands::*;
pub use rundir::{replay, Manifest, Run, ReplayReport, MANIFEST_FILE};

pub const DEFAULT_OUT_DIR: &str = "runs";

#[derive(Parser, Debug, Clone)]
#[command(name = "spinperm", version, about = "Seeded experiments on bipartite spin dynamics and matrix permanents")]
pub struct Cli {
    /// Master seed. Every random draw is derived from it.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,

    /// Worker threads. Results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Parent directory for run directories [default: runs]
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Check ⟨x|H^l|y₀⟩ = 0 for l < m and ⟨x|H^m|y₀⟩ = m!/n^m · Per(J_ST) on every Hamming class.
    MomentsCheck(MomentsCheckArgs),
    /// Mean output probability over X_{n/2} as a function of time.
    Equilibrate(EquilibrateArgs),
    /// First and second moments of p(x) over coupling draws and the anticoncentration ratio r.
    Anticon(AnticonArgs),
    /// Recover Per(J_ST)² from short-time output probabilities.
    ExtractPermanent(ExtractArgs),
    /// Recover the permanent of a 0/1 matrix from noisy values on a Gaussian interpolation path.
    WorstToAverage(WorstToAverageArgs),
    /// Trotter steps and gate counts for a target error.
    TrotterPlan(TrotterPlanArgs),
    /// Trotter operator error against the number of steps.
    TrotterError(TrotterErrorArgs),
    /// Plant corruptions in polynomial samples and decode with Berlekamp–Welch.
    BwDemo(BwDemoArgs),
    /// Evaluate the analytic error bounds and thresholds.
    Bounds(BoundsArgs),
    /// Re-run the experiment recorded in a manifest and compare outputs byte for byte.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::MomentsCheck(_) => "moments-check",
            Command::Equilibrate(_) => "equilibrate",
            Command::Anticon(_) => "anticon",
            Command::ExtractPermanent(_) => "extract-permanent",
            Command::WorstToAverage(_) => "worst-to-average",
            Command::TrotterPlan(_) => "trotter-plan",
            Command::TrotterError(_) => "trotter-error",
            Command::BwDemo(_) => "bw-demo",
            Command::Bounds(_) => "bounds",
            Command::Replay(_) => "replay",
        }
    }

    fn config(&self) -> serde_json::Value {
        let v = match self {
            Command::MomentsCheck(a) => serde_json::to_value(a),
            Command::Equilibrate(a) => serde_json::to_value(a),
            Command::Anticon(a) => serde_json::to_value(a),
            Command::ExtractPermanent(a) => serde_json::to_value(a),
            Command::WorstToAverage(a) => serde_json::to_value(a),
            Command::TrotterPlan(a) => serde_json::to_value(a),
            Command::TrotterError(a) => serde_json::to_value(a),
            Command::BwDemo(a) => serde_json::to_value(a),
            Command::Bounds(a) => serde_json::to_value(a),
            Command::Replay(a) => serde_json::to_value(a),
        };
        v.unwrap_or(serde_json::Value::Null)
    }
}

/// Why a run did not succeed.
#[derive(Debug)]
pub enum Failure {
    /// Bad arguments; exit code 2.
    Usage(String),
    /// A named numerical guard tripped; exit code 1.
    Guard { guard: String, message: String },
    /// A check the experiment performs did not hold; exit code 1.
    Check(String),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage: {m}"),
            Failure::Guard { guard, message } => write!(f, "numerical guard `{guard}` violated: {message}"),
            Failure::Check(m) => write!(f, "check failed: {m}"),
            Failure::Io(m) => write!(f, "io: {m}"),
        }
    }
}

impl From<spinperm::Error> for Failure {
    fn from(e: spinperm::Error) -> Self {
        use spinperm::Error as E;
        if let Some(guard) = e.guard_name() {
            return Failure::Guard {
                guard: guard.to_string(),
                message: e.to_string(),
            };
        }
        match e {
            E::InvalidArgument(_)
            | E::NotInHammingClass(_)
            | E::BasisMismatch(_)
            | E::DuplicateNode(_)
            | E::WindowMismatch(_) => Failure::Usage(e.to_string()),
            E::Io(io) => Failure::Io(io.to_string()),
            other => Failure::Check(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let args: Vec<String> = argv
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match execute(cli, args).result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}

/// Result of [`execute`]: the run directory, if one was created, and whether
/// the experiment succeeded.
#[derive(Debug)]
pub struct Outcome {
    pub dir: Option<PathBuf>,
    pub result: Result<(), Failure>,
}

/// Runs a parsed command line. `args` is the argument list recorded in the
/// manifest.
pub fn execute(cli: Cli, args: Vec<String>) -> Outcome {
    if cli.threads == Some(0) {
        return Outcome {
            dir: None,
            result: Err(Failure::Usage("--threads must be at least 1".into())),
        };
    }
    with_threads(cli.threads, || dispatch(&cli, args))
}

#[cfg(feature = "parallel")]
fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match threads {
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_threads<R: Send>(_threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    f()
}

fn dispatch(cli: &Cli, args: Vec<String>) -> Outcome {
    let fail = |f: Failure| Outcome { dir: None, result: Err(f) };
    let out_dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    if let Command::Replay(a) = &cli.command {
        let report = match replay(&a.manifest, cli.out_dir.as_deref()) {
            Ok(r) => r,
            Err(f) => return fail(f),
        };
        for (name, same) in &report.files {
            println!("{} {name}", if *same { "identical" } else { "DIFFERENT" });
        }
        println!("replay directory: {}", report.new_dir.display());
        let result = if report.files.iter().all(|f| f.1) {
            Ok(())
        } else {
            Err(Failure::Check("replayed outputs differ from the recorded run".into()))
        };
        return Outcome {
            dir: Some(report.new_dir),
            result,
        };
    }
    let mut run = match Run::create(&out_dir, cli.command.name(), cli.seed, Execution::default()) {
        Ok(r) => r,
        Err(f) => return fail(f),
    };
    println!("run directory: {}", run.dir().display());
    let mut result = match &cli.command {
        Command::MomentsCheck(a) => moments_check(a, &mut run),
        Command::Equilibrate(a) => equilibrate(a, &mut run),
        Command::Anticon(a) => anticon(a, &mut run),
        Command::ExtractPermanent(a) => extract_permanent(a, &mut run),
        Command::WorstToAverage(a) => worst_to_average(a, &mut run),
        Command::TrotterPlan(a) => trotter_plan(a, &mut run),
        Command::TrotterError(a) => trotter_error(a, &mut run),
        Command::BwDemo(a) => bw_demo(a, &mut run),
        Command::Bounds(a) => bounds(a, &mut run),
        Command::Replay(_) => unreachable!("handled above"),
    };
    let code = result.as_ref().map_or_else(Failure::exit_code, |_| 0);
    if let Err(f) = run.finish(cli.command.name(), args, cli.command.config(), code) {
        result = result.and(Err(f));
    }
    Outcome {
        dir: Some(run.dir().to_path_buf()),
        result,
    }
}
