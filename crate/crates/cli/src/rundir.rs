use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::{Deserialize, Serialize};
use spinperm::Execution;

use crate::{execute, Cli, Command, Failure};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    /// Arguments after the program name, as given.
    pub args: Vec<String>,
    /// Fully resolved subcommand options, defaults included.
    pub config: serde_json::Value,
    pub seed: u64,
    pub versions: BTreeMap<String, String>,
    pub git_describe: String,
    pub started_at: String,
    /// Output files, relative to the run directory.
    pub outputs: Vec<String>,
    pub exit_code: i32,
}

/// One run directory and the files written into it.
pub struct Run {
    dir: PathBuf,
    seed: u64,
    exec: Execution,
    started_at: String,
    outputs: Vec<String>,
}

impl Run {
    /// Creates `<out_dir>/<name>-<timestamp>-seed<seed>`, adding a numeric
    /// suffix if that directory already exists.
    pub fn create(out_dir: &Path, name: &str, seed: u64, exec: Execution) -> Result<Run, Failure> {
        fs::create_dir_all(out_dir)?;
        let now = chrono::Utc::now();
        let stamp = now.format("%Y%m%dT%H%M%S%.3fZ");
        let base = format!("{name}-{stamp}-seed{seed}");
        let mut dir = out_dir.join(&base);
        let mut k = 2;
        loop {
            match fs::create_dir(&dir) {
                Ok(()) => break,
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                    dir = out_dir.join(format!("{base}-{k}"));
                    k += 1;
                }
                Err(e) => return Err(e.into()),
            }
        }
        Ok(Run {
            dir,
            seed,
            exec,
            started_at: now.to_rfc3339(),
            outputs: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn exec(&self) -> Execution {
        self.exec
    }

    /// Opens an output file and records it in the manifest.
    pub fn create_file(&mut self, name: &str) -> Result<BufWriter<File>, Failure> {
        let f = File::create(self.dir.join(name))?;
        self.outputs.push(name.to_string());
        Ok(BufWriter::new(f))
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        let mut w = self.create_file(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    /// Serializes `rows` as CSV with a header from the field names.
    pub fn write_rows<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), Failure> {
        let mut w = csv::Writer::from_writer(self.create_file(name)?);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn finish(
        &self,
        command: &str,
        args: Vec<String>,
        config: serde_json::Value,
        exit_code: i32,
    ) -> Result<Manifest, Failure> {
        let mut versions = BTreeMap::new();
        versions.insert("spinperm".to_string(), spinperm::VERSION.to_string());
        versions.insert("spinperm-cli".to_string(), env!("CARGO_PKG_VERSION").to_string());
        let manifest = Manifest {
            command: command.to_string(),
            args,
            config,
            seed: self.seed,
            versions,
            git_describe: git_describe(),
            started_at: self.started_at.clone(),
            outputs: self.outputs.clone(),
            exit_code,
        };
        let mut f = BufWriter::new(File::create(self.dir.join(MANIFEST_FILE))?);
        serde_json::to_writer_pretty(&mut f, &manifest)?;
        f.write_all(b"\n")?;
        f.flush()?;
        Ok(manifest)
    }
}

fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".to_string())
}

#[derive(Clone, Debug)]
pub struct ReplayReport {
    pub original_dir: PathBuf,
    pub new_dir: PathBuf,
    /// `(file, identical)` for every recorded output.
    pub files: Vec<(String, bool)>,
}

/// Re-runs the arguments recorded in `manifest_path`. The new run goes to
/// `out_dir` if given, otherwise next to the original run directory.
pub fn replay(manifest_path: &Path, out_dir: Option<&Path>) -> Result<ReplayReport, Failure> {
    let text = fs::read_to_string(manifest_path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", manifest_path.display())))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("{} is not a manifest: {e}", manifest_path.display())))?;
    let original_dir = manifest_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let argv = std::iter::once("spinperm".to_string()).chain(manifest.args.iter().cloned());
    let mut cli = Cli::try_parse_from(argv)
        .map_err(|e| Failure::Usage(format!("recorded arguments no longer parse: {e}")))?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(Failure::Usage("a replay manifest cannot be replayed".into()));
    }
    cli.out_dir = Some(match out_dir {
        Some(d) => d.to_path_buf(),
        None => original_dir.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(".")),
    });
    // A failing experiment is replayed too; only the outputs are compared.
    let outcome = execute(cli, manifest.args.clone());
    let new_dir = match (outcome.dir, outcome.result) {
        (Some(d), Ok(())) | (Some(d), Err(Failure::Guard { .. } | Failure::Check(_))) => d,
        (_, Err(e)) => return Err(e),
        (None, Ok(())) => return Err(Failure::Io("replayed run left no directory".into())),
    };
    let files = manifest
        .outputs
        .iter()
        .map(|name| {
            let a = fs::read(original_dir.join(name));
            let b = fs::read(new_dir.join(name));
            let same = matches!((a, b), (Ok(a), Ok(b)) if a == b);
            (name.clone(), same)
        })
        .collect();
    Ok(ReplayReport {
        original_dir,
        new_dir,
        files,
    })
}
