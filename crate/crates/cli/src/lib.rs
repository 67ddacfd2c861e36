//! Command-line front end: argument parsing, dispatch, output files and run manifests.

pub mod args;
mod commands;
pub mod manifest;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use args::{Cli, Command, DEFAULT_SEED};
pub use manifest::{Manifest, Versions, MANIFEST_SCHEMA};

/// Environment variable overriding `--seed`.
pub const SEED_ENV: &str = "PDOLAB_SEED";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] pdolab::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{0}")]
    Invalid(String),
}

pub type CliResult<T> = Result<T, CliError>;

/// The part of a run that determines its outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
}

impl RunConfig {
    /// `<command>-<first 12 hex digits of the SHA-256 of the configuration JSON>`.
    pub fn default_run_id(&self) -> String {
        let json = serde_json::to_string(self).expect("configuration serialises");
        let digest = Sha256::digest(json.as_bytes());
        let hex: String = digest.iter().take(6).map(|b| format!("{b:02x}")).collect();
        format!("{}-{hex}", self.command.name())
    }
}

/// What a finished run produced.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub run_id: String,
    /// Single-line JSON result, also written to `<run_id>.json`.
    pub result: String,
    pub pass: bool,
    pub manifest: PathBuf,
    pub files: Vec<PathBuf>,
}

/// Output of one subcommand before it is written.
pub(crate) struct Product {
    pub result: serde_json::Value,
    pub csv: Option<String>,
    pub extra_files: Vec<PathBuf>,
    pub pass: bool,
}

impl Product {
    pub fn json(result: serde_json::Value) -> Self {
        Self { result, csv: None, extra_files: Vec::new(), pass: true }
    }
}

/// Parses `argv`, runs the subcommand and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    match execute(&cli, env_seed.as_deref()) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            let _ = writeln!(stdout, "{}", out.result);
            if out.pass {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}

/// Resolves the seed: `PDOLAB_SEED`, then `--seed`, then [`DEFAULT_SEED`].
pub fn resolve_seed(flag: Option<u64>, env: Option<&str>) -> CliResult<u64> {
    match env {
        Some(v) if !v.trim().is_empty() => v.trim().parse().map_err(|_| CliError::Invalid(format!("{SEED_ENV} must be an unsigned integer, got `{v}`"))),
        _ => Ok(flag.unwrap_or(DEFAULT_SEED)),
    }
}

/// Runs a parsed command line, writing outputs and the manifest into `--out-dir`.
pub fn execute(cli: &Cli, env_seed: Option<&str>) -> CliResult<Outcome> {
    let out_dir = cli.run.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    let (config, run_id) = match &cli.command {
        Command::Replay(r) => {
            let m = Manifest::read(&r.manifest)?;
            let id = cli.run.run_id.clone().unwrap_or(m.run_id);
            (m.config, id)
        }
        command => {
            let config = RunConfig { command: command.clone(), seed: resolve_seed(cli.run.seed, env_seed)? };
            let id = cli.run.run_id.clone().unwrap_or_else(|| config.default_run_id());
            (config, id)
        }
    };
    execute_config(&config, &run_id, &out_dir, cli.run.threads)
}

/// Runs `config` on a pool of `threads` workers (all cores when `None`).
pub fn execute_config(config: &RunConfig, run_id: &str, out_dir: &Path, threads: Option<usize>) -> CliResult<Outcome> {
    validate_run_id(run_id)?;
    if threads == Some(0) {
        return Err(CliError::Invalid("--threads must be positive".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Invalid(format!("cannot start worker pool: {e}")))?;
    let start = Instant::now();
    let product = pool.install(|| commands::dispatch(config))?;
    let wall_time_s = start.elapsed().as_secs_f64();

    std::fs::create_dir_all(out_dir).map_err(|source| CliError::Io { path: out_dir.to_path_buf(), source })?;
    let result = serde_json::to_string(&product.result).expect("result serialises");
    let mut outputs = Vec::new();
    let json_path = out_dir.join(format!("{run_id}.json"));
    write_file(&json_path, format!("{result}\n").as_bytes())?;
    outputs.push(json_path);
    if let Some(csv) = &product.csv {
        let csv_path = out_dir.join(format!("{run_id}.csv"));
        write_file(&csv_path, csv.as_bytes())?;
        outputs.push(csv_path);
    }
    outputs.extend(product.extra_files.iter().cloned());
    let manifest = Manifest {
        schema: MANIFEST_SCHEMA,
        run_id: run_id.to_string(),
        command: config.command.name().to_string(),
        config: config.clone(),
        versions: Versions::current(),
        seed: config.seed,
        threads: pool.current_num_threads(),
        wall_time_s,
        pass: product.pass,
        outputs: outputs.iter().map(|p| relative_name(p, out_dir)).collect(),
    };
    let manifest_path = out_dir.join(format!("{run_id}.manifest.json"));
    manifest.write(&manifest_path)?;
    Ok(Outcome { run_id: run_id.to_string(), result, pass: product.pass, manifest: manifest_path, files: outputs })
}

fn validate_run_id(id: &str) -> CliResult<()> {
    let ok = !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.')) && !id.starts_with('.');
    if ok {
        Ok(())
    } else {
        Err(CliError::Invalid(format!("run id must be non-empty ASCII letters, digits, '-', '_' or '.', got `{id}`")))
    }
}

fn relative_name(path: &Path, dir: &Path) -> String {
    path.strip_prefix(dir).unwrap_or(path).to_string_lossy().into_owned()
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

pub(crate) fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// `{:.16e}`: 17 significant digits, which round-trip every `f64`.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
