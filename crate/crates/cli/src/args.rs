//! Command-line arguments. Every subcommand's arguments serialise into the run manifest.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pdolab::estimator::NormMethod;
use pdolab::suites::Suite;
use pdolab::{CutoffProfile, MollifierKind};
use serde::{Deserialize, Serialize};

/// Seed used when neither `--seed` nor `PDOLAB_SEED` is given.
pub const DEFAULT_SEED: u64 = 0x5eed;

/// Eps grid used when `--eps` is not given.
pub const DEFAULT_EPS: &str = "2^-3..2^-10";

#[derive(Parser, Debug, Clone, PartialEq)]
#[command(name = "pdolab", version, about = "Numerical experiments on pseudodifferential operators with Hölder-Zygmund symbols")]
pub struct Cli {
    #[command(flatten)]
    pub run: RunOptions,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Directory receiving outputs and the run manifest.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Stem of the output files; derived from the configuration when omitted.
    #[arg(long, global = true)]
    pub run_id: Option<String>,
    /// Seed of every randomised estimate; `PDOLAB_SEED` takes precedence.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Norm of a grid function.
    Norm(NormArgs),
    /// Mollify a grid function at one eps.
    Regularize(RegularizeArgs),
    /// Apply the quantization of a symbol to a grid function.
    Quantize(QuantizeArgs),
    /// Decompose an order-zero symbol into elementary symbols.
    Decompose(DecomposeArgs),
    /// Blow-up rates of the three paradifferential parts of a mollified symbol.
    ThreePart(ThreePartArgs),
    /// Blow-up sweep of the operator norm of a mollified symbol.
    Sweep(SweepArgs),
    /// Blow-up sweep of the Zygmund norm of a mollified function.
    SweepZygmund(SweepZygmundArgs),
    /// Run a check suite.
    Check(CheckArgs),
    /// Merge the outputs of several runs.
    Report(ReportArgs),
    /// Re-run the configuration stored in a manifest.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Norm(_) => "norm",
            Command::Regularize(_) => "regularize",
            Command::Quantize(_) => "quantize",
            Command::Decompose(_) => "decompose",
            Command::ThreePart(_) => "three-part",
            Command::Sweep(_) => "sweep",
            Command::SweepZygmund(_) => "sweep-zygmund",
            Command::Check(_) => "check",
            Command::Report(_) => "report",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormKind {
    Sup,
    Lp,
    Besov,
    Zygmund,
    Sobolev,
    #[value(alias = "square")]
    Sqfn,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileArg {
    Spline,
    Erf,
}

impl From<ProfileArg> for CutoffProfile {
    fn from(p: ProfileArg) -> Self {
        match p {
            ProfileArg::Spline => CutoffProfile::PolynomialSpline,
            ProfileArg::Erf => CutoffProfile::SmoothedErf,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MollifierArg {
    Gaussian,
    Momvan,
}

impl From<MollifierArg> for MollifierKind {
    fn from(m: MollifierArg) -> Self {
        match m {
            MollifierArg::Gaussian => MollifierKind::Gaussian,
            MollifierArg::Momvan => MollifierKind::MomentVanishing,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    Exact2,
    Probe,
    Boyd,
}

impl From<MethodArg> for NormMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Exact2 => NormMethod::Exact2,
            MethodArg::Probe => NormMethod::Probe,
            MethodArg::Boyd => NormMethod::Boyd,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteArg {
    Zygmund,
    Main,
    Uniform,
    Interp,
    Wong,
    ThreePart,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Zygmund => Suite::Zygmund,
            SuiteArg::Main => Suite::Main,
            SuiteArg::Uniform => Suite::Uniform,
            SuiteArg::Interp => Suite::Interp,
            SuiteArg::Wong => Suite::Wong,
            SuiteArg::ThreePart => Suite::ThreePart,
            SuiteArg::All => Suite::All,
        }
    }
}

/// DSL text, a builtin name, or a file holding either or a symbol JSON.
#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[group(required = true, multiple = false)]
pub struct SymbolSource {
    /// Symbol expression in the DSL, or a builtin such as `weierstrass:0.5`.
    #[arg(long)]
    pub symbol: Option<String>,
    /// File with a symbol JSON or symbol text.
    #[arg(long)]
    pub symbol_file: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormArgs {
    /// Grid function JSON.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub kind: NormKind,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub s: f64,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Quadrature samples per octave of the continuous Zygmund norm.
    #[arg(long, default_value_t = 8)]
    pub samples_per_octave: usize,
    #[arg(long, value_enum, default_value_t = ProfileArg::Spline)]
    pub profile: ProfileArg,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularizeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = MollifierArg::Gaussian)]
    pub mollifier: MollifierArg,
    #[arg(long)]
    pub eps: f64,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizeArgs {
    #[command(flatten)]
    pub source: SymbolSource,
    #[arg(long)]
    pub input: PathBuf,
    /// Declared order of the symbol.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub m: f64,
    /// Write the operator matrix in the binary operator format.
    #[arg(long)]
    pub export_op: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub source: SymbolSource,
    #[arg(long)]
    pub r: f64,
    #[arg(long)]
    pub nu_max: usize,
    #[arg(long, default_value_t = pdolab::paradiff::DEFAULT_M0)]
    pub m0: i32,
    /// Declared order; a nonzero order is reduced to zero by `⟨ξ⟩^{-m}` first.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub m: f64,
    #[arg(long, default_value_t = 512)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = ProfileArg::Erf)]
    pub profile: ProfileArg,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreePartArgs {
    #[command(flatten)]
    pub source: SymbolSource,
    #[arg(long)]
    pub r: f64,
    #[arg(long)]
    pub h: f64,
    #[arg(long)]
    pub s: f64,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub m: f64,
    #[arg(long, default_value_t = 16)]
    pub nu_max: usize,
    #[arg(long, default_value_t = pdolab::paradiff::DEFAULT_M0)]
    pub m0: i32,
    #[arg(long, default_value_t = 512)]
    pub n: usize,
    #[arg(long, default_value = DEFAULT_EPS)]
    pub eps: String,
    #[arg(long, value_enum, default_value_t = MollifierArg::Gaussian)]
    pub mollifier: MollifierArg,
    #[arg(long, value_enum, default_value_t = ProfileArg::Erf)]
    pub profile: ProfileArg,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub source: SymbolSource,
    /// Hölder-Zygmund regularity recorded with the sweep.
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub s: f64,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub m: f64,
    #[arg(long, value_enum, default_value_t = MollifierArg::Gaussian)]
    pub mollifier: MollifierArg,
    #[arg(long, default_value = DEFAULT_EPS)]
    pub eps: String,
    /// Defaults to `exact2` at `p = 2` and `boyd` otherwise.
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long, default_value_t = 512)]
    pub n: usize,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepZygmundArgs {
    /// Builtin probe or DSL expression in `x` alone.
    #[arg(long, default_value = "weierstrass:0.5")]
    pub probe: String,
    #[arg(long)]
    pub s: f64,
    #[arg(long)]
    pub r: f64,
    #[arg(long, default_value_t = 1024)]
    pub n: usize,
    #[arg(long, default_value = DEFAULT_EPS)]
    pub eps: String,
    #[arg(long, value_enum, default_value_t = MollifierArg::Gaussian)]
    pub mollifier: MollifierArg,
    #[arg(long, value_enum, default_value_t = ProfileArg::Spline)]
    pub profile: ProfileArg,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckArgs {
    #[arg(long, value_enum, default_value_t = SuiteArg::All)]
    pub suite: SuiteArg,
    #[arg(long, default_value_t = 512)]
    pub n: usize,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportArgs {
    /// Run manifests to merge.
    pub manifests: Vec<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
}
