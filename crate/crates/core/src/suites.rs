//! Named check suites: each runs a family of measurements and returns one verdict per check.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dsl::symbol_from_text;
use crate::error::{Error, Result};
use crate::estimator::{
    blowup_sweep, interpolation_check, op_norm_estimate, seminorm_bound_check, uniformity_check, NormMethod, NormOptions, OperatorNet,
    BOUNDEDNESS_FACTOR, INTERPOLATION_TOL,
};
use crate::grid::{make_grid, PeriodicGrid, C64};
use crate::lp::{make_partition, CutoffProfile, LPPartition};
use crate::mollifier::{log_blowup_check, sup_norm_sweep, zygmund_blowup_sweep, Mollifier, LOG_CHECK_SPREAD};
use crate::paradiff::{three_part_sweep, ElementarySymbol};
use crate::quantizer::{quantize, transpose, LatticeOperator};
use crate::symbol::{builtin, lacunary, moderate_net, mollify_symbol, weierstrass, Builtin, SampledSymbol, SymbolGenerator};
use crate::sweep::{default_eps_grid, dyadic_eps, fit_rate, Rate, SweepReport, DEFAULT_TAIL};

/// One check: the measured quantity, the bound it is held to, and the outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub measured: f64,
    pub bound: String,
    pub pass: bool,
}

impl Verdict {
    fn new(name: impl Into<String>, measured: f64, bound: impl Into<String>, pass: bool) -> Self {
        Self { name: name.into(), measured, bound: bound.into(), pass: pass && !measured.is_nan() }
    }

    fn within(name: impl Into<String>, measured: f64, lo: f64, hi: f64) -> Self {
        Self::new(name, measured, format!("[{}, {}]", num(lo), num(hi)), measured >= lo && measured <= hi)
    }

    fn at_most(name: impl Into<String>, measured: f64, hi: f64) -> Self {
        Self::new(name, measured, format!("<= {}", num(hi)), measured <= hi)
    }

    fn below(name: impl Into<String>, measured: f64, hi: f64) -> Self {
        Self::new(name, measured, format!("< {}", num(hi)), measured < hi)
    }
}

fn num(v: f64) -> String {
    if v != 0.0 && v.abs() < 1e-3 {
        return format!("{v:e}");
    }
    let r = (v * 1e6).round() / 1e6;
    format!("{r}")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Zygmund,
    Main,
    Uniform,
    Interp,
    Wong,
    ThreePart,
    All,
}

impl Suite {
    pub const MEMBERS: [Suite; 6] = [Suite::Zygmund, Suite::Main, Suite::Uniform, Suite::Interp, Suite::Wong, Suite::ThreePart];
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Zygmund => "zygmund",
            Suite::Main => "main",
            Suite::Uniform => "uniform",
            Suite::Interp => "interp",
            Suite::Wong => "wong",
            Suite::ThreePart => "three-part",
            Suite::All => "all",
        })
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "zygmund" => Suite::Zygmund,
            "main" => Suite::Main,
            "uniform" => Suite::Uniform,
            "interp" => Suite::Interp,
            "wong" => Suite::Wong,
            "three-part" => Suite::ThreePart,
            "all" => Suite::All,
            other => return Err(Error::UnknownName(other.to_string())),
        })
    }
}

pub const MIN_SUITE_GRID: usize = 128;
pub const MAX_SUITE_GRID: usize = 4096;

/// Grid size and seed shared by every check of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub n: usize,
    pub seed: u64,
}

impl SuiteConfig {
    pub fn new(n: usize, seed: u64) -> Result<Self> {
        if !n.is_power_of_two() || !(MIN_SUITE_GRID..=MAX_SUITE_GRID).contains(&n) {
            return Err(Error::Invalid(format!("suite grid size must be a power of two in [{MIN_SUITE_GRID}, {MAX_SUITE_GRID}], got {n}")));
        }
        Ok(Self { n, seed })
    }

    fn log2n(&self) -> u32 {
        self.n.trailing_zeros()
    }

    /// `2^{-3}, …, 2^{-10}`.
    pub fn eps_grid(&self) -> Vec<f64> {
        default_eps_grid()
    }

    /// `2^{-3}, …, 2^{-B}` with `B = min(10, log₂N - 2)`, for nets oscillating at frequency `1/ε`.
    pub fn oscillating_eps_grid(&self) -> Vec<f64> {
        dyadic_eps(3, 10.min(self.log2n() - 2))
    }

    pub fn grid(&self) -> Result<PeriodicGrid> {
        make_grid(self.n)
    }

    fn opts(&self) -> NormOptions {
        NormOptions { seed: self.seed, ..NormOptions::default() }
    }
}

pub fn run_suite(suite: Suite, cfg: &SuiteConfig) -> Result<Vec<Verdict>> {
    match suite {
        Suite::Zygmund => zygmund_suite(cfg),
        Suite::Main => main_suite(cfg),
        Suite::Uniform => uniform_suite(cfg),
        Suite::Interp => interp_suite(cfg),
        Suite::Wong => wong_suite(cfg),
        Suite::ThreePart => three_part_suite(cfg),
        Suite::All => {
            let mut out = Vec::new();
            for s in Suite::MEMBERS {
                out.extend(run_suite(s, cfg)?);
            }
            Ok(out)
        }
    }
}

fn slope(rep: &SweepReport) -> Result<f64> {
    let rate = fit_rate(rep, DEFAULT_TAIL.min(rep.eps.len()))?;
    Ok(rate_slope(&rate))
}

fn rate_slope(rate: &Rate) -> f64 {
    rate.slope_or_zero().unwrap_or(f64::NAN)
}

pub const SLOPE_TOL: f64 = 0.1;
pub const HIGH_BAND_TOL: f64 = 0.15;
pub const SCALING_LOWER_TOL: f64 = 0.15;
pub const DUALITY_TOL: f64 = 1e-8;

/// Mollifier scaling of `‖u_ε‖_{C^{s+r}_∗}` and `‖u_ε‖_∞`, and the logarithmic sup-norm growth.
pub fn zygmund_suite(cfg: &SuiteConfig) -> Result<Vec<Verdict>> {
    let grid = cfg.grid()?;
    let eps = cfg.eps_grid();
    let part = make_partition(&grid, CutoffProfile::default());
    let gauss = Mollifier::gaussian();
    let w = weierstrass(&grid, 0.5);
    let mut out = Vec::new();
    for r in [0.5, 1.0, 2.0] {
        let m = slope(&zygmund_blowup_sweep(&w, &gauss, 0.5, r, &eps, &part)?)?;
        out.push(Verdict::within(format!("zygmund.scaling.weierstrass:0.5.r={r}"), m, r - SCALING_LOWER_TOL, r + SLOPE_TOL));
    }
    let rough = lacunary(&grid, |j| (0.5 * j as f64).exp2());
    for (label, f, r) in [("weierstrass:0.5", &w, 0.5), ("lacunary:-0.5", &rough, 0.75), ("lacunary:-0.5", &rough, 1.0)] {
        let m = slope(&sup_norm_sweep(f, &gauss, &eps)?)?;
        out.push(Verdict::at_most(format!("zygmund.sup.{label}.r={r}"), m, r + SLOPE_TOL));
    }
    let flat = builtin(&Builtin::LacunaryFlat, &grid)?.column_function(0);
    let log = log_blowup_check(&flat, &Mollifier::moment_vanishing(), &eps)?;
    out.push(Verdict::below("zygmund.log.lacunary_flat", log.spread, LOG_CHECK_SPREAD));
    Ok(out)
}

/// Blow-up of the mollified Weierstrass multiplication operator on `H^{s,2}`.
pub fn main_suite(cfg: &SuiteConfig) -> Result<Vec<Verdict>> {
    let grid = cfg.grid()?;
    let eps = cfg.eps_grid();
    let r = 0.5;
    let w = builtin(&Builtin::Weierstrass(r), &grid)?;
    let gauss = Mollifier::gaussian();
    let opts = cfg.opts();
    let measure = |s: f64| -> Result<f64> { slope(&blowup_sweep(&w, &gauss, s, 2.0, 0.0, &eps, NormMethod::Exact2, &opts)?) };
    let mut out = Vec::new();
    let low = measure(0.3)?;
    out.push(Verdict::within("main.taylor-regime.s=0.3", low, -SLOPE_TOL, SLOPE_TOL));
    let mut band = Vec::new();
    for s in [0.6, 0.9, 1.2, 1.5] {
        let m = measure(s)?;
        if s > 0.6 {
            out.push(Verdict::at_most(format!("main.blowup.s={s}"), m, s - r + SLOPE_TOL));
        }
        band.push(m);
    }
    let step = band.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    out.push(Verdict::new("main.monotone-in-s", step, ">= 0", step >= 0.0));
    Ok(out)
}

/// Probe symbols for the duality identity, with their orders.
pub fn duality_probes(grid: &PeriodicGrid) -> Result<Vec<(SampledSymbol, f64)>> {
    let mollified = mollify_symbol(&builtin(&Builtin::Weierstrass(0.5), grid)?, &Mollifier::gaussian(), 0.05)?;
    Ok(vec![
        (builtin(&Builtin::SmoothS0, grid)?, 0.0),
        (symbol_from_text("weier(0.5, x)*chi(xi/8)", grid, 0.0)?, 0.0),
        (mollified, 0.0),
        (symbol_from_text("(2 + sin(x))*jb(xi)", grid, 1.0)?, 1.0),
        (symbol_from_text("cos(3*x)*jb(xi)^-1 + sin(x)", grid, 0.0)?, 0.0),
    ])
}

/// Largest relative gap between `‖a‖_{H^{s+m} → H^s}` and `‖ᵗa‖_{H^{-s} → H^{-s-m}}`.
pub fn duality_gap(probes: &[(SampledSymbol, f64)], s_list: &[f64], opts: &NormOptions) -> Result<f64> {
    let mut gap: f64 = 0.0;
    for (a, m) in probes {
        let op = quantize(a);
        let t = transpose(&op);
        for &s in s_list {
            let direct = op_norm_estimate(&op, s + m, s, 2.0, NormMethod::Exact2, opts)?.value;
            let dual = op_norm_estimate(&t, -s, -s - m, 2.0, NormMethod::Exact2, opts)?.value;
            gap = gap.max((direct - dual).abs() / direct.max(f64::MIN_POSITIVE));
        }
    }
    Ok(gap)
}

/// ε-uniformity for a smooth symbol at positive and negative `s`, and Sobolev duality.
pub fn uniform_suite(cfg: &SuiteConfig) -> Result<Vec<Verdict>> {
    let grid = cfg.grid()?;
    let eps = cfg.eps_grid();
    let a = builtin(&Builtin::SmoothS0, &grid)?;
    let rep = uniformity_check(&a, &Mollifier::gaussian(), &[-2.0, -0.5, 0.5, 2.0], 2.0, 0.0, 0.0, &eps, &cfg.opts())?;
    let mut out = vec![Verdict::new("uniform.gate.smooth_s0", rep.gate.growth.iter().cloned().fold(0.0, f64::max), "<= delta + 0.1 = 0.1", rep.gate.ok)];
    for e in &rep.entries {
        out.push(Verdict::within(format!("uniform.smooth_s0.s={}", e.s), rate_slope(&e.rate), -SLOPE_TOL, SLOPE_TOL));
    }
    let probes = duality_probes(&grid)?;
    let gap = duality_gap(&probes, &[-1.0, 0.5, 2.0], &cfg.opts())?;
    out.push(Verdict::at_most("uniform.duality", gap, DUALITY_TOL));
    Ok(out)
}

/// The operator nets of the interpolation check.
pub fn interpolation_nets(grid: &PeriodicGrid) -> Result<Vec<(String, OperatorNet)>> {
    let g = grid.clone();
    let three = LatticeOperator::identity(grid).scale(C64::new(3.0, 0.0));
    let bracket = LatticeOperator::bracket_power(grid, -1.0);
    let w = builtin(&Builtin::Weierstrass(0.5), grid)?;
    let wchi = symbol_from_text("weier(0.5, x)*chi(xi/8)", grid, 0.0)?;
    let smooth = builtin(&Builtin::SmoothS0, &g)?;
    let mollified = |a: SampledSymbol| -> OperatorNet { Arc::new(move |e| Ok(quantize(&mollify_symbol(&a, &Mollifier::gaussian(), e)?))) };
    Ok(vec![
        ("mult:3".into(), Arc::new(move |_| Ok(three.clone())) as OperatorNet),
        ("bracket:-1".into(), Arc::new(move |_| Ok(bracket.clone())) as OperatorNet),
        ("weierstrass:0.5".into(), mollified(w)),
        ("weier(0.5,x)*chi(xi/8)".into(), mollified(wchi)),
        ("smooth_s0".into(), mollified(smooth)),
    ])
}

pub const INTERPOLATION_THETAS: [f64; 3] = [0.25, 0.5, 0.75];

/// `‖T_ε‖_{H^s} ≤ max(‖T_ε‖_{H^{s_0}}, ‖T_ε‖_{H^{s_1}})` with `s_0 = 0.2`, `s_1 = 2`.
pub fn interp_suite(cfg: &SuiteConfig) -> Result<Vec<Verdict>> {
    let grid = cfg.grid()?;
    let eps = cfg.eps_grid();
    let mut out = Vec::new();
    for (label, net) in interpolation_nets(&grid)? {
        let rows = interpolation_check(&net, 0.2, 2.0, &INTERPOLATION_THETAS, 2.0, &eps, &cfg.opts())?;
        let worst = rows.iter().map(|r| r.mid / r.omega0.max(r.omega1)).fold(0.0, f64::max);
        out.push(Verdict::at_most(format!("interp.{label}"), worst, 1.0 + INTERPOLATION_TOL));
    }
    Ok(out)
}

/// The moderate nets of the seminorm-controlled bound, on `grid`.
pub fn wong_nets(grid: &PeriodicGrid) -> Result<Vec<(String, SymbolGenerator)>> {
    let g = grid.clone();
    let osc: SymbolGenerator = Arc::new(move |e: f64| symbol_from_text(&format!("sin({}*x)*chi(xi)", (1.0 / e).round()), &g, 0.0));
    let w = builtin(&Builtin::Weierstrass(0.5), grid)?;
    let wchi = symbol_from_text("weier(0.5, x)*chi(xi/8)", grid, 0.0)?;
    let mollified = |a: SampledSymbol| -> SymbolGenerator { Arc::new(move |e| mollify_symbol(&a, &Mollifier::gaussian(), e)) };
    Ok(vec![("sin(q*x)*chi(xi)".into(), osc), ("weierstrass:0.5".into(), mollified(w)), ("weier(0.5,x)*chi(xi/8)".into(), mollified(wchi))])
}

pub const WONG_DEPTH: usize = 4;
pub const WONG_EXPONENTS: [f64; 3] = [1.5, 2.0, 3.0];
pub const WONG_CONJUGATIONS: [f64; 3] = [0.0, -1.0, 1.0];

/// `‖a_ε(x,D)‖ / sup_{α+β ≤ 4} |a_ε|_{α,β}` for three nets, `p ∈ {1.5, 2, 3}`, `s ∈ {0, ±1}`.
pub fn wong_suite(cfg: &SuiteConfig) -> Result<Vec<Verdict>> {
    let grid = cfg.grid()?;
    let eps = cfg.oscillating_eps_grid();
    let opts = cfg.opts();
    let mut out = Vec::new();
    for (label, gen) in wong_nets(&grid)? {
        let net = moderate_net(gen, &eps, WONG_DEPTH)?;
        for s in WONG_CONJUGATIONS {
            for p in WONG_EXPONENTS {
                let rep = seminorm_bound_check(&net, p, s, 0.0, WONG_DEPTH, &eps, &opts)?;
                let tag = format!("{label}.p={p}.s={s}");
                out.push(Verdict::below(format!("wong.max-over-median.{tag}"), rep.max_over_median, BOUNDEDNESS_FACTOR));
                out.push(Verdict::below(format!("wong.tail-max-over-median.{tag}"), rep.tail_max_over_median, BOUNDEDNESS_FACTOR));
            }
        }
    }
    Ok(out)
}

/// Partition used for elementary decompositions and three-part splittings.
pub fn elementary_partition(grid: &PeriodicGrid) -> LPPartition {
    make_partition(grid, CutoffProfile::SmoothedErf)
}

pub const THREE_PART_CASES: [(f64, f64, f64); 2] = [(0.5, 1.0, 1.2), (0.5, 0.7, 1.0)];

/// Slopes of the three parts of the Weierstrass elementary symbol for `(r, h, s)` cases.
pub fn three_part_suite(cfg: &SuiteConfig) -> Result<Vec<Verdict>> {
    let grid = cfg.grid()?;
    let eps = cfg.eps_grid();
    let part = elementary_partition(&grid);
    let mut out = Vec::new();
    for (r, h, s) in THREE_PART_CASES {
        let e = ElementarySymbol::from_function(&weierstrass(&grid, r), &part, r)?;
        let rep = three_part_sweep(&e, &Mollifier::gaussian(), s, 2.0, h, &eps, &part, &cfg.opts())?;
        let tag = format!("r={r}.h={h}.s={s}");
        out.push(Verdict::within(format!("three-part.low.{tag}"), rate_slope(&rep.rates[0]), -SLOPE_TOL, SLOPE_TOL));
        out.push(Verdict::within(format!("three-part.diagonal.{tag}"), rate_slope(&rep.rates[1]), -SLOPE_TOL, SLOPE_TOL));
        out.push(Verdict::at_most(format!("three-part.high.{tag}"), rate_slope(&rep.rates[2]), h + HIGH_BAND_TOL));
    }
    Ok(out)
}
