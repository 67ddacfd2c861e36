//! Operator norms between lattice Sobolev spaces, ε-sweeps of them and the
//! theorem-level checks built on those sweeps.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{random_band_limited, validate_exponent, GridFunction, PeriodicGrid, C64};
use crate::lp::{bracket, sobolev_norm, LPPartition};
use crate::mollifier::Mollifier;
use crate::quantizer::{compose, quantize, LatticeOperator};
use crate::symbol::{mollify_symbol, seminorm, seminorm_sup, x_derivative_symbol, ModerateNet, SampledSymbol};
use crate::sweep::{fit_rate, validate_eps_grid, Rate, SweepMeta, SweepReport, DEFAULT_TAIL};

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    /// Largest singular value at `p = 2`, by Lanczos on `WᴴW`.
    Exact2,
    /// Maximum ratio over a seeded probe family; a lower bound.
    Probe,
    /// Higham's p-norm power method; a lower-bound estimate.
    Boyd,
}

impl fmt::Display for NormMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormMethod::Exact2 => "exact2",
            NormMethod::Probe => "probe",
            NormMethod::Boyd => "boyd",
        })
    }
}

impl FromStr for NormMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact2" => Ok(Self::Exact2),
            "probe" => Ok(Self::Probe),
            "boyd" => Ok(Self::Boyd),
            other => Err(Error::UnknownName(other.to_string())),
        }
    }
}

impl NormMethod {
    /// `exact2` at `p = 2`, `boyd` otherwise.
    pub fn for_exponent(p: f64) -> Self {
        if p == 2.0 {
            Self::Exact2
        } else {
            Self::Boyd
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormOptions {
    pub seed: u64,
    /// Random members of the probe family.
    pub probes: usize,
    /// Random starts of the p-norm power method, besides the constant start.
    pub starts: usize,
    pub max_iter: usize,
    /// Lanczos stops once the Ritz error bound falls below `tol · θ`.
    pub tol: f64,
    pub max_krylov: usize,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self { seed: 0x5eed, probes: 24, starts: 4, max_iter: 100, tol: 1e-11, max_krylov: 800 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub method: NormMethod,
    /// Whether `value` is only known to be a lower bound.
    pub lower_bound: bool,
    pub iterations: usize,
    pub converged: bool,
}

/// `W = D_out T D_in^{-1}` on spectra, `D_t = diag ⟨k⟩^t`.
struct Weighted<'a> {
    op: &'a LatticeOperator,
    din_inv: Vec<f64>,
    dout: Vec<f64>,
}

impl<'a> Weighted<'a> {
    fn new(op: &'a LatticeOperator, s_in: f64, s_out: f64) -> Self {
        let grid = op.grid();
        let w = |t: f64| -> Vec<f64> { grid.frequencies().iter().map(|&k| bracket(k as f64).powf(t)).collect() };
        Self { op, din_inv: w(-s_in), dout: w(s_out) }
    }

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        let u: Vec<C64> = x.iter().zip(&self.din_inv).map(|(v, w)| v * w).collect();
        let mut y = self.op.apply_spectrum(&u);
        y.iter_mut().zip(&self.dout).for_each(|(v, w)| *v *= w);
        y
    }

    fn apply_adjoint(&self, y: &[C64]) -> Vec<C64> {
        let u: Vec<C64> = y.iter().zip(&self.dout).map(|(v, w)| v * w).collect();
        let mut x = self.op.apply_adjoint_spectrum(&u);
        x.iter_mut().zip(&self.din_inv).for_each(|(v, w)| *v *= w);
        x
    }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(u, v)| u.conj() * v).sum()
}

fn norm2(a: &[C64]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

fn random_vector(n: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

/// Number of eigenvalues of the symmetric tridiagonal `(α, β)` below `x` (Sturm count).
fn sturm_count(alpha: &[f64], beta: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for i in 0..alpha.len() {
        let b2 = if i == 0 { 0.0 } else { beta[i - 1] * beta[i - 1] };
        d = alpha[i] - x - if i == 0 { 0.0 } else { b2 / d };
        if d == 0.0 {
            d = -f64::EPSILON * (x.abs() + f64::MIN_POSITIVE);
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Solves `(T - λ) y = rhs` by Gaussian elimination with partial pivoting.
fn tridiagonal_solve(alpha: &[f64], beta: &[f64], lambda: f64, rhs: &mut [f64]) {
    let k = alpha.len();
    // Row i holds (diag, super, super-super) after pivoting.
    let mut rows: Vec<[f64; 3]> = (0..k).map(|i| [alpha[i] - lambda, if i + 1 < k { beta[i] } else { 0.0 }, 0.0]).collect();
    let mut sub: Vec<f64> = (0..k.saturating_sub(1)).map(|i| beta[i]).collect();
    let tiny = f64::EPSILON * alpha.iter().chain(beta).fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    for i in 0..k {
        if i + 1 < k && sub[i].abs() > rows[i][0].abs() {
            let next = [sub[i], rows[i + 1][0], rows[i + 1][1]];
            let cur = rows[i];
            rows[i] = next;
            rows[i + 1] = [cur[1], cur[2], 0.0];
            sub[i] = cur[0];
            rhs.swap(i, i + 1);
        }
        if rows[i][0].abs() < tiny {
            rows[i][0] = tiny;
        }
        if i + 1 < k {
            let f = sub[i] / rows[i][0];
            rows[i + 1][0] -= f * rows[i][1];
            rows[i + 1][1] -= f * rows[i][2];
            rhs[i + 1] -= f * rhs[i];
        }
    }
    for i in (0..k).rev() {
        let mut v = rhs[i];
        if i + 1 < k {
            v -= rows[i][1] * rhs[i + 1];
        }
        if i + 2 < k {
            v -= rows[i][2] * rhs[i + 2];
        }
        rhs[i] = v / rows[i][0];
    }
}

/// Largest eigenvalue of the symmetric tridiagonal `(α, β)` and the last component of its
/// unit eigenvector: bisection on the Sturm count, then inverse iteration.
fn top_ritz(alpha: &[f64], beta: &[f64]) -> (f64, f64) {
    let k = alpha.len();
    let radius = |i: usize| (if i > 0 { beta[i - 1].abs() } else { 0.0 }) + (if i + 1 < k { beta[i].abs() } else { 0.0 });
    let mut lo = (0..k).map(|i| alpha[i] - radius(i)).fold(f64::INFINITY, f64::min);
    let mut hi = (0..k).map(|i| alpha[i] + radius(i)).fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo).max(hi.abs()).max(f64::MIN_POSITIVE);
    lo -= 1e-15 * width;
    hi += 1e-15 * width;
    while hi - lo > 4.0 * f64::EPSILON * hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(alpha, beta, mid) == k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    let mut y = vec![1.0; k];
    for _ in 0..3 {
        tridiagonal_solve(alpha, beta, lambda, &mut y);
        let n = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(n.is_finite() && n > 0.0) {
            return (lambda, 1.0);
        }
        y.iter_mut().for_each(|v| *v /= n);
    }
    (lambda, y[k - 1])
}

fn lanczos_top(w: &Weighted, opts: &NormOptions) -> NormEstimate {
    let n = w.op.grid().size();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut q = random_vector(n, &mut rng);
    let nq = norm2(&q);
    q.iter_mut().for_each(|v| *v /= nq);
    let mut basis: Vec<Vec<C64>> = vec![q];
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    let max_k = opts.max_krylov.min(n).max(1);
    let mut theta = 0.0;
    let mut converged = false;
    for k in 0..max_k {
        let qk = &basis[k];
        let mut v = w.apply_adjoint(&w.apply(qk));
        alpha.push(dot(qk, &v).re);
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &v);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let bk = norm2(&v);
        let (t, last) = top_ritz(&alpha, &beta);
        theta = t.max(0.0);
        let bound = bk * last.abs();
        let scale = alpha.iter().cloned().fold(0.0, f64::max).max(theta);
        if bound <= opts.tol * theta || bk <= 1e-14 * scale || scale == 0.0 {
            converged = true;
            break;
        }
        if k + 1 == max_k {
            break;
        }
        beta.push(bk);
        v.iter_mut().for_each(|x| *x /= bk);
        basis.push(v);
    }
    NormEstimate { value: theta.sqrt(), method: NormMethod::Exact2, lower_bound: false, iterations: alpha.len(), converged }
}

fn lp_of(v: &[C64], p: f64) -> f64 {
    let peak = v.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    peak * v.iter().map(|x| (x.norm() / peak).powf(p)).sum::<f64>().powf(1.0 / p)
}

/// `|v|^{p-1} sgn v`, normalised to unit dual norm.
fn dual(v: &[C64], p: f64) -> Vec<C64> {
    let nv = lp_of(v, p);
    if nv == 0.0 {
        return vec![ZERO; v.len()];
    }
    v.iter()
        .map(|x| {
            let a = x.norm();
            if a == 0.0 {
                ZERO
            } else {
                x / a * (a / nv).powf(p - 1.0)
            }
        })
        .collect()
}

/// Higham's power method for `‖S‖_{p→p}`, `S = F^{-1} W F` in sample space, from one start.
fn boyd_from(w: &Weighted, p: f64, start: Vec<C64>, max_iter: usize) -> (f64, usize, bool) {
    let grid = w.op.grid();
    let q = p / (p - 1.0);
    let apply = |x: &[C64]| {
        let mut y = w.apply(&grid.forward(x));
        grid.inverse_in_place(&mut y);
        y
    };
    let apply_adj = |y: &[C64]| {
        let mut x = w.apply_adjoint(&grid.forward(y));
        grid.inverse_in_place(&mut x);
        x
    };
    let nx = lp_of(&start, p);
    if nx == 0.0 {
        return (0.0, 0, true);
    }
    let mut x: Vec<C64> = start.iter().map(|v| v / nx).collect();
    let mut best: f64 = 0.0;
    for it in 1..=max_iter {
        let y = apply(&x);
        let est = lp_of(&y, p);
        best = best.max(est);
        if est == 0.0 {
            return (best, it, true);
        }
        let z = apply_adj(&dual(&y, p));
        let zq = lp_of(&z, q);
        let zx = dot(&z, &x).re;
        if zq <= zx * (1.0 + 1e-13) {
            return (best, it, true);
        }
        x = dual(&z, q);
    }
    (best, max_iter, false)
}

/// Standard probe family: seeded random band-limited functions at every dyadic band,
/// modes `e^{±i2^j x}` with the constant, and the kernels `ψ_j(D)δ`.
pub fn probe_family(grid: &PeriodicGrid, seed: u64, count: usize) -> Result<Vec<GridFunction>> {
    let levels = grid.max_level();
    let mut out = Vec::new();
    for i in 0..count {
        let band = 1i64 << (i % (levels + 1));
        out.push(random_band_limited(grid, band.min(grid.max_frequency()), seed.wrapping_add(i as u64))?);
    }
    out.push(GridFunction::mode(grid, 0));
    for j in 0..levels {
        out.push(GridFunction::mode(grid, 1 << j));
        out.push(GridFunction::mode(grid, -(1i64 << j)));
    }
    out.push(GridFunction::mode(grid, grid.min_frequency()));
    let part = LPPartition::new(grid, Default::default());
    for j in 0..=levels {
        let block = part.block(j);
        out.push(GridFunction::from_spectrum(grid, block.iter().map(|&b| C64::new(b, 0.0)).collect())?);
    }
    Ok(out)
}

fn probe_norm(op: &LatticeOperator, s_in: f64, s_out: f64, p: f64, opts: &NormOptions) -> Result<NormEstimate> {
    let family = probe_family(op.grid(), opts.seed, opts.probes)?;
    let ratios = family
        .par_iter()
        .map(|f| {
            let den = sobolev_norm(f, s_in, p)?;
            if den == 0.0 {
                return Ok(0.0);
            }
            let out = GridFunction::from_spectrum(op.grid(), op.apply_spectrum(f.spectrum()))?;
            Ok(sobolev_norm(&out, s_out, p)? / den)
        })
        .collect::<Result<Vec<f64>>>()?;
    let value = ratios.into_iter().fold(0.0, f64::max);
    Ok(NormEstimate { value, method: NormMethod::Probe, lower_bound: true, iterations: family.len(), converged: true })
}

fn boyd_norm(op: &LatticeOperator, s_in: f64, s_out: f64, p: f64, opts: &NormOptions) -> Result<NormEstimate> {
    let w = Weighted::new(op, s_in, s_out);
    let grid = op.grid();
    let n = grid.size();
    let mut starts: Vec<Vec<C64>> = vec![vec![C64::new(1.0, 0.0); n]];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.starts {
        starts.push(random_vector(n, &mut rng));
    }
    // Best probe, moved into the weighted frame: sample-space vector of ⟨D⟩^{s_in} f.
    let probe_opts = NormOptions { probes: opts.probes.min(8), ..*opts };
    let family = probe_family(grid, probe_opts.seed, probe_opts.probes)?;
    let weighted_in: Vec<f64> = grid.frequencies().iter().map(|&k| bracket(k as f64).powf(s_in)).collect();
    let best_probe = family
        .iter()
        .map(|f| {
            let mut u: Vec<C64> = f.spectrum().iter().zip(&weighted_in).map(|(v, w)| v * w).collect();
            grid.inverse_in_place(&mut u);
            let ratio = lp_of(&{
                let mut y = w.apply(&grid.forward(&u));
                grid.inverse_in_place(&mut y);
                y
            }, p) / lp_of(&u, p).max(f64::MIN_POSITIVE);
            (ratio, u)
        })
        .max_by(|a, b| a.0.total_cmp(&b.0));
    if let Some((_, u)) = best_probe {
        starts.push(u);
    }
    let runs: Vec<(f64, usize, bool)> = starts.into_par_iter().map(|s| boyd_from(&w, p, s, opts.max_iter)).collect();
    let value = runs.iter().map(|r| r.0).fold(0.0, f64::max);
    let iterations = runs.iter().map(|r| r.1).sum();
    let converged = runs.iter().all(|r| r.2);
    Ok(NormEstimate { value, method: NormMethod::Boyd, lower_bound: true, iterations, converged })
}

/// `‖op‖_{H^{s_in,p} → H^{s_out,p}}` with diagnostics.
pub fn op_norm_estimate(op: &LatticeOperator, s_in: f64, s_out: f64, p: f64, method: NormMethod, opts: &NormOptions) -> Result<NormEstimate> {
    validate_exponent(p)?;
    match method {
        NormMethod::Exact2 => {
            if p != 2.0 {
                return Err(Error::MethodMismatch(format!("exact2 requires p = 2, got {p}")));
            }
            Ok(lanczos_top(&Weighted::new(op, s_in, s_out), opts))
        }
        NormMethod::Probe => probe_norm(op, s_in, s_out, p, opts),
        NormMethod::Boyd => boyd_norm(op, s_in, s_out, p, opts),
    }
}

pub fn op_norm(op: &LatticeOperator, s_in: f64, s_out: f64, p: f64, method: NormMethod) -> Result<f64> {
    Ok(op_norm_estimate(op, s_in, s_out, p, method, &NormOptions::default())?.value)
}

/// Per ε: `‖a_ε(x,D)‖_{H^{s+m,p} → H^{s,p}}`.
#[allow(clippy::too_many_arguments)]
pub fn blowup_sweep(
    a: &SampledSymbol,
    mol: &Mollifier,
    s: f64,
    p: f64,
    m: f64,
    eps_grid: &[f64],
    method: NormMethod,
    opts: &NormOptions,
) -> Result<SweepReport> {
    validate_eps_grid(eps_grid)?;
    validate_exponent(p)?;
    let values = eps_grid
        .par_iter()
        .map(|&e| op_norm_estimate(&quantize(&mollify_symbol(a, mol, e)?), s + m, s, p, method, opts).map(|n| n.value))
        .collect::<Result<Vec<_>>>()?;
    let meta = SweepMeta {
        label: format!("blowup:{}", a.provenance()),
        s: Some(s),
        p: Some(p),
        m: Some(m),
        r: a.regularity(),
        mollifier: Some(mol.name().into()),
        method: Some(method.to_string()),
        seed: Some(opts.seed),
        ..SweepMeta::default()
    };
    SweepReport::new(eps_grid.to_vec(), values, meta)
}

/// Result of the smoothness gate: measured `x`-derivative growth per `β`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessGate {
    pub delta: f64,
    /// `growth[β-1]`: fitted order of `∂^β_x a` minus the order of `a`, divided by `β`.
    pub growth: Vec<f64>,
    pub ok: bool,
}

pub const GATE_SLACK: f64 = 0.1;

/// `seminorm(a, 0, β)` finite and `∂^β_x a` of order at most `m + δβ` (up to [`GATE_SLACK`]) for `β ≤ depth`.
pub fn smoothness_gate(a: &SampledSymbol, delta: f64, depth: usize) -> Result<SmoothnessGate> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::OutOfRange { what: "delta", value: delta });
    }
    let mut growth = Vec::new();
    let mut ok = true;
    for beta in 1..=depth {
        let sn = seminorm(a, 0, beta)?;
        ok &= sn.is_finite();
        let d = x_derivative_symbol(a, beta)?;
        let g = (d.fitted_order() - a.order().max(0.0)).max(0.0) / beta as f64;
        ok &= g <= delta + GATE_SLACK;
        growth.push(g);
    }
    Ok(SmoothnessGate { delta, growth, ok })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformityEntry {
    pub s: f64,
    pub report: SweepReport,
    pub rate: Rate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformityReport {
    pub gate: SmoothnessGate,
    pub entries: Vec<UniformityEntry>,
}

/// Fitted rates of `‖a_ε(x,D)‖_{H^{s+m,p} → H^{s,p}}` for every `s`.
#[allow(clippy::too_many_arguments)]
pub fn uniformity_check(
    a_smooth: &SampledSymbol,
    mol: &Mollifier,
    s_list: &[f64],
    p: f64,
    m: f64,
    delta: f64,
    eps_grid: &[f64],
    opts: &NormOptions,
) -> Result<UniformityReport> {
    let gate = smoothness_gate(a_smooth, delta, crate::symbol::DEFAULT_DEPTH)?;
    if !gate.ok {
        return Err(Error::GateFailed(format!("x-derivative growth {:?} exceeds delta = {delta}", gate.growth)));
    }
    let method = NormMethod::for_exponent(p);
    let entries = s_list
        .iter()
        .map(|&s| {
            let report = blowup_sweep(a_smooth, mol, s, p, m, eps_grid, method, opts)?;
            let rate = fit_rate(&report, DEFAULT_TAIL.min(report.eps.len()))?;
            Ok(UniformityEntry { s, report, rate })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(UniformityReport { gate, entries })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpolationCheckResult {
    pub eps: f64,
    pub s0: f64,
    pub s1: f64,
    pub theta: f64,
    pub s: f64,
    pub omega0: f64,
    pub omega1: f64,
    pub mid: f64,
    pub ok: bool,
}

pub const INTERPOLATION_TOL: f64 = 1e-6;

pub type OperatorNet = Arc<dyn Fn(f64) -> Result<LatticeOperator> + Send + Sync>;

/// Per `(θ, ε)`: `ω_j = ‖T_ε‖_{H^{s_j,p}}`, `mid = ‖T_ε‖_{H^{s,p}}` at `s = (1-θ)s_0 + θs_1`.
pub fn interpolation_check(
    op_net: &OperatorNet,
    s0: f64,
    s1: f64,
    theta_list: &[f64],
    p: f64,
    eps_grid: &[f64],
    opts: &NormOptions,
) -> Result<Vec<InterpolationCheckResult>> {
    validate_eps_grid(eps_grid)?;
    if let Some(&t) = theta_list.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
        return Err(Error::OutOfRange { what: "theta", value: t });
    }
    let method = NormMethod::for_exponent(p);
    let per_eps = eps_grid
        .par_iter()
        .map(|&e| {
            let op = op_net(e)?;
            let norm = |s: f64| op_norm_estimate(&op, s, s, p, method, opts).map(|n| n.value);
            let (omega0, omega1) = (norm(s0)?, norm(s1)?);
            theta_list
                .iter()
                .map(|&theta| {
                    let s = (1.0 - theta) * s0 + theta * s1;
                    let mid = norm(s)?;
                    Ok(InterpolationCheckResult { eps: e, s0, s1, theta, s, omega0, omega1, mid, ok: mid <= omega0.max(omega1) * (1.0 + INTERPOLATION_TOL) })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_eps.into_iter().flatten().collect())
}

pub const BOUNDEDNESS_FACTOR: f64 = 3.0;

/// Ratios `‖a_ε(x,D)‖ / sup_{α+β ≤ N} |a_ε|_{α,β}` over ε.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeminormBoundReport {
    pub eps: Vec<f64>,
    pub norms: Vec<f64>,
    pub seminorms: Vec<f64>,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub median: f64,
    /// `max / median` over the whole grid.
    pub max_over_median: f64,
    /// `max / median` over the finer half of the grid.
    pub tail_max_over_median: f64,
    /// `tail_max_over_median < 3`: the ratios do not grow towards small ε.
    pub tail_bounded: bool,
    /// `max_over_median < 3`.
    pub pass: bool,
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// For `s = 0` the operator is `a_ε(x,D)` on `L^p`; otherwise the conjugate
/// `⟨D⟩^s ∘ a_ε(x,D) ∘ ⟨D⟩^{-s-m}` on `L^p`.
#[allow(clippy::too_many_arguments)]
pub fn seminorm_bound_check(
    net: &ModerateNet,
    p: f64,
    s: f64,
    m: f64,
    depth: usize,
    eps_grid: &[f64],
    opts: &NormOptions,
) -> Result<SeminormBoundReport> {
    validate_eps_grid(eps_grid)?;
    validate_exponent(p)?;
    if depth < 2 {
        return Err(Error::OutOfRange { what: "depth", value: depth as f64 });
    }
    let method = NormMethod::for_exponent(p);
    let rows = eps_grid
        .par_iter()
        .map(|&e| {
            let a = net.generate(e)?;
            let cached = net.eps.iter().position(|x| *x == e).filter(|_| depth <= net.depth).map(|i| {
                let t = &net.tables[i].table;
                (0..=depth).flat_map(|al| (0..=depth - al).map(move |be| (al, be))).map(|(al, be)| t[al][be]).fold(0.0, f64::max)
            });
            let sn = match cached {
                Some(v) => v,
                None => seminorm_sup(&a, depth)?,
            };
            if sn == 0.0 {
                return Err(Error::ZeroSeminorm(e));
            }
            let op = quantize(&a);
            let op = if s == 0.0 && m == 0.0 {
                op
            } else {
                compose(&[LatticeOperator::bracket_power(a.grid(), s), op, LatticeOperator::bracket_power(a.grid(), -s - m)])?
            };
            let norm = op_norm_estimate(&op, 0.0, 0.0, p, method, opts)?.value;
            Ok((norm, sn))
        })
        .collect::<Result<Vec<_>>>()?;
    let norms: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let seminorms: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let ratios: Vec<f64> = rows.iter().map(|r| r.0 / r.1).collect();
    let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    let med = median(&ratios);
    let tail = &ratios[ratios.len() / 2..];
    let tail_max = tail.iter().cloned().fold(0.0, f64::max);
    let tail_max_over_median = tail_max / med;
    Ok(SeminormBoundReport {
        eps: eps_grid.to_vec(),
        norms,
        seminorms,
        ratios,
        max_ratio,
        median: med,
        max_over_median: max_ratio / med,
        tail_max_over_median,
        tail_bounded: tail_max_over_median < BOUNDEDNESS_FACTOR,
        pass: max_ratio / med < BOUNDEDNESS_FACTOR,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::symbol_from_text;
    use crate::grid::make_grid;
    use crate::quantizer::quantize_dense;
    use nalgebra::{DMatrix, SymmetricEigen};
    use rand::Rng;

    fn svd_top(op: &LatticeOperator, s_in: f64, s_out: f64) -> f64 {
        let grid = op.grid();
        let n = grid.size();
        let t = op.to_dense();
        let f = grid.frequencies();
        let m = DMatrix::from_fn(n, n, |l, k| {
            let v = t[l * n + k] * bracket(f[l] as f64).powf(s_out) * bracket(f[k] as f64).powf(-s_in);
            nalgebra::Complex::new(v.re, v.im)
        });
        m.singular_values().max()
    }

    #[test]
    fn top_ritz_matches_dense_eigensolver() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in [1usize, 2, 5, 17, 60] {
            for case in 0..4 {
                let alpha: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..4.0)).collect();
                let beta: Vec<f64> = (0..k.saturating_sub(1)).map(|i| if case == 3 && i % 3 == 0 { 1e-300 } else { rng.gen_range(0.0..1.0) }).collect();
                let t = DMatrix::from_fn(k, k, |i, j| if i == j { alpha[i] } else if i + 1 == j { beta[i] } else if j + 1 == i { beta[j] } else { 0.0 });
                let eig = SymmetricEigen::new(t);
                let top = eig.eigenvalues.imax();
                let (lambda, last) = top_ritz(&alpha, &beta);
                assert!((lambda - eig.eigenvalues[top]).abs() < 1e-13 * lambda.abs().max(1.0), "k={k}");
                if case < 3 {
                    assert!((last.abs() - eig.eigenvectors[(k - 1, top)].abs()).abs() < 1e-8, "k={k}");
                }
            }
        }
    }

    #[test]
    fn trivial_norms() {
        let g = make_grid(64).unwrap();
        let id = LatticeOperator::identity(&g);
        for s in [-1.0, 0.0, 2.5] {
            assert!((op_norm(&id, s, s, 2.0, NormMethod::Exact2).unwrap() - 1.0).abs() < 1e-12);
        }
        let inv = LatticeOperator::bracket_power(&g, -1.0);
        assert!((op_norm(&inv, 0.7, 0.7, 2.0, NormMethod::Exact2).unwrap() - 1.0).abs() < 1e-12);
        let two = quantize(&symbol_from_text("2", &g, 0.0).unwrap());
        assert!((op_norm(&two, 0.0, 0.0, 2.0, NormMethod::Exact2).unwrap() - 2.0).abs() < 1e-12);
        assert!(matches!(op_norm(&two, 0.0, 0.0, 3.0, NormMethod::Exact2), Err(Error::MethodMismatch(_))));
        assert!(op_norm(&two, 0.0, 0.0, 1.0, NormMethod::Boyd).is_err());
        for p in [1.5, 2.0, 3.0] {
            assert!((op_norm(&two, 0.0, 0.0, p, NormMethod::Boyd).unwrap() - 2.0).abs() < 1e-12);
            assert!((op_norm(&id, 1.0, 1.0, p, NormMethod::Probe).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn exact2_matches_full_svd() {
        let g = make_grid(64).unwrap();
        for (text, m) in [("sin(x*xi/4) + cos(2*x)*jb(xi)", 1.0), ("weier(0.5, x)*chi(xi/8)", 0.0), ("exp(sin(x))*psi(2, xi) + 1", 0.0)] {
            let a = symbol_from_text(text, &g, m).unwrap();
            for op in [quantize(&a), quantize_dense(&a)] {
                for (s_in, s_out) in [(0.0, 0.0), (1.0 + m, 1.0), (-0.5 + m, -0.5)] {
                    let est = op_norm_estimate(&op, s_in, s_out, 2.0, NormMethod::Exact2, &NormOptions::default()).unwrap();
                    let want = svd_top(&op, s_in, s_out);
                    assert!(est.converged);
                    assert!((est.value - want).abs() <= 1e-10 * want, "{text}: {} vs {want}", est.value);
                }
            }
        }
    }

    #[test]
    fn probe_and_boyd_bracket_exact2() {
        let g = make_grid(64).unwrap();
        for text in ["sin(x*xi/4) + cos(2*x)", "weier(0.5, x)*chi(xi/8)", "exp(sin(x))*psi(2, xi) + 1"] {
            let op = quantize(&symbol_from_text(text, &g, 0.0).unwrap());
            let exact = op_norm(&op, 0.5, 0.5, 2.0, NormMethod::Exact2).unwrap();
            let probe = op_norm(&op, 0.5, 0.5, 2.0, NormMethod::Probe).unwrap();
            let boyd = op_norm(&op, 0.5, 0.5, 2.0, NormMethod::Boyd).unwrap();
            assert!(probe <= exact * (1.0 + 1e-10) && exact <= 10.0 * probe, "{text}");
            assert!((boyd - exact).abs() <= 0.01 * exact, "{text}: {boyd} vs {exact}");
            for p in [1.5, 3.0] {
                let b = op_norm(&op, 0.0, 0.0, p, NormMethod::Boyd).unwrap();
                let pr = op_norm(&op, 0.0, 0.0, p, NormMethod::Probe).unwrap();
                assert!(b >= pr * (1.0 - 1e-12), "{text} p={p}: {b} < {pr}");
            }
        }
    }

    #[test]
    fn boyd_on_multiplication_is_sup_norm() {
        let g = make_grid(128).unwrap();
        let a = symbol_from_text("1 + sin(x)/2", &g, 0.0).unwrap();
        for p in [1.5, 3.0] {
            let b = op_norm(&quantize(&a), 0.0, 0.0, p, NormMethod::Boyd).unwrap();
            assert!(b <= 1.5 + 1e-12 && b > 1.4, "p={p}: {b}");
        }
    }

    #[test]
    fn blowup_sweep_trivial_and_deterministic() {
        let g = make_grid(64).unwrap();
        let one = crate::symbol::builtin(&crate::symbol::Builtin::One, &g).unwrap();
        let eps = crate::sweep::dyadic_eps(3, 8);
        let rep = blowup_sweep(&one, &Mollifier::gaussian(), 1.0, 2.0, 0.0, &eps, NormMethod::Exact2, &NormOptions::default()).unwrap();
        assert!(rep.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(fit_rate(&rep, 6).unwrap().slope().unwrap().abs() < 1e-10);
        let w = crate::symbol::builtin(&crate::symbol::Builtin::Weierstrass(0.5), &g).unwrap();
        let a = blowup_sweep(&w, &Mollifier::gaussian(), 0.8, 3.0, 0.0, &eps, NormMethod::Boyd, &NormOptions::default()).unwrap();
        let b = blowup_sweep(&w, &Mollifier::gaussian(), 0.8, 3.0, 0.0, &eps, NormMethod::Boyd, &NormOptions::default()).unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn interpolation_trivial_cases() {
        let g = make_grid(64).unwrap();
        let gg = g.clone();
        let three: OperatorNet = Arc::new(move |_| Ok(quantize(&symbol_from_text("3", &gg, 0.0)?)));
        let gg = g.clone();
        let inv: OperatorNet = Arc::new(move |_| Ok(LatticeOperator::bracket_power(&gg, -1.0)));
        let eps = [0.5, 0.25];
        for (net, want) in [(three, 3.0), (inv, 1.0)] {
            for r in interpolation_check(&net, 0.2, 2.0, &[0.25, 0.5, 0.75], 2.0, &eps, &NormOptions::default()).unwrap() {
                assert!(r.ok);
                for v in [r.omega0, r.omega1, r.mid] {
                    assert!((v - want).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn seminorm_bound_trivial_net() {
        let g = make_grid(64).unwrap();
        let gen: crate::symbol::SymbolGenerator = Arc::new(move |_| crate::symbol::builtin(&crate::symbol::Builtin::One, &g));
        let eps = crate::sweep::dyadic_eps(3, 7);
        let net = crate::symbol::moderate_net(gen, &eps, 4).unwrap();
        for p in [1.5, 2.0, 3.0] {
            let rep = seminorm_bound_check(&net, p, 0.0, 0.0, 4, &eps, &NormOptions::default()).unwrap();
            assert!(rep.ratios.iter().all(|r| (r - 1.0).abs() < 1e-10));
            assert!(rep.pass);
        }
    }

    #[test]
    fn smoothness_gate_flags_growth() {
        let g = make_grid(128).unwrap();
        let smooth = crate::symbol::builtin(&crate::symbol::Builtin::SmoothS0, &g).unwrap();
        assert!(smoothness_gate(&smooth, 0.0, 4).unwrap().ok);
        // sin(x ξ) has ∂_x growth of order 1 in ξ.
        let rough = symbol_from_text("sin(x*xi)", &g, 0.0).unwrap();
        let gate = smoothness_gate(&rough, 0.5, 2).unwrap();
        assert!(!gate.ok, "{:?}", gate.growth);
    }
}
