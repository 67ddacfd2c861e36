//! Elementary symbols `Σ_k A_k(x) φ_k(ξ)`, the decomposition of an order-0
//! symbol into them, and the three-band splitting of a mollified elementary symbol.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{op_norm_estimate, NormMethod, NormOptions};
use crate::grid::{sup_norm, validate_exponent, GridFunction, PeriodicGrid, C64};
use crate::lp::{besov_norm, bracket, LPPartition};
use crate::mollifier::{regularize, validate_eps, Mollifier};
use crate::quantizer::quantize;
use crate::symbol::{Provenance, SampledSymbol, SeparableTerm};
use crate::sweep::{fit_rate, validate_eps_grid, Rate, SweepMeta, SweepReport, DEFAULT_TAIL};

const ZERO: C64 = C64::new(0.0, 0.0);

/// `Σ_k A_k(x) φ_k(ξ)` for `k = 0, …, J`; profiles are FFT-ordered lattice samples.
#[derive(Clone, Debug)]
pub struct ElementarySymbol {
    grid: PeriodicGrid,
    coefficients: Vec<GridFunction>,
    profiles: Vec<Vec<C64>>,
    r: f64,
}

fn partition_profiles(partition: &LPPartition) -> Vec<Vec<C64>> {
    (0..=partition.levels()).map(|k| partition.block(k).iter().map(|&v| C64::new(v, 0.0)).collect()).collect()
}

impl ElementarySymbol {
    /// Profiles `φ_k = ψ_k` of the partition.
    pub fn new(coefficients: Vec<GridFunction>, partition: &LPPartition, r: f64) -> Result<Self> {
        Self::with_profiles(coefficients, partition_profiles(partition), r)
    }

    /// `A_k = g` for every `k`, i.e. the multiplication symbol `g(x)`.
    pub fn from_function(g: &GridFunction, partition: &LPPartition, r: f64) -> Result<Self> {
        Self::new(vec![g.clone(); partition.levels() + 1], partition, r)
    }

    /// Rejects profiles supported outside `2^{k-1} ≤ |ξ| ≤ 2^{k+1}` (outside `|ξ| ≤ 2` for `k = 0`).
    pub fn with_profiles(coefficients: Vec<GridFunction>, profiles: Vec<Vec<C64>>, r: f64) -> Result<Self> {
        let first = coefficients.first().ok_or_else(|| Error::Invalid("no coefficients".into()))?;
        let grid = first.grid().clone();
        let levels = grid.max_level();
        if coefficients.len() != levels + 1 || profiles.len() != levels + 1 {
            return Err(Error::LengthMismatch { expected: levels + 1, got: coefficients.len().min(profiles.len()) });
        }
        for (k, (c, prof)) in coefficients.iter().zip(&profiles).enumerate() {
            grid.check_same(c.grid())?;
            if prof.len() != grid.size() {
                return Err(Error::LengthMismatch { expected: grid.size(), got: prof.len() });
            }
            let (lo, hi) = if k == 0 { (0.0, 2.0) } else { ((k as f64 - 1.0).exp2(), (k as f64 + 1.0).exp2()) };
            for (i, v) in prof.iter().enumerate() {
                let xi = grid.frequency(i);
                let a = xi.abs() as f64;
                if *v != ZERO && (a < lo || a > hi) {
                    return Err(Error::SupportViolation { block: k, freq: xi, bound: if a < lo { lo } else { hi } });
                }
            }
        }
        Ok(Self { grid, coefficients, profiles, r })
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn coefficients(&self) -> &[GridFunction] {
        &self.coefficients
    }

    pub fn profiles(&self) -> &[Vec<C64>] {
        &self.profiles
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// The sampled symbol, kept in separable form.
    pub fn assemble(&self) -> Result<SampledSymbol> {
        let terms = self
            .coefficients
            .iter()
            .zip(&self.profiles)
            .map(|(c, p)| SeparableTerm { x: c.clone(), xi: p.clone() })
            .collect();
        Ok(SampledSymbol::from_terms(&self.grid, terms, 0.0, Provenance::Derived("elementary".into()))?.with_regularity(self.r))
    }

    /// Smallest `C` with `‖A_k‖_∞ ≤ C` and `‖A_k‖_{C^r_∗} ≤ C 2^{kr}` for all `k`.
    pub fn constant(&self, partition: &LPPartition) -> Result<f64> {
        let mut c: f64 = 0.0;
        for (k, a) in self.coefficients.iter().enumerate() {
            c = c.max(sup_norm(a)).max(besov_norm(a, self.r, partition)? / (k as f64 * self.r).exp2());
        }
        Ok(c)
    }
}

/// `1 - T_16(4 sin²(πη/8) - 1) / T_16(3)`: a trigonometric polynomial of degree 16 in
/// `πη/4`, equal to 1 up to `1/T_16(3) ≈ 1.1e-12` on `|η| ≤ 2` and vanishing at `η = ±4`.
pub fn block_window(eta: f64) -> f64 {
    let t16 = |x: f64| if x.abs() <= 1.0 { (16.0 * x.acos()).cos() } else { (16.0 * x.acosh()).cosh() };
    let s = (PI * eta / 8.0).sin();
    1.0 - t16(4.0 * s * s - 1.0) / t16(3.0)
}

pub const DEFAULT_M0: i32 = 4;

/// `c_ν = ⟨ν⟩^{-M₀}`.
pub fn weight(nu: i64, m0: i32) -> f64 {
    (1.0 + (nu * nu) as f64).powf(-(m0 as f64) / 2.0)
}

/// `a = Σ_{|ν| ≤ V} c_ν Σ_k a_k^ν(x) φ_k^ν(ξ)` with `φ_k^ν(ξ) = e^{iπν2^{-k}ξ/4} ψ_k(ξ)`.
#[derive(Clone, Debug)]
pub struct ElementaryDecomposition {
    pub v: usize,
    pub m0: i32,
    /// `c_nu[ν + V]`.
    pub c_nu: Vec<f64>,
    /// `symbols[ν + V]` carries `a_k^ν` and `φ_k^ν`.
    pub symbols: Vec<ElementarySymbol>,
    pub residual: f64,
    /// `max_{k,ν} ‖a_k^ν‖_∞`.
    pub sup_akv: f64,
}

impl ElementaryDecomposition {
    pub fn nus(&self) -> impl Iterator<Item = i64> {
        let v = self.v as i64;
        -v..=v
    }
}

const SPAN_TOL: f64 = 1e-13;

/// `c_k` with `h = Σ_k c_k ψ_k` on the lattice, if `h` lies in the span of the blocks.
/// Uses `ψ_0(0) = 1` and `ψ_k(-2^k) = δ_{jk}` for the other blocks `j`.
pub fn block_expansion(h: &[C64], partition: &LPPartition) -> Option<Vec<C64>> {
    let grid = partition.grid();
    let c: Vec<C64> = (0..=partition.levels()).map(|k| h[grid.index(if k == 0 { 0 } else { -(1i64 << k) })]).collect();
    let scale = h.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let blocks: Vec<&[f64]> = (0..=partition.levels()).map(|k| partition.block(k)).collect();
    h.iter()
        .enumerate()
        .all(|(i, hv)| {
            let rec: C64 = c.iter().zip(&blocks).map(|(ck, b)| ck * b[i]).sum();
            (rec - hv).norm() <= SPAN_TOL * scale
        })
        .then_some(c)
}

/// Fourier coefficients of the windowed blocks of `a`, `d[k][ν + V]` as x-samples.
fn windowed_coefficients(a: &SampledSymbol, v: usize, partition: &LPPartition) -> Vec<Vec<Vec<C64>>> {
    let grid = a.grid();
    let n = grid.size();
    let (kmin, kmax) = (grid.min_frequency(), grid.max_frequency());
    let vi = v as i64;
    (0..=partition.levels())
        .into_par_iter()
        .map(|k| {
            let block = partition.block(k);
            let support: Vec<i64> = (0..n).filter(|&i| block[i] != 0.0).map(|i| grid.frequency(i)).collect();
            let mut coef = vec![vec![ZERO; n]; 2 * v + 1];
            let Some(&s0) = support.first() else {
                return coef;
            };
            if support.iter().all(|&xi| a.column(xi) == a.column(s0)) {
                coef[v] = a.column(s0).to_vec();
                return coef;
            }
            let m = 8usize << k;
            let half = (m / 2) as i64;
            let fft = FftPlanner::new().plan_fft_forward(m);
            let scale = (k as f64).exp2();
            let window: Vec<f64> = (0..m).map(|t| block_window((t as i64 - half) as f64 / scale)).collect();
            // Modes of a period-M lattice series: ν ∈ [-M/2, M/2], with the Nyquist mode split evenly.
            let modes: Vec<(i64, f64)> = (-vi..=vi)
                .filter(|nu| nu.abs() <= half)
                .map(|nu| (nu, if nu.abs() == half { 0.5 } else { 1.0 }))
                .collect();
            let mut row = vec![ZERO; m];
            for j in 0..n {
                for (t, slot) in row.iter_mut().enumerate() {
                    let xi = (t as i64 - half).clamp(kmin, kmax);
                    *slot = a.value(j, xi) * window[t];
                }
                fft.process(&mut row);
                for &(nu, w) in &modes {
                    let idx = nu.rem_euclid(m as i64) as usize;
                    let sign = if nu % 2 == 0 { 1.0 } else { -1.0 };
                    coef[(nu + vi) as usize][j] = row[idx] * (w * sign / m as f64);
                }
            }
            coef
        })
        .collect()
}

/// Splits `a` into elementary pieces indexed by `ν`. Separable terms whose `ξ`-factor lies in
/// the span of the blocks are rewritten as `Σ_k c_k g(x) ψ_k(ξ)` and land in `ν = 0`. Every
/// other block `a(x,ξ)ψ_k(ξ)` is expanded in a Fourier series in `η = 2^{-k}ξ` of period 8:
/// a block on which `a` does not vary in `ξ` is taken as is, otherwise `a` is extended
/// outside the lattice by its edge values and multiplied by [`block_window`].
pub fn decompose(a: &SampledSymbol, r: f64, v: usize, m0: i32, partition: &LPPartition) -> Result<ElementaryDecomposition> {
    let grid = a.grid();
    grid.check_same(partition.grid())?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::OutOfRange { what: "r", value: r });
    }
    if v < 1 {
        return Err(Error::OutOfRange { what: "nu_max", value: v as f64 });
    }
    let order = a.fitted_order();
    if order > 0.1 {
        return Err(Error::NotOrderZero(order));
    }
    let n = grid.size();
    let levels = partition.levels();
    let vi = v as i64;
    let mut direct = vec![vec![ZERO; n]; levels + 1];
    let general = match a.terms() {
        Some(terms) => {
            let mut rest = Vec::new();
            for term in terms {
                match block_expansion(&term.xi, partition) {
                    Some(c) => {
                        for (dk, ck) in direct.iter_mut().zip(&c) {
                            dk.iter_mut().zip(term.x.samples()).for_each(|(o, g)| *o += g * ck);
                        }
                    }
                    None => rest.push(term.clone()),
                }
            }
            if rest.is_empty() {
                None
            } else if rest.len() == terms.len() {
                Some(a.clone())
            } else {
                Some(SampledSymbol::from_terms(grid, rest, a.order(), a.provenance().clone())?)
            }
        }
        None => Some(a.clone()),
    };
    let mut d = match &general {
        Some(g) => windowed_coefficients(g, v, partition),
        None => vec![vec![vec![ZERO; n]; 2 * v + 1]; levels + 1],
    };
    for (dk, direct_k) in d.iter_mut().zip(&direct) {
        dk[v].iter_mut().zip(direct_k).for_each(|(o, c)| *o += c);
    }
    let c_nu: Vec<f64> = (-vi..=vi).map(|nu| weight(nu, m0)).collect();
    let mut sup_akv: f64 = 0.0;
    let mut symbols = Vec::with_capacity(2 * v + 1);
    for nu in -vi..=vi {
        let idx = (nu + vi) as usize;
        let mut coefficients = Vec::with_capacity(levels + 1);
        let mut profiles = Vec::with_capacity(levels + 1);
        for (k, dk) in d.iter().enumerate() {
            let samples: Vec<C64> = dk[idx].iter().map(|z| z / c_nu[idx]).collect();
            sup_akv = sup_akv.max(samples.iter().map(|z| z.norm()).fold(0.0, f64::max));
            coefficients.push(GridFunction::from_samples(grid, samples)?);
            let m = (8usize << k) as f64;
            let block = partition.block(k);
            profiles.push(
                (0..n).map(|i| if block[i] == 0.0 { ZERO } else { C64::from_polar(block[i], 2.0 * PI * nu as f64 * grid.frequency(i) as f64 / m) }).collect(),
            );
        }
        symbols.push(ElementarySymbol::with_profiles(coefficients, profiles, r)?);
    }
    let residual = (0..n)
        .into_par_iter()
        .map(|i| {
            let target = a.column_at(i);
            let mut rec = vec![ZERO; n];
            for (idx, sym) in symbols.iter().enumerate() {
                for (coef, prof) in sym.coefficients.iter().zip(&sym.profiles) {
                    let w = prof[i] * c_nu[idx];
                    if w != ZERO {
                        rec.iter_mut().zip(coef.samples()).for_each(|(r, c)| *r += c * w);
                    }
                }
            }
            rec.iter().zip(target).map(|(u, t)| (u - t).norm()).fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(ElementaryDecomposition { v, m0, c_nu, symbols, residual, sup_akv })
}

/// `a(x,ξ)⟨ξ⟩^{-m}`, the symbol of `a(x,D)⟨D⟩^{-m}`, keeping any separable expansion.
pub fn reduce_order(a: &SampledSymbol, m: f64) -> Result<SampledSymbol> {
    if !m.is_finite() {
        return Err(Error::OutOfRange { what: "m", value: m });
    }
    let grid = a.grid();
    let n = grid.size();
    let w: Vec<f64> = (0..n).map(|i| bracket(grid.frequency(i) as f64).powf(-m)).collect();
    let provenance = Provenance::Derived(format!("{}*<xi>^{}", a.provenance(), -m));
    let out = match a.terms() {
        Some(terms) => {
            let terms = terms
                .iter()
                .map(|t| SeparableTerm { x: t.x.clone(), xi: t.xi.iter().zip(&w).map(|(h, w)| h * w).collect() })
                .collect();
            SampledSymbol::from_terms(grid, terms, a.order() - m, provenance)?
        }
        None => {
            let values = a.values().chunks(n).zip(&w).flat_map(|(col, w)| col.iter().map(move |v| v * w)).collect();
            SampledSymbol::from_values(grid, values, a.order() - m, provenance)?
        }
    };
    Ok(match a.regularity() {
        Some(r) => out.with_regularity(r),
        None => out,
    })
}

/// `a_{1,ε} + a_{2,ε} + a_{3,ε}`: the blocks `A_{kj,ε} = ψ_j(D)(A_k ∗ ρ_ε)` grouped by
/// `j ≤ k-4`, `|j - k| ≤ 3` and `j ≥ k+4`.
#[derive(Clone, Debug)]
pub struct SplitSymbol {
    pub low: SampledSymbol,
    pub diagonal: SampledSymbol,
    pub high: SampledSymbol,
}

pub const LOW_BAND_GAP: i64 = 4;
pub const DIAGONAL_HALF_WIDTH: i64 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    Low,
    Diagonal,
    High,
}

/// Band of the coefficient block `j` in the frequency block `k`.
pub fn band(j: usize, k: usize) -> Band {
    let d = j as i64 - k as i64;
    if d <= -LOW_BAND_GAP {
        Band::Low
    } else if d >= LOW_BAND_GAP {
        Band::High
    } else {
        Band::Diagonal
    }
}

impl SplitSymbol {
    pub fn parts(&self) -> [&SampledSymbol; 3] {
        [&self.low, &self.diagonal, &self.high]
    }

    pub fn sum(&self) -> Result<SampledSymbol> {
        self.low.add(&self.diagonal)?.add(&self.high)
    }
}

pub fn split(e: &ElementarySymbol, mol: &Mollifier, eps: f64, partition: &LPPartition) -> Result<SplitSymbol> {
    validate_eps(eps)?;
    e.grid.check_same(partition.grid())?;
    let grid = &e.grid;
    let levels = partition.levels();
    let mut bands: [Vec<SeparableTerm>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (k, (a, prof)) in e.coefficients.iter().zip(&e.profiles).enumerate() {
        let ak = regularize(a, mol, eps)?;
        let mut parts = [vec![ZERO; grid.size()], vec![ZERO; grid.size()], vec![ZERO; grid.size()]];
        for j in 0..=levels {
            let slot = match band(j, k) {
                Band::Low => 0,
                Band::Diagonal => 1,
                Band::High => 2,
            };
            let block = partition.block(j);
            parts[slot].iter_mut().zip(ak.spectrum()).zip(block).for_each(|((o, c), w)| *o += c * w);
        }
        for (slot, spec) in parts.into_iter().enumerate() {
            bands[slot].push(SeparableTerm { x: GridFunction::from_spectrum(grid, spec)?, xi: prof.clone() });
        }
    }
    let prov = |name: &str| Provenance::Derived(format!("{name}(eps={eps})"));
    let [low, diagonal, high] = bands;
    Ok(SplitSymbol {
        low: SampledSymbol::from_terms(grid, low, 0.0, prov("low"))?,
        diagonal: SampledSymbol::from_terms(grid, diagonal, 0.0, prov("diagonal"))?,
        high: SampledSymbol::from_terms(grid, high, 0.0, prov("high"))?,
    })
}

/// `Σ_ν c_ν` of the splits of every elementary piece.
pub fn split_decomposition(dec: &ElementaryDecomposition, mol: &Mollifier, eps: f64, partition: &LPPartition) -> Result<SplitSymbol> {
    let mut acc: Option<SplitSymbol> = None;
    for (sym, c) in dec.symbols.iter().zip(&dec.c_nu) {
        let s = split(sym, mol, eps, partition)?;
        let w = C64::new(*c, 0.0);
        let scaled = SplitSymbol { low: s.low.scale(w), diagonal: s.diagonal.scale(w), high: s.high.scale(w) };
        acc = Some(match acc {
            None => scaled,
            Some(a) => SplitSymbol { low: a.low.add(&scaled.low)?, diagonal: a.diagonal.add(&scaled.diagonal)?, high: a.high.add(&scaled.high)? },
        });
    }
    acc.ok_or_else(|| Error::Invalid("empty decomposition".into()))
}

/// Three sweeps of `‖a_{i,ε}(x,D)‖_{H^{s,p} → H^{s,p}}` and their fitted rates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThreePartReport {
    pub reports: [SweepReport; 3],
    pub rates: [Rate; 3],
}

#[allow(clippy::too_many_arguments)]
fn three_part_with(
    splitter: impl Fn(f64) -> Result<SplitSymbol> + Sync,
    r: f64,
    s: f64,
    p: f64,
    h: f64,
    mol: &Mollifier,
    eps_grid: &[f64],
    opts: &NormOptions,
) -> Result<ThreePartReport> {
    if !(r > 0.0) {
        return Err(Error::OutOfRange { what: "r", value: r });
    }
    if !(s > 0.0) {
        return Err(Error::OutOfRange { what: "s", value: s });
    }
    validate_exponent(p)?;
    validate_eps_grid(eps_grid)?;
    let method = NormMethod::for_exponent(p);
    let rows = eps_grid
        .par_iter()
        .map(|&e| {
            let sp = splitter(e)?;
            let mut out = [0.0; 3];
            for (slot, part) in sp.parts().into_iter().enumerate() {
                out[slot] = op_norm_estimate(&quantize(part), s, s, p, method, opts)?.value;
            }
            Ok(out)
        })
        .collect::<Result<Vec<[f64; 3]>>>()?;
    let labels = ["low", "diagonal", "high"];
    let mut reports = Vec::with_capacity(3);
    for (slot, label) in labels.iter().enumerate() {
        let meta = SweepMeta {
            label: format!("three-part:{label}"),
            s: Some(s),
            p: Some(p),
            r: Some(r),
            h: Some(h),
            mollifier: Some(mol.name().into()),
            method: Some(method.to_string()),
            seed: Some(opts.seed),
            ..SweepMeta::default()
        };
        reports.push(SweepReport::new(eps_grid.to_vec(), rows.iter().map(|row| row[slot]).collect(), meta)?);
    }
    let tail = DEFAULT_TAIL.min(eps_grid.len());
    let rates = [fit_rate(&reports[0], tail)?, fit_rate(&reports[1], tail)?, fit_rate(&reports[2], tail)?];
    let reports: [SweepReport; 3] = reports.try_into().expect("three reports");
    Ok(ThreePartReport { reports, rates })
}

#[allow(clippy::too_many_arguments)]
pub fn three_part_sweep(
    e: &ElementarySymbol,
    mol: &Mollifier,
    s: f64,
    p: f64,
    h: f64,
    eps_grid: &[f64],
    partition: &LPPartition,
    opts: &NormOptions,
) -> Result<ThreePartReport> {
    three_part_with(|eps| split(e, mol, eps, partition), e.r, s, p, h, mol, eps_grid, opts)
}

#[allow(clippy::too_many_arguments)]
pub fn three_part_sweep_decomposition(
    dec: &ElementaryDecomposition,
    mol: &Mollifier,
    s: f64,
    p: f64,
    h: f64,
    eps_grid: &[f64],
    partition: &LPPartition,
    opts: &NormOptions,
) -> Result<ThreePartReport> {
    let r = dec.symbols.first().map(|e| e.r).unwrap_or(0.0);
    three_part_with(|eps| split_decomposition(dec, mol, eps, partition), r, s, p, h, mol, eps_grid, opts)
}

/// Measured constants of the coefficient estimates
/// `‖A_{k,ε}‖_∞ ≤ C`, `‖A_{k,ε}‖_{C^{r+h}_∗} ≤ C' ε^{-h} 2^{kr}`, `‖ψ_j(D)A_{k,ε}‖_∞ ≤ C'' 2^{-j(r+h)} 2^{kr} ε^{-h}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreliminaryConstants {
    pub r: f64,
    pub h: f64,
    /// Elementary constant of the unmollified coefficients.
    pub c: f64,
    /// `max_{k,ε} ‖A_{k,ε}‖_∞`.
    pub sup: f64,
    pub c_prime: f64,
    pub c_double_prime: f64,
}

pub fn preliminary_constants(e: &ElementarySymbol, mol: &Mollifier, h: f64, eps_grid: &[f64], partition: &LPPartition) -> Result<PreliminaryConstants> {
    validate_eps_grid(eps_grid)?;
    if !(h >= 0.0) {
        return Err(Error::OutOfRange { what: "h", value: h });
    }
    let r = e.r;
    let c = e.constant(partition)?;
    let rows = eps_grid
        .par_iter()
        .map(|&eps| {
            let (mut sup, mut cp, mut cpp): (f64, f64, f64) = (0.0, 0.0, 0.0);
            for (k, a) in e.coefficients.iter().enumerate() {
                let ak = regularize(a, mol, eps)?;
                let grow = (k as f64 * r).exp2();
                sup = sup.max(sup_norm(&ak));
                cp = cp.max(besov_norm(&ak, r + h, partition)? * eps.powf(h) / grow);
                for j in 0..=partition.levels() {
                    let b = sup_norm(&partition.apply_block(&ak, j)?);
                    cpp = cpp.max(b * (j as f64 * (r + h)).exp2() * eps.powf(h) / grow);
                }
            }
            Ok((sup, cp, cpp))
        })
        .collect::<Result<Vec<_>>>()?;
    let fold = |f: fn(&(f64, f64, f64)) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    Ok(PreliminaryConstants { r, h, c, sup: fold(|t| t.0), c_prime: fold(|t| t.1), c_double_prime: fold(|t| t.2) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::symbol_from_text;
    use crate::grid::make_grid;
    use crate::lp::{make_partition, CutoffProfile};
    use crate::quantizer::{apply, compose, LatticeOperator};
    use crate::symbol::{builtin, mollify_symbol, weierstrass, Builtin};
    use crate::sweep::dyadic_eps;

    fn setup(n: usize) -> (PeriodicGrid, LPPartition) {
        let g = make_grid(n).unwrap();
        let p = make_partition(&g, CutoffProfile::default());
        (g, p)
    }

    #[test]
    fn window_properties() {
        for i in 0..=200 {
            let eta = -2.0 + 4.0 * i as f64 / 200.0;
            assert!((block_window(eta) - 1.0).abs() < 2e-12);
        }
        assert!(block_window(4.0).abs() < 1e-15);
        assert!(block_window(-4.0).abs() < 1e-15);
        assert!((block_window(3.0) - block_window(-3.0)).abs() < 1e-15);
    }

    #[test]
    fn constant_symbol_has_only_nu_zero() {
        let (g, part) = setup(64);
        let one = builtin(&Builtin::One, &g).unwrap();
        let dec = decompose(&one, 1.0, 4, DEFAULT_M0, &part).unwrap();
        assert!(dec.residual < 1e-10);
        for (nu, sym) in dec.nus().zip(&dec.symbols) {
            for c in sym.coefficients() {
                let s = sup_norm(c);
                if nu == 0 {
                    assert!((s - 1.0).abs() < 1e-15);
                } else {
                    assert_eq!(s, 0.0);
                }
            }
        }
    }

    #[test]
    fn single_block_decomposition() {
        let (g, part) = setup(256);
        let w = weierstrass(&g, 0.5);
        let psi3: Vec<C64> = part.block(3).iter().map(|&v| C64::new(v, 0.0)).collect();
        let a = SampledSymbol::from_terms(&g, vec![SeparableTerm { x: w, xi: psi3 }], 0.0, Provenance::Derived("W psi_3".into())).unwrap();
        let dec = decompose(&a, 0.5, 8, DEFAULT_M0, &part).unwrap();
        assert!(dec.residual < 1e-8, "{}", dec.residual);
        for sym in &dec.symbols {
            for (k, c) in sym.coefficients().iter().enumerate() {
                if k != 3 {
                    assert_eq!(sup_norm(c), 0.0, "k={k}");
                }
            }
        }
    }

    #[test]
    fn residual_monotone_and_rejects_higher_order() {
        let (g, part) = setup(128);
        let a = symbol_from_text("weier(0.5, x)*chi(xi/8)", &g, 0.0).unwrap();
        let mut last = f64::INFINITY;
        for v in [4, 8, 16, 32] {
            let dec = decompose(&a, 0.5, v, DEFAULT_M0, &part).unwrap();
            assert!(dec.residual <= last * (1.0 + 1e-12), "V={v}: {} > {last}", dec.residual);
            last = dec.residual;
        }
        let jb = symbol_from_text("jb(xi)", &g, 1.0).unwrap();
        assert!(matches!(decompose(&jb, 0.5, 4, DEFAULT_M0, &part), Err(Error::NotOrderZero(_))));
    }

    #[test]
    fn full_mode_expansion_is_exact() {
        let (g, part) = setup(32);
        let a = SampledSymbol::from_fn(&g, 0.0, Provenance::Derived("t".into()), |x, k| C64::new((x.sin() + k as f64 / 8.0).cos(), 0.3 * (x - k as f64).sin())).unwrap();
        assert!(a.terms().is_none());
        let dec = decompose(&a, 1.0, 2 * g.size(), DEFAULT_M0, &part).unwrap();
        assert!(dec.residual < 1e-10, "{}", dec.residual);
    }

    #[test]
    fn span_detection() {
        let (g, part) = setup(64);
        let chi8: Vec<C64> = (0..64).map(|i| C64::new(part.profile().eval(g.frequency(i) as f64 / 8.0), 0.0)).collect();
        let c = block_expansion(&chi8, &part).unwrap();
        for (k, ck) in c.iter().enumerate() {
            assert!((ck.re - if k <= 3 { 1.0 } else { 0.0 }).abs() < 1e-15);
        }
        let bump: Vec<C64> = (0..64).map(|i| C64::new(crate::dsl::chi(g.frequency(i) as f64 / 8.0), 0.0)).collect();
        assert!(block_expansion(&bump, &part).is_none());
    }

    #[test]
    fn profiles_have_unit_modulus_factor_and_support() {
        let (g, part) = setup(64);
        let a = symbol_from_text("weier(0.5, x)*chi(xi/8)", &g, 0.0).unwrap();
        let dec = decompose(&a, 0.5, 3, DEFAULT_M0, &part).unwrap();
        for sym in &dec.symbols {
            for (k, prof) in sym.profiles().iter().enumerate() {
                for (p, b) in prof.iter().zip(part.block(k)) {
                    assert!((p.norm() - b).abs() < 1e-15);
                }
            }
        }
        assert!(dec.c_nu.iter().zip(dec.c_nu.iter().rev()).all(|(a, b)| a == b));
        assert_eq!(dec.c_nu[dec.v], 1.0);
        let bad = vec![vec![C64::new(1.0, 0.0); 64]; part.levels() + 1];
        let coefs = vec![GridFunction::zeros(&g); part.levels() + 1];
        assert!(matches!(ElementarySymbol::with_profiles(coefs, bad, 0.5), Err(Error::SupportViolation { .. })));
    }

    #[test]
    fn split_sums_to_mollified_symbol() {
        let (g, part) = setup(256);
        let e = ElementarySymbol::from_function(&weierstrass(&g, 0.5), &part, 0.5).unwrap();
        let mol = Mollifier::gaussian();
        for eps in [1.0, 0.1, 0.01] {
            let sp = split(&e, &mol, eps, &part).unwrap();
            let want = mollify_symbol(&e.assemble().unwrap(), &mol, eps).unwrap();
            assert!(sp.sum().unwrap().max_abs_diff(&want) < 1e-12);
        }
    }

    #[test]
    fn split_block_membership() {
        let (g, part) = setup(1024);
        let levels = part.levels();
        let mut coefs = vec![GridFunction::zeros(&g); levels + 1];
        coefs[5] = GridFunction::from_real_fn(&g, |x| (32.0 * x).cos());
        let e = ElementarySymbol::new(coefs.clone(), &part, 0.5).unwrap();
        let sp = split(&e, &Mollifier::gaussian(), 1e-6, &part).unwrap();
        assert!(sp.low.values().iter().all(|v| v.norm() < 1e-14));
        assert!(sp.high.values().iter().all(|v| v.norm() < 1e-14));
        assert!(sp.diagonal.values().iter().any(|v| v.norm() > 0.5));
        for j in 0..=levels {
            let b = sup_norm(&part.apply_block(&coefs[5], j).unwrap());
            assert_eq!(b > 1e-14, j == 5, "j={j}");
        }
        coefs[5] = GridFunction::from_real_fn(&g, |x| (512.0 * x).cos());
        let e = ElementarySymbol::new(coefs, &part, 0.5).unwrap();
        let sp = split(&e, &Mollifier::gaussian(), 1e-6, &part).unwrap();
        assert!(sp.high.values().iter().any(|v| v.norm() > 0.5));
        assert!(sp.diagonal.values().iter().all(|v| v.norm() < 1e-14));
    }

    #[test]
    fn constant_symbol_high_part_vanishes() {
        let (g, part) = setup(64);
        let e = ElementarySymbol::from_function(&GridFunction::constant(&g, C64::new(1.0, 0.0)), &part, 1.0).unwrap();
        let rep = three_part_sweep(&e, &Mollifier::gaussian(), 0.5, 2.0, 1.0, &dyadic_eps(1, 6), &part, &NormOptions::default()).unwrap();
        assert!(rep.rates[2].is_all_zero());
        assert!(rep.rates[0].slope().unwrap().abs() < 1e-10);
        assert!(rep.rates[1].slope().unwrap().abs() < 1e-10);
    }

    #[test]
    fn order_reduction_and_mollification_commute() {
        let (g, _) = setup(64);
        let m = 1.0;
        let a = symbol_from_text("weier(0.5, x)*jb(xi)", &g, m).unwrap();
        let mol = Mollifier::gaussian();
        let ae = mollify_symbol(&a, &mol, 0.1).unwrap();
        let direct = op_norm_estimate(&quantize(&ae), 0.7 + m, 0.7, 2.0, NormMethod::Exact2, &NormOptions::default()).unwrap().value;
        let reduced = compose(&[quantize(&ae), LatticeOperator::bracket_power(&g, -m)]).unwrap();
        let conj = op_norm_estimate(&reduced, 0.7, 0.7, 2.0, NormMethod::Exact2, &NormOptions::default()).unwrap().value;
        assert!((direct - conj).abs() < 1e-8 * direct);
        // (a ∗ ρ_ε) ♯ ⟨ξ⟩^{-m} = (a ♯ ⟨ξ⟩^{-m}) ∗ ρ_ε.
        let a0 = symbol_from_text("weier(0.5, x)", &g, 0.0).unwrap();
        let left = compose(&[quantize(&ae), LatticeOperator::bracket_power(&g, -m)]).unwrap();
        let right = quantize(&mollify_symbol(&a0, &mol, 0.1).unwrap());
        let f = crate::grid::random_band_limited(&g, 31, 5).unwrap();
        assert!(apply(&left, &f).unwrap().max_abs_diff(&apply(&right, &f).unwrap()) < 1e-12);
    }

    #[test]
    fn preliminary_constants_on_lacunary_atoms() {
        let (g, part) = setup(512);
        let r = 0.5;
        let coefs: Vec<GridFunction> = (0..=part.levels()).map(|k| GridFunction::from_real_fn(&g, |x| ((1u64 << k) as f64 * x).cos())).collect();
        let e = ElementarySymbol::new(coefs, &part, r).unwrap();
        let c = preliminary_constants(&e, &Mollifier::gaussian(), 1.0, &dyadic_eps(3, 8), &part).unwrap();
        assert!(c.sup <= c.c * (1.0 + 1e-9));
        assert!(c.c_prime.is_finite() && c.c_prime > 0.0 && c.c_prime < 10.0 * c.c);
        assert!(c.c_double_prime.is_finite() && c.c_double_prime < 10.0 * c.c);
    }

    #[test]
    fn reduce_order_matches_right_composition() {
        let (g, _) = setup(64);
        let m = 1.5;
        let a = symbol_from_text("weier(0.5, x)*jb(xi)^1.5 + cos(x)*xi", &g, m).unwrap();
        let b = reduce_order(&a, m).unwrap();
        assert!(b.terms().is_some());
        assert!(b.fitted_order() < 0.1);
        let reference = compose(&[quantize(&a), LatticeOperator::bracket_power(&g, -m)]).unwrap();
        let f = crate::grid::random_band_limited(&g, 31, 9).unwrap();
        assert!(apply(&quantize(&b), &f).unwrap().max_abs_diff(&apply(&reference, &f).unwrap()) < 1e-11);
        let dense = SampledSymbol::from_values(&g, a.values().to_vec(), m, Provenance::Derived("dense".into())).unwrap();
        assert!(reduce_order(&dense, m).unwrap().max_abs_diff(&b) < 1e-13);
    }
}
