//! Sampled symbols `a(x_j, k)`, their `S^m_{1,δ}` and Zygmund seminorms,
//! mollification in `x`, moderate nets and the builtin probe library.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, PeriodicGrid, C64};
use crate::lp::{besov_norm, bracket, LPPartition};
use crate::mollifier::{regularize, validate_eps, Mollifier};
use crate::sweep::{fit_points, Rate};

/// Where a symbol came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Builtin(String),
    Dsl(String),
    Mollified { parent: Box<Provenance>, mollifier: String, eps: f64 },
    Derived(String),
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Builtin(s) => write!(f, "builtin:{s}"),
            Provenance::Dsl(s) => write!(f, "dsl:{s}"),
            Provenance::Mollified { parent, mollifier, eps } => write!(f, "mollified({parent}, {mollifier}, {eps})"),
            Provenance::Derived(s) => write!(f, "{s}"),
        }
    }
}

/// One term `g(x) h(ξ)` of a finite separable expansion; `xi` is in FFT order.
#[derive(Clone, Debug)]
pub struct SeparableTerm {
    pub x: GridFunction,
    pub xi: Vec<C64>,
}

/// `a(x_j, k)` on `grid × lattice`, stored column by column (one column per
/// frequency, FFT order). An optional separable expansion is kept alongside.
#[derive(Clone, Debug)]
pub struct SampledSymbol {
    grid: PeriodicGrid,
    values: Vec<C64>,
    order: f64,
    regularity: Option<f64>,
    provenance: Provenance,
    c0: f64,
    terms: Option<Vec<SeparableTerm>>,
}

impl SampledSymbol {
    /// `values[i * N + j] = a(x_j, frequency(i))`.
    pub fn from_values(grid: &PeriodicGrid, values: Vec<C64>, order: f64, provenance: Provenance) -> Result<Self> {
        let n = grid.size();
        if values.len() != n * n {
            return Err(Error::LengthMismatch { expected: n * n, got: values.len() });
        }
        if let Some(t) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            let (i, j) = (t / n, t % n);
            return Err(Error::Domain { x_index: j, x: grid.point(j), k: grid.frequency(i), reason: "non-finite value".into() });
        }
        let c0 = values
            .chunks(n)
            .enumerate()
            .map(|(i, col)| {
                let w = bracket(grid.frequency(i) as f64).powf(-order);
                col.iter().map(|v| v.norm()).fold(0.0, f64::max) * w
            })
            .fold(0.0, f64::max);
        Ok(Self { grid: grid.clone(), values, order, regularity: None, provenance, c0, terms: None })
    }

    pub fn from_fn(grid: &PeriodicGrid, order: f64, provenance: Provenance, f: impl Fn(f64, i64) -> C64 + Sync) -> Result<Self> {
        let n = grid.size();
        let xs = grid.points();
        let values = (0..n * n).into_par_iter().map(|t| f(xs[t % n], grid.frequency(t / n))).collect();
        Self::from_values(grid, values, order, provenance)
    }

    /// `Σ_t g_t(x) h_t(ξ)`, keeping the expansion.
    pub fn from_terms(grid: &PeriodicGrid, terms: Vec<SeparableTerm>, order: f64, provenance: Provenance) -> Result<Self> {
        let n = grid.size();
        for t in &terms {
            grid.check_same(t.x.grid())?;
            if t.xi.len() != n {
                return Err(Error::LengthMismatch { expected: n, got: t.xi.len() });
            }
        }
        let mut values = vec![C64::new(0.0, 0.0); n * n];
        values.par_chunks_mut(n).enumerate().for_each(|(i, col)| {
            for t in &terms {
                let h = t.xi[i];
                if h == C64::new(0.0, 0.0) {
                    continue;
                }
                for (v, g) in col.iter_mut().zip(t.x.samples()) {
                    *v += g * h;
                }
            }
        });
        Ok(Self::from_values(grid, values, order, provenance)?.with_terms(terms))
    }

    /// `a(x, ξ) = g(x)`.
    pub fn x_only(g: &GridFunction, provenance: Provenance) -> Result<Self> {
        let ones = vec![C64::new(1.0, 0.0); g.grid().size()];
        Self::from_terms(g.grid(), vec![SeparableTerm { x: g.clone(), xi: ones }], 0.0, provenance)
    }

    pub fn with_terms(mut self, terms: Vec<SeparableTerm>) -> Self {
        self.terms = Some(terms);
        self
    }

    pub fn with_order(mut self, order: f64) -> Self {
        let n = self.grid.size();
        self.order = order;
        self.c0 = self
            .values
            .chunks(n)
            .enumerate()
            .map(|(i, col)| col.iter().map(|v| v.norm()).fold(0.0, f64::max) * bracket(self.grid.frequency(i) as f64).powf(-order))
            .fold(0.0, f64::max);
        self
    }

    pub fn with_regularity(mut self, r: f64) -> Self {
        self.regularity = Some(r);
        self
    }

    pub fn set_provenance(&mut self, p: Provenance) {
        self.provenance = p;
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn regularity(&self) -> Option<f64> {
        self.regularity
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// `max |a(x,k)| ⟨k⟩^{-m}`.
    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn terms(&self) -> Option<&[SeparableTerm]> {
        self.terms.as_deref()
    }

    pub fn value(&self, j: usize, k: i64) -> C64 {
        self.values[self.grid.index(k) * self.grid.size() + j]
    }

    /// Samples of `a(·, k)`.
    pub fn column(&self, k: i64) -> &[C64] {
        self.column_at(self.grid.index(k))
    }

    pub fn column_at(&self, i: usize) -> &[C64] {
        let n = self.grid.size();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn column_function(&self, k: i64) -> GridFunction {
        GridFunction::from_samples(&self.grid, self.column(k).to_vec()).expect("column length")
    }

    /// Lattice profile in FFT order if `a` does not depend on `x`.
    pub fn x_independent_profile(&self) -> Option<Vec<C64>> {
        let n = self.grid.size();
        self.values
            .chunks(n)
            .map(|col| col.iter().all(|v| *v == col[0]).then_some(col[0]))
            .collect()
    }

    pub fn scale(&self, lambda: C64) -> Self {
        let values = self.values.iter().map(|v| v * lambda).collect();
        let mut out = Self::from_values(&self.grid, values, self.order, self.provenance.clone()).expect("finite");
        out.regularity = self.regularity;
        out.terms = self
            .terms
            .as_ref()
            .map(|ts| ts.iter().map(|t| SeparableTerm { x: t.x.scale(lambda), xi: t.xi.clone() }).collect());
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        let mut out = Self::from_values(&self.grid, values, self.order.max(other.order), Provenance::Derived("sum".into()))?;
        if let (Some(a), Some(b)) = (&self.terms, &other.terms) {
            out.terms = Some(a.iter().chain(b).cloned().collect());
        }
        Ok(out)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Growth exponent of the envelope `T_j = max_{|k| ≤ 2^j} sup_x |a(·,k)|`:
    /// `max_{j ≤ J-2} log2(T_J / T_j) / (J - j)` over levels with `T_j > 0`.
    pub fn fitted_order(&self) -> f64 {
        let levels = self.grid.max_level();
        let n = self.grid.size();
        let mut col_sup = vec![0.0; n];
        for (i, col) in self.values.chunks(n).enumerate() {
            col_sup[i] = col.iter().map(|v| v.norm()).fold(0.0, f64::max);
        }
        let envelope: Vec<f64> = (0..=levels)
            .map(|j| {
                let bound = 1i64 << j;
                (0..n)
                    .filter(|&i| self.grid.frequency(i).abs() <= bound)
                    .map(|i| col_sup[i])
                    .fold(0.0, f64::max)
            })
            .collect();
        let top = envelope[levels];
        if top == 0.0 || levels < 2 {
            return 0.0;
        }
        (0..=levels - 2)
            .filter(|&j| envelope[j] > 0.0)
            .map(|j| (top / envelope[j]).log2() / (levels - j) as f64)
            .fold(0.0, f64::max)
    }

    /// Symbol JSON: `{"n", "m", "values"}` with row-major `[re, im]` pairs, rows
    /// indexed by `x_j` and columns by ascending frequency `-N/2, …, N/2-1`.
    pub fn to_json(&self) -> SymbolJson {
        let n = self.grid.size();
        let mut values = Vec::with_capacity(n * n);
        for j in 0..n {
            for c in 0..n {
                let k = c as i64 - n as i64 / 2;
                let v = self.value(j, k);
                values.push([v.re, v.im]);
            }
        }
        SymbolJson { n, m: self.order, values }
    }

    pub fn from_json(json: &SymbolJson) -> Result<Self> {
        let grid = PeriodicGrid::new(json.n)?;
        let n = json.n;
        if json.values.len() != n * n {
            return Err(Error::LengthMismatch { expected: n * n, got: json.values.len() });
        }
        let mut values = vec![C64::new(0.0, 0.0); n * n];
        for j in 0..n {
            for c in 0..n {
                let k = c as i64 - n as i64 / 2;
                let [re, im] = json.values[j * n + c];
                values[grid.index(k) * n + j] = C64::new(re, im);
            }
        }
        Self::from_values(&grid, values, json.m, Provenance::Derived("file".into()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolJson {
    pub n: usize,
    pub m: f64,
    pub values: Vec<[f64; 2]>,
}

/// `Σ_{j=0}^{J} 2^{-jr} cos(2^j x)`.
pub fn weierstrass_value(r: f64, levels: usize, x: f64) -> f64 {
    (0..=levels).map(|j| (-(j as f64) * r).exp2() * ((j as f64).exp2() * x).cos()).sum()
}

/// `W_r` truncated at the top level of the grid.
pub fn weierstrass(grid: &PeriodicGrid, r: f64) -> GridFunction {
    let levels = grid.max_level();
    GridFunction::from_real_fn(grid, |x| weierstrass_value(r, levels, x))
}

/// `Σ_{j=0}^{J} c_j cos(2^j x)`.
pub fn lacunary(grid: &PeriodicGrid, coefficient: impl Fn(usize) -> f64) -> GridFunction {
    let levels = grid.max_level();
    let c: Vec<f64> = (0..=levels).map(coefficient).collect();
    GridFunction::from_real_fn(grid, |x| c.iter().enumerate().map(|(j, cj)| cj * ((j as f64).exp2() * x).cos()).sum())
}

/// Builtin probe symbols.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builtin {
    Weierstrass(f64),
    SmoothS0,
    One,
    Mult(String),
    LacunaryFlat,
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Builtin::Weierstrass(r) => write!(f, "weierstrass:{r}"),
            Builtin::SmoothS0 => f.write_str("smooth_s0"),
            Builtin::One => f.write_str("one"),
            Builtin::Mult(e) => write!(f, "mult:{e}"),
            Builtin::LacunaryFlat => f.write_str("lacunary_flat"),
        }
    }
}

impl FromStr for Builtin {
    type Err = Error;

    /// `weierstrass:R`, `weierstrass(R)`, `smooth_s0`, `one`, `mult:EXPR`, `lacunary_flat`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let arg = |prefix: &str| -> Option<&str> {
            s.strip_prefix(prefix).and_then(|rest| {
                rest.strip_prefix(':').or_else(|| rest.strip_prefix('(').and_then(|r| r.strip_suffix(')')))
            })
        };
        if let Some(r) = arg("weierstrass") {
            let r: f64 = r.trim().parse().map_err(|_| Error::Invalid(format!("bad weierstrass exponent `{r}`")))?;
            return Ok(Builtin::Weierstrass(r));
        }
        if let Some(e) = arg("mult") {
            return Ok(Builtin::Mult(e.to_string()));
        }
        match s {
            "smooth_s0" => Ok(Builtin::SmoothS0),
            "one" => Ok(Builtin::One),
            "lacunary_flat" => Ok(Builtin::LacunaryFlat),
            other => Err(Error::UnknownName(other.to_string())),
        }
    }
}

pub fn builtin(b: &Builtin, grid: &PeriodicGrid) -> Result<SampledSymbol> {
    let n = grid.size();
    let prov = Provenance::Builtin(b.to_string());
    let ones = vec![C64::new(1.0, 0.0); n];
    match b {
        Builtin::Weierstrass(r) => {
            if !(*r > 0.0 && *r < 4.0) {
                return Err(Error::OutOfRange { what: "r", value: *r });
            }
            Ok(SampledSymbol::from_terms(grid, vec![SeparableTerm { x: weierstrass(grid, *r), xi: ones }], 0.0, prov)?.with_regularity(*r))
        }
        Builtin::SmoothS0 => {
            let xi = grid
                .frequencies()
                .iter()
                .map(|&k| {
                    let k2 = (k * k) as f64;
                    C64::new(1.0 + k2 / (1.0 + k2), 0.0)
                })
                .collect();
            SampledSymbol::from_terms(grid, vec![SeparableTerm { x: GridFunction::from_real_fn(grid, f64::sin), xi }], 0.0, prov)
        }
        Builtin::One => {
            SampledSymbol::from_terms(grid, vec![SeparableTerm { x: GridFunction::constant(grid, C64::new(1.0, 0.0)), xi: ones }], 0.0, prov)
        }
        Builtin::LacunaryFlat => {
            Ok(SampledSymbol::from_terms(grid, vec![SeparableTerm { x: lacunary(grid, |_| 1.0), xi: ones }], 0.0, prov)?.with_regularity(0.0))
        }
        Builtin::Mult(text) => {
            let expr = crate::dsl::parse(text)?;
            if expr.depends_on_xi() {
                return Err(Error::Invalid(format!("mult(...) must not depend on xi: `{text}`")));
            }
            let sym = crate::dsl::evaluate(&expr, grid, 0.0)?;
            let g = sym.column_function(0);
            SampledSymbol::from_terms(grid, vec![SeparableTerm { x: g, xi: ones }], 0.0, prov)
        }
    }
}

pub const DEFAULT_DEPTH: usize = 4;

fn check_depth(alpha: usize, beta: usize, depth: usize) -> Result<()> {
    let worst = alpha.max(beta);
    if worst > depth {
        return Err(Error::DepthExceeded { got: worst, max: depth });
    }
    Ok(())
}

/// Columns of `∂^β_x a`, evaluated spectrally, in the storage layout.
fn x_derivative(a: &SampledSymbol, beta: usize) -> Vec<C64> {
    if beta == 0 {
        return a.values.clone();
    }
    let grid = &a.grid;
    let n = grid.size();
    let factors: Vec<C64> = (0..n).map(|l| C64::new(0.0, grid.frequency(l) as f64).powu(beta as u32)).collect();
    let mut out = a.values.clone();
    out.par_chunks_mut(n).for_each(|col| {
        grid.forward_in_place(col);
        for (c, f) in col.iter_mut().zip(&factors) {
            *c *= f;
        }
        grid.inverse_in_place(col);
    });
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Storage index of ascending lattice position `c` (frequency `c - N/2`).
fn ascending(grid: &PeriodicGrid, c: usize) -> usize {
    grid.index(c as i64 - grid.size() as i64 / 2)
}

/// `Δ^α_ξ` of the column at ascending position `c`, `α ≤ c ≤ N-1-α`:
/// `2^{-α} Σ_i (-1)^i C(α,i) f(k + α - 2i)`.
fn xi_difference_column(grid: &PeriodicGrid, m: &[C64], alpha: usize, c: usize, out: &mut [C64]) {
    let n = grid.size();
    let scale = (-(alpha as f64)).exp2();
    out.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
    for i in 0..=alpha {
        let w = scale * binomial(alpha, i) * if i % 2 == 0 { 1.0 } else { -1.0 };
        let src = ascending(grid, c + alpha - 2 * i);
        for (o, v) in out.iter_mut().zip(&m[src * n..(src + 1) * n]) {
            *o += v * w;
        }
    }
}

fn weighted_difference_sup(grid: &PeriodicGrid, m: &[C64], alpha: usize, order: f64) -> f64 {
    let n = grid.size();
    if 2 * alpha >= n {
        return 0.0;
    }
    (alpha..n - alpha)
        .into_par_iter()
        .map_init(
            || vec![C64::new(0.0, 0.0); n],
            |buf, c| {
                xi_difference_column(grid, m, alpha, c, buf);
                let k = c as f64 - (n / 2) as f64;
                buf.iter().map(|v| v.norm()).fold(0.0, f64::max) * bracket(k).powf(-order + alpha as f64)
            },
        )
        .reduce(|| 0.0, f64::max)
}

/// `sup ⟨k⟩^{-m+α} |Δ^α_ξ ∂^β_x a|` with the `α` outermost frequencies on each side excluded.
pub fn seminorm(a: &SampledSymbol, alpha: usize, beta: usize) -> Result<f64> {
    check_depth(alpha, beta, DEFAULT_DEPTH)?;
    Ok(weighted_difference_sup(&a.grid, &x_derivative(a, beta), alpha, a.order))
}

/// `seminorm(a, α, β)` for all `α, β ≤ depth` when `a = g(x) h(ξ)` is a single term:
/// `‖∂^β g‖_∞ · sup ⟨k⟩^{-m+α} |Δ^α h|`.
fn single_term_table(a: &SampledSymbol, depth: usize) -> Option<Vec<Vec<f64>>> {
    let [t] = a.terms()? else { return None };
    let grid = &a.grid;
    let n = grid.size();
    let g = t.x.spectrum();
    let x_sup: Vec<f64> = (0..=depth)
        .map(|beta| {
            let d: Vec<C64> = (0..n).map(|l| g[l] * C64::new(0.0, grid.frequency(l) as f64).powu(beta as u32)).collect();
            grid.inverse(&d).iter().map(|v| v.norm()).fold(0.0, f64::max)
        })
        .collect();
    let h: Vec<C64> = (0..n).map(|c| t.xi[ascending(grid, c)]).collect();
    let xi_sup: Vec<f64> = (0..=depth)
        .map(|alpha| {
            if 2 * alpha >= n {
                return 0.0;
            }
            let scale = (-(alpha as f64)).exp2();
            (alpha..n - alpha)
                .map(|c| {
                    let d: C64 = (0..=alpha)
                        .map(|i| h[c + alpha - 2 * i] * scale * binomial(alpha, i) * if i % 2 == 0 { 1.0 } else { -1.0 })
                        .sum();
                    let k = c as f64 - (n / 2) as f64;
                    d.norm() * bracket(k).powf(-a.order + alpha as f64)
                })
                .fold(0.0, f64::max)
        })
        .collect();
    Some(xi_sup.iter().map(|xs| x_sup.iter().map(|gs| xs * gs).collect()).collect())
}

/// `∂^β_x a` as a symbol of the same order.
pub fn x_derivative_symbol(a: &SampledSymbol, beta: usize) -> Result<SampledSymbol> {
    SampledSymbol::from_values(&a.grid, x_derivative(a, beta), a.order, Provenance::Derived(format!("d_x^{beta}({})", a.provenance)))
}

/// `max_{α+β ≤ depth} |a|^{(m)}_{α,β}`.
pub fn seminorm_sup(a: &SampledSymbol, depth: usize) -> Result<f64> {
    if let Some(t) = single_term_table(a, depth) {
        return Ok((0..=depth).flat_map(|al| (0..=depth - al).map(move |be| (al, be))).map(|(al, be)| t[al][be]).fold(0.0, f64::max));
    }
    let mut best: f64 = 0.0;
    for beta in 0..=depth {
        let d = x_derivative(a, beta);
        for alpha in 0..=depth - beta {
            best = best.max(weighted_difference_sup(&a.grid, &d, alpha, a.order));
        }
    }
    Ok(best)
}

/// `sup_k ⟨k⟩^{-(m-α+r)} ‖Δ^α_ξ a(·,k)‖_{C^r_∗}`.
pub fn zygmund_seminorm(a: &SampledSymbol, alpha: usize, r: f64, partition: &LPPartition) -> Result<f64> {
    check_depth(alpha, 0, DEFAULT_DEPTH)?;
    let grid = &a.grid;
    grid.check_same(partition.grid())?;
    let n = grid.size();
    if 2 * alpha >= n {
        return Ok(0.0);
    }
    if let Some(profile) = constant_columns(a) {
        // Columns equal up to scale: one Besov evaluation serves every k.
        let base = GridFunction::from_samples(grid, a.column_at(ascending(grid, 0)).to_vec())?;
        let b = besov_norm(&base, r, partition)?;
        let mut best: f64 = 0.0;
        for c in alpha..n - alpha {
            let scale = 0.5f64.powi(alpha as i32);
            let d: C64 = (0..=alpha)
                .map(|i| profile[c + alpha - 2 * i] * scale * binomial(alpha, i) * if i % 2 == 0 { 1.0 } else { -1.0 })
                .sum();
            let k = c as f64 - (n / 2) as f64;
            best = best.max(d.norm() * b * bracket(k).powf(-(a.order - alpha as f64 + r)));
        }
        return Ok(best);
    }
    let results: Vec<Result<f64>> = (alpha..n - alpha)
        .into_par_iter()
        .map(|c| {
            let mut buf = vec![C64::new(0.0, 0.0); n];
            xi_difference_column(grid, &a.values, alpha, c, &mut buf);
            let f = GridFunction::from_samples(grid, buf)?;
            let k = c as f64 - (n / 2) as f64;
            Ok(besov_norm(&f, r, partition)? * bracket(k).powf(-(a.order - alpha as f64 + r)))
        })
        .collect();
    results.into_iter().try_fold(0.0, |acc, v| Ok(f64::max(acc, v?)))
}

/// If `a(x,k) = g(x) h(k)` with a single separable term, `h` in ascending lattice order
/// relative to the ascending-first column.
fn constant_columns(a: &SampledSymbol) -> Option<Vec<C64>> {
    let terms = a.terms()?;
    let [t] = terms else { return None };
    let grid = &a.grid;
    let n = grid.size();
    let h0 = t.xi[ascending(grid, 0)];
    if h0 == C64::new(0.0, 0.0) {
        return None;
    }
    Some((0..n).map(|c| t.xi[ascending(grid, c)] / h0).collect())
}

/// Full table `(α, β) ↦ |a|^{(m)}_{α,β}` for `α, β ≤ depth`, plus optional Zygmund row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolSeminorms {
    pub depth: usize,
    /// `table[α][β]`.
    pub table: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zygmund: Option<Vec<f64>>,
}

pub fn seminorm_table(a: &SampledSymbol, depth: usize) -> Result<SymbolSeminorms> {
    if let Some(table) = single_term_table(a, depth) {
        return Ok(SymbolSeminorms { depth, table, zygmund: None });
    }
    let mut table = vec![vec![0.0; depth + 1]; depth + 1];
    for beta in 0..=depth {
        let d = x_derivative(a, beta);
        for (alpha, row) in table.iter_mut().enumerate() {
            row[beta] = weighted_difference_sup(&a.grid, &d, alpha, a.order);
        }
    }
    Ok(SymbolSeminorms { depth, table, zygmund: None })
}

pub fn seminorm_table_with_zygmund(a: &SampledSymbol, depth: usize, r: f64, partition: &LPPartition) -> Result<SymbolSeminorms> {
    let mut t = seminorm_table(a, depth)?;
    t.zygmund = Some((0..=depth.min(DEFAULT_DEPTH)).map(|alpha| zygmund_seminorm(a, alpha, r, partition)).collect::<Result<_>>()?);
    Ok(t)
}

/// `a_ε(x, ξ) = (a(·, ξ) ∗ ρ_ε)(x)`.
pub fn mollify_symbol(a: &SampledSymbol, mol: &Mollifier, eps: f64) -> Result<SampledSymbol> {
    validate_eps(eps)?;
    let prov = Provenance::Mollified { parent: Box::new(a.provenance.clone()), mollifier: mol.name().into(), eps };
    let mut out = if let Some(terms) = &a.terms {
        let terms = terms
            .iter()
            .map(|t| Ok(SeparableTerm { x: regularize(&t.x, mol, eps)?, xi: t.xi.clone() }))
            .collect::<Result<Vec<_>>>()?;
        SampledSymbol::from_terms(&a.grid, terms, a.order, prov)?
    } else {
        let grid = &a.grid;
        let n = grid.size();
        let weights: Vec<f64> = (0..n).map(|l| mol.fourier(eps * grid.frequency(l) as f64)).collect();
        let mut values = a.values.clone();
        values.par_chunks_mut(n).for_each(|col| {
            grid.forward_in_place(col);
            for (c, w) in col.iter_mut().zip(&weights) {
                *c *= *w;
            }
            grid.inverse_in_place(col);
        });
        SampledSymbol::from_values(grid, values, a.order, prov)?
    };
    out.regularity = a.regularity;
    Ok(out)
}

pub type SymbolGenerator = Arc<dyn Fn(f64) -> Result<SampledSymbol> + Send + Sync>;

/// An ε-family of symbols with fitted growth exponents of its seminorms.
#[derive(Clone)]
pub struct ModerateNet {
    generator: SymbolGenerator,
    pub eps: Vec<f64>,
    pub depth: usize,
    /// One seminorm table per ε.
    pub tables: Vec<SymbolSeminorms>,
    /// `exponents[α][β]`: fit of `|a_ε|_{α,β} ∝ ε^{-N}` over all ε.
    pub exponents: Vec<Vec<Rate>>,
}

impl fmt::Debug for ModerateNet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModerateNet").field("eps", &self.eps).field("depth", &self.depth).field("exponents", &self.exponents).finish()
    }
}

impl ModerateNet {
    pub fn generate(&self, eps: f64) -> Result<SampledSymbol> {
        (self.generator)(eps)
    }

    pub fn generator(&self) -> &SymbolGenerator {
        &self.generator
    }

    /// Fitted `N_{α,β}`; an identically vanishing seminorm counts as 0.
    pub fn exponent(&self, alpha: usize, beta: usize) -> Option<f64> {
        self.exponents.get(alpha)?.get(beta)?.slope_or_zero()
    }
}

pub fn moderate_net(generator: SymbolGenerator, eps_grid: &[f64], depth: usize) -> Result<ModerateNet> {
    crate::sweep::validate_eps_grid(eps_grid)?;
    let tables = eps_grid
        .iter()
        .map(|&e| seminorm_table(&generator(e)?, depth))
        .collect::<Result<Vec<_>>>()?;
    let mut exponents = vec![vec![Rate::Degenerate(crate::sweep::Degenerate::AllZero); depth + 1]; depth + 1];
    if eps_grid.len() >= 3 {
        for (alpha, row) in exponents.iter_mut().enumerate() {
            for (beta, cell) in row.iter_mut().enumerate() {
                let values: Vec<f64> = tables.iter().map(|t| t.table[alpha][beta]).collect();
                *cell = fit_points(eps_grid, &values)?;
            }
        }
    }
    Ok(ModerateNet { generator, eps: eps_grid.to_vec(), depth, tables, exponents })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::symbol_from_text;
    use crate::grid::make_grid;
    use crate::lp::{make_partition, CutoffProfile};
    use crate::sweep::{default_eps_grid, SweepMeta, SweepReport};

    #[test]
    fn builtins() {
        let g = make_grid(64).unwrap();
        let one = builtin(&Builtin::One, &g).unwrap();
        assert_eq!(seminorm(&one, 0, 0).unwrap(), 1.0);
        for (a, b) in [(1, 0), (0, 1), (2, 3), (4, 4)] {
            assert!(seminorm(&one, a, b).unwrap() < 1e-15);
        }
        let w = builtin(&Builtin::Weierstrass(0.5), &g).unwrap();
        assert_eq!(w.regularity(), Some(0.5));
        let part = make_partition(&g, CutoffProfile::default());
        for k in [-32, -3, 0, 7, 31] {
            assert!((besov_norm(&w.column_function(k), 0.5, &part).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!(builtin(&Builtin::Weierstrass(4.5), &g).is_err());
        assert!("bogus".parse::<Builtin>().is_err());
        assert_eq!("weierstrass(0.5)".parse::<Builtin>().unwrap(), Builtin::Weierstrass(0.5));
        assert_eq!("mult:cos(x)".parse::<Builtin>().unwrap(), Builtin::Mult("cos(x)".into()));
        let m = builtin(&Builtin::Mult("cos(x)".into()), &g).unwrap();
        assert!(m.x_independent_profile().is_none());
        assert!(builtin(&Builtin::Mult("xi".into()), &g).is_err());
        let s0 = builtin(&Builtin::SmoothS0, &g).unwrap();
        assert!((s0.value(16, 1).re - 1.5).abs() < 1e-15);
    }

    #[test]
    fn seminorm_examples() {
        let g = make_grid(64).unwrap();
        let jb = symbol_from_text("jb(xi)", &g, 1.0).unwrap();
        assert!((seminorm(&jb, 0, 0).unwrap() - 1.0).abs() < 1e-15);
        let s = SampledSymbol::from_fn(&g, -1.0, Provenance::Derived("t".into()), |x, k| C64::from_polar(1.0, x) / bracket(k as f64)).unwrap();
        assert!((seminorm(&s, 0, 1).unwrap() - 1.0).abs() < 1e-10);
        assert!(matches!(seminorm(&s, 5, 0), Err(Error::DepthExceeded { .. })));
        // α = 1 on ⟨ξ⟩: central difference of ⟨k⟩ is bounded by 1 and attained in the limit.
        let d1 = seminorm(&jb, 1, 0).unwrap();
        assert!(d1 <= 1.0 && d1 > 0.99);
    }

    #[test]
    fn single_term_table_matches_general_path() {
        let g = make_grid(64).unwrap();
        for text in ["sin(5*x)*chi(xi)", "weier(0.5, x)*jb(xi)^0.5", "exp(cos(x))*psi(2, xi)"] {
            let a = symbol_from_text(text, &g, 0.5).unwrap();
            assert_eq!(a.terms().map(|t| t.len()), Some(1));
            let generic = SampledSymbol::from_values(&g, a.values().to_vec(), 0.5, Provenance::Derived("copy".into())).unwrap();
            let (t1, t2) = (seminorm_table(&a, 4).unwrap(), seminorm_table(&generic, 4).unwrap());
            for al in 0..=4 {
                for be in 0..=4 {
                    let (u, v) = (t1.table[al][be], t2.table[al][be]);
                    assert!((u - v).abs() <= 1e-9 * (1.0 + v), "{text} {al} {be}: {u} vs {v}");
                }
            }
            let (u, v) = (seminorm_sup(&a, 4).unwrap(), seminorm_sup(&generic, 4).unwrap());
            assert!((u - v).abs() <= 1e-9 * (1.0 + v));
        }
    }

    #[test]
    fn zygmund_seminorm_examples() {
        let g = make_grid(128).unwrap();
        let part = make_partition(&g, CutoffProfile::default());
        let w = builtin(&Builtin::Weierstrass(0.5), &g).unwrap();
        assert!((zygmund_seminorm(&w, 0, 0.5, &part).unwrap() - 1.0).abs() < 1e-12);
        let one = builtin(&Builtin::One, &g).unwrap();
        for r in [0.2, 1.0, 3.0] {
            assert!((zygmund_seminorm(&one, 0, r, &part).unwrap() - 1.0).abs() < 1e-14);
        }
        let e = SampledSymbol::from_fn(&g, 0.0, Provenance::Derived("e^{ix}".into()), |x, _| C64::from_polar(1.0, x)).unwrap();
        assert!(zygmund_seminorm(&e, 1, 0.5, &part).unwrap() < 1e-15);
        // General path agrees with the separable shortcut.
        let generic = SampledSymbol::from_values(&g, w.values().to_vec(), 0.0, Provenance::Derived("copy".into())).unwrap();
        for alpha in 0..=2 {
            let a = zygmund_seminorm(&w, alpha, 0.5, &part).unwrap();
            let b = zygmund_seminorm(&generic, alpha, 0.5, &part).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn homogeneity_and_mollification_bounds() {
        let g = make_grid(64).unwrap();
        let a = symbol_from_text("sin(3*x)*psi(2, xi) + cos(x)/jb(xi)", &g, 0.0).unwrap();
        let lam = C64::new(-2.5, 1.0);
        for (al, be) in [(0, 0), (1, 2), (2, 1)] {
            let s1 = seminorm(&a.scale(lam), al, be).unwrap();
            let s0 = seminorm(&a, al, be).unwrap();
            assert!((s1 - lam.norm() * s0).abs() <= 1e-12 * s1.max(1.0));
        }
        let mol = Mollifier::gaussian();
        for eps in [0.5, 0.1, 0.01] {
            let ae = mollify_symbol(&a, &mol, eps).unwrap();
            assert!(seminorm(&ae, 0, 0).unwrap() <= seminorm(&a, 0, 0).unwrap() * (1.0 + 1e-9));
        }
        let one = builtin(&Builtin::One, &g).unwrap();
        assert!(mollify_symbol(&one, &mol, 0.3).unwrap().max_abs_diff(&one) < 1e-15);
        let w = builtin(&Builtin::Weierstrass(0.5), &g).unwrap();
        let we = mollify_symbol(&w, &mol, 0.1).unwrap();
        let direct = regularize(&weierstrass(&g, 0.5), &mol, 0.1).unwrap();
        for k in g.frequencies() {
            let col = we.column(k);
            assert!(col.iter().zip(direct.samples()).all(|(a, b)| (a - b).norm() < 1e-14));
        }
        assert!(matches!(we.provenance(), Provenance::Mollified { .. }));
        // Column-wise path (no separable expansion) agrees.
        let bare = SampledSymbol::from_values(&g, w.values().to_vec(), 0.0, Provenance::Derived("bare".into())).unwrap();
        assert!(mollify_symbol(&bare, &mol, 0.1).unwrap().max_abs_diff(&we) < 1e-13);
    }

    #[test]
    fn mollified_zygmund_rate() {
        let g = make_grid(1024).unwrap();
        let part = make_partition(&g, CutoffProfile::default());
        let w = builtin(&Builtin::Weierstrass(0.5), &g).unwrap();
        let mol = Mollifier::gaussian();
        let eps = default_eps_grid();
        let base = zygmund_seminorm(&w, 0, 0.5, &part).unwrap();
        let values: Vec<f64> = eps.iter().map(|&e| zygmund_seminorm(&mollify_symbol(&w, &mol, e).unwrap(), 0, 1.5, &part).unwrap() / base).collect();
        let rep = SweepReport::new(eps, values, SweepMeta::labelled("zyg")).unwrap();
        let slope = rep.fit(6).unwrap().slope().unwrap();
        assert!(slope <= 1.1, "{slope}");
    }

    #[test]
    fn moderate_nets() {
        let g = make_grid(64).unwrap();
        let grid = g.clone();
        let one: SymbolGenerator = Arc::new(move |_| builtin(&Builtin::One, &grid));
        let net = moderate_net(one, &dyadic(1, 4), 3).unwrap();
        for a in 0..=3 {
            for b in 0..=3 {
                assert_eq!(net.exponent(a, b), Some(0.0));
            }
        }
        let grid = make_grid(256).unwrap();
        let gen: SymbolGenerator = Arc::new(move |e: f64| symbol_from_text(&format!("sin({}*x)*chi(xi)", (1.0 / e).round()), &grid, 0.0));
        let net = moderate_net(gen, &dyadic(2, 6), 3).unwrap();
        for b in 0..=3 {
            assert!((net.exponent(0, b).unwrap() - b as f64).abs() < 0.05);
        }
        let grid = make_grid(1024).unwrap();
        let w = builtin(&Builtin::Weierstrass(0.5), &grid).unwrap();
        let gen: SymbolGenerator = Arc::new(move |e| mollify_symbol(&w, &Mollifier::gaussian(), e));
        let net = moderate_net(gen, &default_eps_grid(), 1).unwrap();
        let n01 = net.exponent(0, 1).unwrap();
        assert!((n01 - 0.5).abs() < 0.1, "{n01}");
    }

    fn dyadic(a: u32, b: u32) -> Vec<f64> {
        crate::sweep::dyadic_eps(a, b)
    }

    #[test]
    fn fitted_order_and_json() {
        let g = make_grid(128).unwrap();
        assert!(symbol_from_text("jb(xi)", &g, 1.0).unwrap().fitted_order() > 0.9);
        assert!(symbol_from_text("weier(0.5, x)*chi(xi/8)", &g, 0.0).unwrap().fitted_order() < 0.05);
        assert!(symbol_from_text("psi(6, xi)", &g, 0.0).unwrap().fitted_order() < 0.05);
        let g = make_grid(16).unwrap();
        let a = symbol_from_text("sin(x) + xi*cos(2*x)/8", &g, 1.0).unwrap();
        let text = serde_json::to_string(&a.to_json()).unwrap();
        let back = SampledSymbol::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back.values(), a.values());
        assert_eq!(back.order(), 1.0);
        assert_eq!(a.to_json().values[0], [-1.0, 0.0]);
    }
}
