//! Kohn-Nirenberg quantization on the lattice, operator transposition and
//! composition.
//!
//! Operators act on FFT-ordered spectra: `a(x,D)f` has spectrum `T f̂` with
//! `T[l, k] = â(l - k, k)`, where `â(·, k)` is the spectrum of the column `a(·, k)`.
//! Multipliers and separable symbols keep a structured form that is applied
//! with FFTs; everything else is a dense `N × N` matrix.

use std::io::{Read, Write};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, PeriodicGrid, C64};
use crate::lp::bracket;
use crate::symbol::SampledSymbol;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Debug)]
pub enum OpRepr {
    /// Fourier multiplier, FFT order.
    Diagonal(Vec<C64>),
    /// Row-major spectral matrix.
    Dense(Arc<Vec<C64>>),
    /// Pointwise multiplication by a function.
    Multiplication(GridFunction),
    /// `ops[0] ∘ ops[1] ∘ …`; the last entry is applied first.
    Chain(Vec<LatticeOperator>),
    Sum(Vec<LatticeOperator>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpProvenance {
    Identity,
    Quantized(String),
    Multiplier(String),
    Multiplication(String),
    Composed(Vec<OpProvenance>),
    Transposed(Box<OpProvenance>),
    Adjoint(Box<OpProvenance>),
    Sum(Vec<OpProvenance>),
    Scaled(Box<OpProvenance>),
}

#[derive(Clone, Debug)]
pub struct LatticeOperator {
    grid: PeriodicGrid,
    repr: OpRepr,
    provenance: OpProvenance,
}

impl LatticeOperator {
    pub fn identity(grid: &PeriodicGrid) -> Self {
        Self { grid: grid.clone(), repr: OpRepr::Diagonal(vec![C64::new(1.0, 0.0); grid.size()]), provenance: OpProvenance::Identity }
    }

    /// Fourier multiplier `profile(D)`.
    pub fn multiplier(grid: &PeriodicGrid, label: impl Into<String>, profile: impl Fn(i64) -> C64) -> Self {
        let d = grid.frequencies().into_iter().map(profile).collect();
        Self { grid: grid.clone(), repr: OpRepr::Diagonal(d), provenance: OpProvenance::Multiplier(label.into()) }
    }

    /// `⟨D⟩^t`.
    pub fn bracket_power(grid: &PeriodicGrid, t: f64) -> Self {
        Self::multiplier(grid, format!("<D>^{t}"), |k| C64::new(bracket(k as f64).powf(t), 0.0))
    }

    /// Multiplication by `g`.
    pub fn multiplication(g: &GridFunction, label: impl Into<String>) -> Self {
        Self { grid: g.grid().clone(), repr: OpRepr::Multiplication(g.clone()), provenance: OpProvenance::Multiplication(label.into()) }
    }

    /// Row-major spectral matrix.
    pub fn dense(grid: &PeriodicGrid, matrix: Vec<C64>, provenance: OpProvenance) -> Result<Self> {
        let n = grid.size();
        if matrix.len() != n * n {
            return Err(Error::LengthMismatch { expected: n * n, got: matrix.len() });
        }
        Ok(Self { grid: grid.clone(), repr: OpRepr::Dense(Arc::new(matrix)), provenance })
    }

    pub fn sum(ops: Vec<LatticeOperator>) -> Result<Self> {
        let first = ops.first().ok_or_else(|| Error::Invalid("empty operator sum".into()))?;
        let grid = first.grid.clone();
        for op in &ops {
            grid.check_same(&op.grid)?;
        }
        let provenance = OpProvenance::Sum(ops.iter().map(|o| o.provenance.clone()).collect());
        Ok(Self { grid, repr: OpRepr::Sum(ops), provenance })
    }

    pub fn scale(&self, lambda: C64) -> Self {
        let scaled = Self::multiplier(&self.grid, "scale", |_| lambda);
        let mut out = compose(&[scaled, self.clone()]).expect("same grid");
        out.provenance = OpProvenance::Scaled(Box::new(self.provenance.clone()));
        out
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn repr(&self) -> &OpRepr {
        &self.repr
    }

    pub fn provenance(&self) -> &OpProvenance {
        &self.provenance
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.repr, OpRepr::Dense(_))
    }

    /// Spectrum of the image of a spectrum.
    pub fn apply_spectrum(&self, x: &[C64]) -> Vec<C64> {
        let grid = &self.grid;
        let n = grid.size();
        match &self.repr {
            OpRepr::Diagonal(d) => x.iter().zip(d).map(|(a, b)| a * b).collect(),
            OpRepr::Dense(m) => m.par_chunks(n).map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect(),
            OpRepr::Multiplication(g) => {
                let mut buf = x.to_vec();
                grid.inverse_in_place(&mut buf);
                for (v, s) in buf.iter_mut().zip(g.samples()) {
                    *v *= s;
                }
                grid.forward_in_place(&mut buf);
                buf
            }
            OpRepr::Chain(ops) => ops.iter().rev().fold(x.to_vec(), |acc, op| op.apply_spectrum(&acc)),
            OpRepr::Sum(ops) => {
                let mut out = vec![ZERO; n];
                for op in ops {
                    for (o, v) in out.iter_mut().zip(op.apply_spectrum(x)) {
                        *o += v;
                    }
                }
                out
            }
        }
    }

    /// Spectrum of the conjugate adjoint applied to a spectrum.
    pub fn apply_adjoint_spectrum(&self, y: &[C64]) -> Vec<C64> {
        let grid = &self.grid;
        let n = grid.size();
        match &self.repr {
            OpRepr::Diagonal(d) => y.iter().zip(d).map(|(a, b)| a * b.conj()).collect(),
            OpRepr::Dense(m) => {
                let chunk = 64.min(n);
                (0..n)
                    .into_par_iter()
                    .step_by(chunk)
                    .map(|start| {
                        let end = (start + chunk).min(n);
                        let mut acc = vec![ZERO; end - start];
                        for (row, yl) in m.chunks(n).zip(y) {
                            if *yl == ZERO {
                                continue;
                            }
                            for (a, t) in acc.iter_mut().zip(&row[start..end]) {
                                *a += t.conj() * yl;
                            }
                        }
                        acc
                    })
                    .collect::<Vec<_>>()
                    .concat()
            }
            OpRepr::Multiplication(g) => {
                let mut buf = y.to_vec();
                grid.inverse_in_place(&mut buf);
                for (v, s) in buf.iter_mut().zip(g.samples()) {
                    *v *= s.conj();
                }
                grid.forward_in_place(&mut buf);
                buf
            }
            OpRepr::Chain(ops) => ops.iter().fold(y.to_vec(), |acc, op| op.apply_adjoint_spectrum(&acc)),
            OpRepr::Sum(ops) => {
                let mut out = vec![ZERO; n];
                for op in ops {
                    for (o, v) in out.iter_mut().zip(op.apply_adjoint_spectrum(y)) {
                        *o += v;
                    }
                }
                out
            }
        }
    }

    /// Real-bilinear transpose: `⟨T f, g⟩ = ⟨f, ᵗT g⟩`, `⟨u, v⟩ = (2π/N) Σ u(x_j) v(x_j)`.
    pub fn transpose(&self) -> Self {
        let grid = &self.grid;
        let n = grid.size();
        let neg = |i: usize| grid.index(-grid.frequency(i));
        let repr = match &self.repr {
            OpRepr::Diagonal(d) => OpRepr::Diagonal((0..n).map(|i| d[neg(i)]).collect()),
            OpRepr::Dense(m) => {
                let mut t = vec![ZERO; n * n];
                t.par_chunks_mut(n).enumerate().for_each(|(a, row)| {
                    let na = neg(a);
                    for (b, v) in row.iter_mut().enumerate() {
                        *v = m[neg(b) * n + na];
                    }
                });
                OpRepr::Dense(Arc::new(t))
            }
            OpRepr::Multiplication(g) => OpRepr::Multiplication(g.clone()),
            OpRepr::Chain(ops) => OpRepr::Chain(ops.iter().rev().map(|o| o.transpose()).collect()),
            OpRepr::Sum(ops) => OpRepr::Sum(ops.iter().map(|o| o.transpose()).collect()),
        };
        Self { grid: self.grid.clone(), repr, provenance: OpProvenance::Transposed(Box::new(self.provenance.clone())) }
    }

    /// Dense row-major spectral matrix.
    pub fn to_dense(&self) -> Vec<C64> {
        let n = self.grid.size();
        match &self.repr {
            OpRepr::Dense(m) => m.as_ref().clone(),
            OpRepr::Diagonal(d) => {
                let mut m = vec![ZERO; n * n];
                for (i, v) in d.iter().enumerate() {
                    m[i * n + i] = *v;
                }
                m
            }
            _ => {
                let cols: Vec<Vec<C64>> = (0..n)
                    .into_par_iter()
                    .map(|k| {
                        let mut e = vec![ZERO; n];
                        e[k] = C64::new(1.0, 0.0);
                        self.apply_spectrum(&e)
                    })
                    .collect();
                let mut m = vec![ZERO; n * n];
                for (k, col) in cols.iter().enumerate() {
                    for (l, v) in col.iter().enumerate() {
                        m[l * n + k] = *v;
                    }
                }
                m
            }
        }
    }

    pub fn densified(&self) -> Self {
        Self { grid: self.grid.clone(), repr: OpRepr::Dense(Arc::new(self.to_dense())), provenance: self.provenance.clone() }
    }

    /// `M[j, c] = (T e^{ikx})(x_j)` with `k = c - N/2`: samples against ascending frequencies.
    pub fn sample_matrix(&self) -> Vec<C64> {
        let grid = &self.grid;
        let n = grid.size();
        let cols: Vec<Vec<C64>> = (0..n)
            .into_par_iter()
            .map(|c| {
                let mut e = vec![ZERO; n];
                e[grid.index(c as i64 - n as i64 / 2)] = C64::new(1.0, 0.0);
                let mut y = self.apply_spectrum(&e);
                grid.inverse_in_place(&mut y);
                y
            })
            .collect();
        let mut m = vec![ZERO; n * n];
        for (c, col) in cols.iter().enumerate() {
            for (j, v) in col.iter().enumerate() {
                m[j * n + c] = *v;
            }
        }
        m
    }

    /// `"PDOLABOP"`, `u32` N, `u32` reserved, then [`Self::sample_matrix`] as
    /// little-endian complex128 pairs, row-major.
    pub fn export_binary(&self, w: &mut impl Write) -> Result<()> {
        let n = self.grid.size();
        w.write_all(OP_MAGIC)?;
        w.write_all(&(n as u32).to_le_bytes())?;
        w.write_all(&0u32.to_le_bytes())?;
        for v in self.sample_matrix() {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
        Ok(())
    }
}

pub const OP_MAGIC: &[u8; 8] = b"PDOLABOP";

/// Reads an exported sample matrix: `(N, row-major entries)`.
pub fn read_binary(r: &mut impl Read) -> Result<(usize, Vec<C64>)> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header)?;
    if &header[..8] != OP_MAGIC {
        return Err(Error::Invalid("not a PDOLABOP file".into()));
    }
    let n = u32::from_le_bytes(header[8..12].try_into().expect("4 bytes")) as usize;
    let mut bytes = vec![0u8; n * n * 16];
    r.read_exact(&mut bytes)?;
    let values = bytes
        .chunks_exact(16)
        .map(|c| C64::new(f64::from_le_bytes(c[..8].try_into().expect("8 bytes")), f64::from_le_bytes(c[8..].try_into().expect("8 bytes"))))
        .collect();
    Ok((n, values))
}

pub const SEPARABLE_TERM_LIMIT: usize = 64;

/// `a(x, D)`; multipliers stay diagonal and short separable expansions stay factored.
pub fn quantize(a: &SampledSymbol) -> LatticeOperator {
    let grid = a.grid();
    let label = a.provenance().to_string();
    if let Some(profile) = a.x_independent_profile() {
        return LatticeOperator { grid: grid.clone(), repr: OpRepr::Diagonal(profile), provenance: OpProvenance::Quantized(label) };
    }
    if let Some(terms) = a.terms().filter(|t| !t.is_empty() && t.len() <= SEPARABLE_TERM_LIMIT) {
        let ops: Vec<LatticeOperator> = terms
            .iter()
            .map(|t| {
                let diag = LatticeOperator { grid: grid.clone(), repr: OpRepr::Diagonal(t.xi.clone()), provenance: OpProvenance::Multiplier("term".into()) };
                let first = t.x.samples()[0];
                if t.x.samples().iter().all(|v| *v == first) {
                    return diag.scale_diagonal(first);
                }
                let mult = LatticeOperator::multiplication(&t.x, "term");
                if t.xi.iter().all(|v| *v == C64::new(1.0, 0.0)) {
                    mult
                } else {
                    LatticeOperator { grid: grid.clone(), repr: OpRepr::Chain(vec![mult, diag]), provenance: OpProvenance::Quantized("term".into()) }
                }
            })
            .collect();
        let mut op = if ops.len() == 1 { ops.into_iter().next().expect("one term") } else { LatticeOperator::sum(ops).expect("same grid") };
        op.provenance = OpProvenance::Quantized(label);
        return op;
    }
    quantize_dense(a)
}

impl LatticeOperator {
    fn scale_diagonal(mut self, c: C64) -> Self {
        if let OpRepr::Diagonal(d) = &mut self.repr {
            d.iter_mut().for_each(|v| *v *= c);
        }
        self
    }
}

/// Dense assembly `T[l, k] = â(l - k, k)` regardless of structure.
pub fn quantize_dense(a: &SampledSymbol) -> LatticeOperator {
    let grid = a.grid();
    let n = grid.size();
    let spectra: Vec<Vec<C64>> = (0..n).into_par_iter().map(|i| grid.forward(a.column_at(i))).collect();
    let mut m = vec![ZERO; n * n];
    m.par_chunks_mut(n).enumerate().for_each(|(r, row)| {
        let l = grid.frequency(r);
        for (i, v) in row.iter_mut().enumerate() {
            let k = grid.frequency(i);
            *v = spectra[i][grid.index(l - k)];
        }
    });
    LatticeOperator { grid: grid.clone(), repr: OpRepr::Dense(Arc::new(m)), provenance: OpProvenance::Quantized(a.provenance().to_string()) }
}

pub fn apply(op: &LatticeOperator, f: &GridFunction) -> Result<GridFunction> {
    op.grid.check_same(f.grid())?;
    GridFunction::from_spectrum(&op.grid, op.apply_spectrum(f.spectrum()))
}

pub fn transpose(op: &LatticeOperator) -> LatticeOperator {
    op.transpose()
}

/// `ops[0] ∘ ops[1] ∘ … ∘ ops[n-1]`: the last operator acts first.
pub fn compose(ops: &[LatticeOperator]) -> Result<LatticeOperator> {
    let first = ops.first().ok_or_else(|| Error::Invalid("nothing to compose".into()))?;
    let grid = first.grid.clone();
    let mut flat: Vec<LatticeOperator> = Vec::new();
    for op in ops {
        grid.check_same(&op.grid)?;
        match &op.repr {
            OpRepr::Chain(inner) => flat.extend(inner.iter().cloned()),
            _ => flat.push(op.clone()),
        }
    }
    let mut merged: Vec<LatticeOperator> = Vec::new();
    for op in flat {
        if let Some(last) = merged.last_mut() {
            if let Some(combined) = merge_pair(last, &op) {
                *last = combined;
                continue;
            }
        }
        merged.push(op);
    }
    let provenance = OpProvenance::Composed(ops.iter().map(|o| o.provenance.clone()).collect());
    let repr = if merged.len() == 1 { merged.pop().expect("one").repr } else { OpRepr::Chain(merged) };
    Ok(LatticeOperator { grid, repr, provenance })
}

fn merge_pair(a: &LatticeOperator, b: &LatticeOperator) -> Option<LatticeOperator> {
    let n = a.grid.size();
    let repr = match (&a.repr, &b.repr) {
        (OpRepr::Diagonal(x), OpRepr::Diagonal(y)) => OpRepr::Diagonal(x.iter().zip(y).map(|(u, v)| u * v).collect()),
        (OpRepr::Diagonal(d), OpRepr::Dense(m)) => {
            let mut out = m.as_ref().clone();
            out.par_chunks_mut(n).zip(d.par_iter()).for_each(|(row, s)| row.iter_mut().for_each(|v| *v *= s));
            OpRepr::Dense(Arc::new(out))
        }
        (OpRepr::Dense(m), OpRepr::Diagonal(d)) => {
            let mut out = m.as_ref().clone();
            out.par_chunks_mut(n).for_each(|row| row.iter_mut().zip(d).for_each(|(v, s)| *v *= s));
            OpRepr::Dense(Arc::new(out))
        }
        (OpRepr::Multiplication(f), OpRepr::Multiplication(g)) => OpRepr::Multiplication(f.pointwise_mul(g).ok()?),
        _ => return None,
    };
    Some(LatticeOperator { grid: a.grid.clone(), repr, provenance: OpProvenance::Composed(vec![a.provenance.clone(), b.provenance.clone()]) })
}
