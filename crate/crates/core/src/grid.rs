//! Periodic grid on `[0, 2π)`, sampled functions with cached spectra, and the
//! Riemann-sum `L^p` / sup norms.
//!
//! Spectral convention: `f̂(k) = (1/N) Σ_j f(x_j) e^{-ikx_j}` and
//! `f(x_j) = Σ_k f̂(k) e^{ikx_j}` for `k ∈ {-N/2, …, N/2-1}`. Spectra are stored
//! in FFT order (index `i` holds frequency `i` for `i < N/2`, `i - N` otherwise).

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const MIN_GRID_SIZE: usize = 16;

/// Uniform grid `x_j = 2πj/N` with its integer frequency lattice.
#[derive(Clone)]
pub struct PeriodicGrid {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for PeriodicGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicGrid").field("n", &self.n).finish()
    }
}

impl PartialEq for PeriodicGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

impl Eq for PeriodicGrid {}

pub fn make_grid(n: usize) -> Result<PeriodicGrid> {
    PeriodicGrid::new(n)
}

impl PeriodicGrid {
    pub fn new(n: usize) -> Result<Self> {
        if !n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(n));
        }
        if n < MIN_GRID_SIZE {
            return Err(Error::GridTooSmall { got: n, min: MIN_GRID_SIZE });
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Top dyadic level `J = log2(N/2)`; `2^J` is the largest lattice modulus.
    pub fn max_level(&self) -> usize {
        (self.n / 2).trailing_zeros() as usize
    }

    pub fn point(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.point(j)).collect()
    }

    /// Frequency held at FFT index `i`.
    pub fn frequency(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// FFT index of frequency `k`, reduced modulo `N`.
    pub fn index(&self, k: i64) -> usize {
        k.rem_euclid(self.n as i64) as usize
    }

    pub fn frequencies(&self) -> Vec<i64> {
        (0..self.n).map(|i| self.frequency(i)).collect()
    }

    pub fn min_frequency(&self) -> i64 {
        -(self.n as i64) / 2
    }

    pub fn max_frequency(&self) -> i64 {
        self.n as i64 / 2 - 1
    }

    pub fn check_same(&self, other: &PeriodicGrid) -> Result<()> {
        if self.n != other.n {
            return Err(Error::GridMismatch { left: self.n, right: other.n });
        }
        Ok(())
    }

    /// Forward transform of samples into FFT-ordered coefficients.
    pub fn forward(&self, samples: &[C64]) -> Vec<C64> {
        let mut buf = samples.to_vec();
        self.forward_in_place(&mut buf);
        buf
    }

    pub fn forward_in_place(&self, buf: &mut [C64]) {
        debug_assert_eq!(buf.len(), self.n);
        self.forward.process(buf);
        let scale = 1.0 / self.n as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }

    pub fn inverse(&self, spectrum: &[C64]) -> Vec<C64> {
        let mut buf = spectrum.to_vec();
        self.inverse_in_place(&mut buf);
        buf
    }

    pub fn inverse_in_place(&self, buf: &mut [C64]) {
        debug_assert_eq!(buf.len(), self.n);
        self.inverse.process(buf);
    }
}

/// Complex function sampled on a [`PeriodicGrid`], with its spectrum.
#[derive(Clone, Debug)]
pub struct GridFunction {
    grid: PeriodicGrid,
    samples: Vec<C64>,
    spectrum: Vec<C64>,
}

impl GridFunction {
    pub fn from_samples(grid: &PeriodicGrid, samples: Vec<C64>) -> Result<Self> {
        if samples.len() != grid.size() {
            return Err(Error::LengthMismatch { expected: grid.size(), got: samples.len() });
        }
        let spectrum = grid.forward(&samples);
        Ok(Self { grid: grid.clone(), samples, spectrum })
    }

    /// Builds from FFT-ordered coefficients.
    pub fn from_spectrum(grid: &PeriodicGrid, spectrum: Vec<C64>) -> Result<Self> {
        if spectrum.len() != grid.size() {
            return Err(Error::LengthMismatch { expected: grid.size(), got: spectrum.len() });
        }
        let samples = grid.inverse(&spectrum);
        Ok(Self { grid: grid.clone(), samples, spectrum })
    }

    pub fn from_fn(grid: &PeriodicGrid, f: impl Fn(f64) -> C64) -> Self {
        let samples: Vec<C64> = (0..grid.size()).map(|j| f(grid.point(j))).collect();
        let spectrum = grid.forward(&samples);
        Self { grid: grid.clone(), samples, spectrum }
    }

    pub fn from_real_fn(grid: &PeriodicGrid, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |x| C64::new(f(x), 0.0))
    }

    pub fn zeros(grid: &PeriodicGrid) -> Self {
        let n = grid.size();
        Self { grid: grid.clone(), samples: vec![C64::new(0.0, 0.0); n], spectrum: vec![C64::new(0.0, 0.0); n] }
    }

    pub fn constant(grid: &PeriodicGrid, c: C64) -> Self {
        let n = grid.size();
        let mut spectrum = vec![C64::new(0.0, 0.0); n];
        spectrum[0] = c;
        Self { grid: grid.clone(), samples: vec![c; n], spectrum }
    }

    /// `e^{ikx}`.
    pub fn mode(grid: &PeriodicGrid, k: i64) -> Self {
        let mut spectrum = vec![C64::new(0.0, 0.0); grid.size()];
        spectrum[grid.index(k)] = C64::new(1.0, 0.0);
        Self::from_spectrum(grid, spectrum).expect("length matches grid")
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn spectrum(&self) -> &[C64] {
        &self.spectrum
    }

    pub fn coefficient(&self, k: i64) -> C64 {
        self.spectrum[self.grid.index(k)]
    }

    /// Applies `profile(k)` to every coefficient.
    pub fn map_spectrum(&self, profile: impl Fn(i64) -> C64) -> Self {
        let spectrum: Vec<C64> = self
            .spectrum
            .iter()
            .enumerate()
            .map(|(i, c)| c * profile(self.grid.frequency(i)))
            .collect();
        Self::from_spectrum(&self.grid, spectrum).expect("length matches grid")
    }

    pub fn scale(&self, lambda: C64) -> Self {
        Self {
            grid: self.grid.clone(),
            samples: self.samples.iter().map(|v| v * lambda).collect(),
            spectrum: self.spectrum.iter().map(|v| v * lambda).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid.clone(),
            samples: self.samples.iter().zip(&other.samples).map(|(a, b)| a + b).collect(),
            spectrum: self.spectrum.iter().zip(&other.spectrum).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn pointwise_mul(&self, other: &Self) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let samples = self.samples.iter().zip(&other.samples).map(|(a, b)| a * b).collect();
        Self::from_samples(&self.grid, samples)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.samples.iter().all(|v| v.im.abs() <= tol)
    }

    pub fn to_json(&self) -> GridFunctionJson {
        GridFunctionJson {
            n: self.grid.size(),
            samples_re: self.samples.iter().map(|v| v.re).collect(),
            samples_im: self.samples.iter().map(|v| v.im).collect(),
        }
    }

    pub fn from_json(json: &GridFunctionJson) -> Result<Self> {
        let grid = PeriodicGrid::new(json.n)?;
        if json.samples_re.len() != json.n || json.samples_im.len() != json.n {
            return Err(Error::LengthMismatch {
                expected: json.n,
                got: json.samples_re.len().min(json.samples_im.len()),
            });
        }
        let samples = json
            .samples_re
            .iter()
            .zip(&json.samples_im)
            .map(|(&re, &im)| C64::new(re, im))
            .collect();
        Self::from_samples(&grid, samples)
    }
}

/// Wire form `{"n": N, "samples_re": [...], "samples_im": [...]}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GridFunctionJson {
    pub n: usize,
    pub samples_re: Vec<f64>,
    pub samples_im: Vec<f64>,
}

pub(crate) fn validate_exponent(p: f64) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidExponent(p));
    }
    Ok(())
}

/// `((2π/N) Σ_j |f(x_j)|^p)^{1/p}`.
pub fn lp_norm(f: &GridFunction, p: f64) -> Result<f64> {
    validate_exponent(p)?;
    Ok(lp_norm_of_samples(f.samples(), p))
}

pub(crate) fn lp_norm_of_samples(samples: &[C64], p: f64) -> f64 {
    let n = samples.len() as f64;
    let peak = samples.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    // Factor out the peak so large p does not overflow.
    let sum: f64 = samples.iter().map(|v| (v.norm() / peak).powf(p)).sum();
    peak * (2.0 * PI / n * sum).powf(1.0 / p)
}

pub fn sup_norm(f: &GridFunction) -> f64 {
    f.samples().iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Seeded random trigonometric polynomial with spectrum in `|k| ≤ max_freq`,
/// normalised so that `Σ_k |f̂(k)|² = 1`.
pub fn random_band_limited(grid: &PeriodicGrid, max_freq: i64, seed: u64) -> Result<GridFunction> {
    if max_freq < 0 || max_freq > grid.max_frequency() {
        return Err(Error::OutOfRange { what: "max_freq", value: max_freq as f64 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spectrum = vec![C64::new(0.0, 0.0); grid.size()];
    for k in -max_freq..=max_freq {
        let re: f64 = rng.gen_range(-1.0..1.0);
        let im: f64 = rng.gen_range(-1.0..1.0);
        spectrum[grid.index(k)] = C64::new(re, im);
    }
    let energy: f64 = spectrum.iter().map(|c| c.norm_sqr()).sum();
    let scale = 1.0 / energy.sqrt();
    for c in spectrum.iter_mut() {
        *c *= scale;
    }
    GridFunction::from_spectrum(grid, spectrum)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct_dft(samples: &[C64]) -> Vec<C64> {
        let n = samples.len();
        (0..n)
            .map(|i| {
                let k = if i < n / 2 { i as f64 } else { i as f64 - n as f64 };
                let mut acc = C64::new(0.0, 0.0);
                for (j, s) in samples.iter().enumerate() {
                    let x = 2.0 * PI * j as f64 / n as f64;
                    acc += s * C64::from_polar(1.0, -k * x);
                }
                acc / n as f64
            })
            .collect()
    }

    #[test]
    fn grid_sizes() {
        let g = make_grid(16).unwrap();
        assert_eq!(g.min_frequency(), -8);
        assert_eq!(g.max_frequency(), 7);
        let mut fr = g.frequencies();
        fr.sort();
        assert_eq!(fr, (-8..=7).collect::<Vec<_>>());
        let err = make_grid(15).unwrap_err();
        assert!(err.to_string().contains("size must be a power of two"));
        assert!(matches!(make_grid(8), Err(Error::GridTooSmall { .. })));
        let g = make_grid(1024).unwrap();
        assert!((g.point(1) - 2.0 * PI / 1024.0).abs() < 1e-15);
        assert_eq!(g.max_level(), 9);
    }

    #[test]
    fn single_mode_and_constant() {
        let g = make_grid(32).unwrap();
        let f = GridFunction::from_fn(&g, |x| C64::from_polar(1.0, 3.0 * x));
        for i in 0..32 {
            let k = g.frequency(i);
            let want = if k == 3 { 1.0 } else { 0.0 };
            assert!((f.spectrum()[i] - C64::new(want, 0.0)).norm() < 1e-13);
        }
        let one = GridFunction::constant(&g, C64::new(1.0, 0.0));
        assert!((one.coefficient(0) - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn transform_matches_direct_dft_and_round_trips() {
        let g = make_grid(64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let samples: Vec<C64> =
            (0..64).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let f = GridFunction::from_samples(&g, samples.clone()).unwrap();
        let oracle = direct_dft(&samples);
        for (a, b) in f.spectrum().iter().zip(&oracle) {
            assert!((a - b).norm() < 1e-13);
        }
        let back = g.inverse(f.spectrum());
        let err = back.iter().zip(&samples).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn norms_on_closed_forms() {
        let g = make_grid(64).unwrap();
        let one = GridFunction::constant(&g, C64::new(1.0, 0.0));
        for p in [1.5, 2.0, 3.0, 7.0] {
            assert!((lp_norm(&one, p).unwrap() - (2.0 * PI).powf(1.0 / p)).abs() < 1e-12);
        }
        let c = GridFunction::from_real_fn(&g, f64::cos);
        assert!((lp_norm(&c, 2.0).unwrap() - PI.sqrt()).abs() < 1e-12);
        assert_eq!(lp_norm(&GridFunction::zeros(&g), 2.0).unwrap(), 0.0);
        assert!(matches!(lp_norm(&c, 1.0), Err(Error::InvalidExponent(_))));
        assert!(lp_norm(&c, f64::INFINITY).is_err());
        assert!((sup_norm(&c) - 1.0).abs() < 1e-15);
        let m2 = GridFunction::constant(&g, C64::new(-2.0, 0.0));
        assert_eq!(sup_norm(&m2), 2.0);
        let e5 = GridFunction::mode(&g, 5);
        assert!((sup_norm(&e5) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_probes() {
        let g = make_grid(64).unwrap();
        let a = random_band_limited(&g, 8, 1).unwrap();
        let b = random_band_limited(&g, 8, 1).unwrap();
        assert_eq!(a.samples(), b.samples());
        assert_eq!(a.coefficient(20), C64::new(0.0, 0.0));
        let l2 = lp_norm(&a, 2.0).unwrap() / (2.0 * PI).sqrt();
        assert!((l2 - 1.0).abs() < 1e-12);
        assert!(random_band_limited(&g, 32, 1).is_err());
        assert!(random_band_limited(&g, 31, 1).is_ok());
    }

    #[test]
    fn parseval_on_random_probes() {
        let g = make_grid(128).unwrap();
        for seed in 0..100 {
            let f = random_band_limited(&g, 40, seed).unwrap().scale(C64::new(1.7, -0.4));
            let lhs = lp_norm(&f, 2.0).unwrap().powi(2) / (2.0 * PI);
            let rhs: f64 = f.spectrum().iter().map(|c| c.norm_sqr()).sum();
            assert!((lhs - rhs).abs() <= 1e-10 * rhs);
        }
    }

    #[test]
    fn json_round_trip() {
        let g = make_grid(16).unwrap();
        let f = random_band_limited(&g, 5, 3).unwrap();
        let text = serde_json::to_string(&f.to_json()).unwrap();
        assert!(text.starts_with("{\"n\":16,\"samples_re\":["));
        let back = GridFunction::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back.samples(), f.samples());
    }
}
