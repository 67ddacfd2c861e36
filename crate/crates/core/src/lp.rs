//! Littlewood-Paley partitions of the frequency lattice, Fourier multipliers,
//! and the Besov, continuous Zygmund, Sobolev and square-function norms.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{lp_norm, lp_norm_of_samples, sup_norm, validate_exponent, GridFunction, PeriodicGrid, C64};

/// Shape of the base cutoff `ψ_0` on the transition band `1 < |ξ| < 2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutoffProfile {
    /// `1 - (10u³ - 15u⁴ + 6u⁵)` with `u = |ξ| - 1`; twice continuously differentiable.
    #[default]
    PolynomialSpline,
    /// `erfc(tan(π(|ξ| - 3/2))) / 2`; infinitely flat at both ends of the band.
    SmoothedErf,
}

impl CutoffProfile {
    pub fn eval(self, xi: f64) -> f64 {
        let a = xi.abs();
        if a <= 1.0 {
            return 1.0;
        }
        if a >= 2.0 {
            return 0.0;
        }
        match self {
            CutoffProfile::PolynomialSpline => {
                let u = a - 1.0;
                1.0 - u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)
            }
            CutoffProfile::SmoothedErf => 0.5 * libm::erfc((PI * (a - 1.5)).tan()),
        }
    }

    pub fn derivative(self, xi: f64) -> f64 {
        let a = xi.abs();
        if a <= 1.0 || a >= 2.0 {
            return 0.0;
        }
        let d = match self {
            CutoffProfile::PolynomialSpline => {
                let u = a - 1.0;
                -30.0 * u * u * (1.0 - u) * (1.0 - u)
            }
            CutoffProfile::SmoothedErf => {
                let t = (PI * (a - 1.5)).tan();
                -(-t * t).exp() / PI.sqrt() * PI * (1.0 + t * t)
            }
        };
        d * xi.signum()
    }
}

/// Dyadic family `ψ_0, …, ψ_J` on a grid together with the continuous pair `(φ, ψ)`.
#[derive(Clone, Debug)]
pub struct LPPartition {
    grid: PeriodicGrid,
    profile: CutoffProfile,
    levels: usize,
    blocks: Vec<Vec<f64>>,
}

pub fn make_partition(grid: &PeriodicGrid, profile: CutoffProfile) -> LPPartition {
    LPPartition::new(grid, profile)
}

impl LPPartition {
    pub fn new(grid: &PeriodicGrid, profile: CutoffProfile) -> Self {
        let levels = grid.max_level();
        let mut part = Self { grid: grid.clone(), profile, levels, blocks: Vec::with_capacity(levels + 1) };
        let blocks = (0..=levels)
            .map(|j| (0..grid.size()).map(|i| part.psi(j, grid.frequency(i) as f64)).collect())
            .collect();
        part.blocks = blocks;
        part
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn profile(&self) -> CutoffProfile {
        self.profile
    }

    /// Top level `J`.
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn base(&self, xi: f64) -> f64 {
        self.profile.eval(xi)
    }

    /// `ψ_j(ξ)` at any real `ξ`.
    pub fn psi(&self, j: usize, xi: f64) -> f64 {
        if j == 0 {
            return self.profile.eval(xi);
        }
        let scale = (j as f64).exp2();
        self.profile.eval(xi / scale) - self.profile.eval(2.0 * xi / scale)
    }

    /// `φ = ψ_0`.
    pub fn phi(&self, xi: f64) -> f64 {
        self.profile.eval(xi)
    }

    /// `ψ(ξ) = -ξ φ'(ξ)`.
    pub fn psi_continuous(&self, xi: f64) -> f64 {
        -xi * self.profile.derivative(xi)
    }

    /// Lattice values of `ψ_j` in FFT order.
    pub fn block(&self, j: usize) -> &[f64] {
        &self.blocks[j]
    }

    /// `ψ_j(D) f`.
    pub fn apply_block(&self, f: &GridFunction, j: usize) -> Result<GridFunction> {
        self.grid.check_same(f.grid())?;
        let block = &self.blocks[j];
        let spectrum = f.spectrum().iter().zip(block).map(|(c, w)| c * *w).collect();
        GridFunction::from_spectrum(&self.grid, spectrum)
    }

    /// `Σ_{l≤j} ψ_l(D) f = ψ_0(2^{-j}D) f`.
    pub fn apply_partial_sum(&self, f: &GridFunction, j: usize) -> Result<GridFunction> {
        self.grid.check_same(f.grid())?;
        let scale = (j as f64).exp2();
        let profile = self.profile;
        Ok(f.map_spectrum(|k| C64::new(profile.eval(k as f64 / scale), 0.0)))
    }

    /// All blocks `ψ_0(D)f, …, ψ_J(D)f`.
    pub fn decompose(&self, f: &GridFunction) -> Result<Vec<GridFunction>> {
        (0..=self.levels).map(|j| self.apply_block(f, j)).collect()
    }
}

/// Output spectrum `profile(k) · f̂(k)`.
/// `(2π)^{-1} max(‖F^{-1}ψ_0‖_{L^1(ℝ)}, ‖F^{-1}ψ_1‖_{L^1(ℝ)})`, the constant `c` of
/// `‖ψ_j(D)f‖_∞ ≤ c‖f‖_∞` and `‖Σ_{l≤j} ψ_l(D)f‖_∞ ≤ c‖f‖_∞`, by FFT quadrature.
pub fn uniform_bound_constant(profile: CutoffProfile) -> f64 {
    const M: usize = 1 << 20;
    const H: f64 = 1.0 / 256.0;
    let fft = rustfft::FftPlanner::new().plan_fft_inverse(M);
    let kernel_l1 = |psi: &dyn Fn(f64) -> f64| {
        let mut buf: Vec<C64> = (0..M)
            .map(|m| {
                let xi = if m < M / 2 { m as f64 } else { m as f64 - M as f64 } * H;
                C64::new(psi(xi), 0.0)
            })
            .collect();
        fft.process(&mut buf);
        let dx = 2.0 * PI / (M as f64 * H);
        buf.iter().map(|z| z.norm() * H).sum::<f64>() * dx
    };
    let psi0 = kernel_l1(&|xi| profile.eval(xi));
    let psi1 = kernel_l1(&|xi| profile.eval(xi / 2.0) - profile.eval(xi));
    psi0.max(psi1) / (2.0 * PI)
}

pub fn apply_multiplier(f: &GridFunction, profile: impl Fn(i64) -> C64) -> GridFunction {
    f.map_spectrum(profile)
}

pub fn apply_real_multiplier(f: &GridFunction, profile: impl Fn(i64) -> f64) -> GridFunction {
    f.map_spectrum(|k| C64::new(profile(k), 0.0))
}

/// `⟨ξ⟩ = (1 + ξ²)^{1/2}`.
pub fn bracket(xi: f64) -> f64 {
    (1.0 + xi * xi).sqrt()
}

/// `max_j 2^{js} ‖ψ_j(D) f‖_∞`.
pub fn besov_norm(f: &GridFunction, s: f64, partition: &LPPartition) -> Result<f64> {
    Ok(besov_profile(f, partition)?
        .iter()
        .enumerate()
        .map(|(j, b)| (j as f64 * s).exp2() * b)
        .fold(0.0, f64::max))
}

/// Block sup-norms `‖ψ_j(D) f‖_∞` for `j = 0..=J`.
pub fn besov_profile(f: &GridFunction, partition: &LPPartition) -> Result<Vec<f64>> {
    partition.grid.check_same(f.grid())?;
    let grid = &partition.grid;
    let mut buf = vec![C64::new(0.0, 0.0); grid.size()];
    Ok((0..=partition.levels)
        .map(|j| {
            let block = partition.block(j);
            if f.spectrum().iter().zip(block).all(|(c, w)| *w == 0.0 || *c == C64::new(0.0, 0.0)) {
                return 0.0;
            }
            for ((b, c), w) in buf.iter_mut().zip(f.spectrum()).zip(block) {
                *b = c * *w;
            }
            grid.inverse_in_place(&mut buf);
            buf.iter().map(|v| v.norm()).fold(0.0, f64::max)
        })
        .collect())
}

/// `‖φ(D)f‖_∞ + max_m t_m^s ‖ψ(D/t_m) f‖_∞` over `t_m = 2^{m/q}`, `1 ≤ t_m ≤ N/2`.
pub fn zygmund_continuous_norm(f: &GridFunction, s: f64, samples_per_octave: usize, partition: &LPPartition) -> Result<f64> {
    if samples_per_octave < 1 {
        return Err(Error::OutOfRange { what: "t_samples_per_octave", value: samples_per_octave as f64 });
    }
    partition.grid.check_same(f.grid())?;
    let low = sup_norm(&apply_real_multiplier(f, |k| partition.phi(k as f64)));
    let q = samples_per_octave as f64;
    let steps = samples_per_octave * partition.levels;
    let high = (0..=steps)
        .map(|m| {
            let t = (m as f64 / q).exp2();
            let g = apply_real_multiplier(f, |k| partition.psi_continuous(k as f64 / t));
            t.powf(s) * sup_norm(&g)
        })
        .fold(0.0, f64::max);
    Ok(low + high)
}

/// `‖⟨D⟩^s f‖_{L^p}`.
pub fn sobolev_norm(f: &GridFunction, s: f64, p: f64) -> Result<f64> {
    validate_exponent(p)?;
    if s == 0.0 {
        return lp_norm(f, p);
    }
    lp_norm(&apply_real_multiplier(f, |k| bracket(k as f64).powf(s)), p)
}

/// `‖(Σ_j 4^{js} |ψ_j(D) f|²)^{1/2}‖_{L^p}`.
pub fn square_function_norm(f: &GridFunction, s: f64, p: f64, partition: &LPPartition) -> Result<f64> {
    validate_exponent(p)?;
    let blocks = partition.decompose(f)?;
    let weighted: Vec<Vec<C64>> = blocks
        .iter()
        .enumerate()
        .map(|(j, b)| {
            let w = (2.0 * j as f64 * s).exp2().sqrt();
            b.samples().iter().map(|v| v * w).collect()
        })
        .collect();
    Ok(square_sum_norm(&weighted, f.grid().size(), p))
}

fn square_sum_norm(parts: &[Vec<C64>], n: usize, p: f64) -> f64 {
    let pointwise: Vec<C64> = (0..n)
        .map(|i| C64::new(parts.iter().map(|v| v[i].norm_sqr()).sum::<f64>().sqrt(), 0.0))
        .collect();
    lp_norm_of_samples(&pointwise, p)
}

/// Outcome of [`check_support_inequality`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub constant: f64,
    pub ok: bool,
}

const SUPPORT_TOL: f64 = 1e-12;
const SUPPORT_CALIBRATION_SEED: u64 = 0x5eed_0001;
const SUPPORT_CALIBRATION_DRAWS: usize = 48;

/// Compares `‖Σ_k f_k‖_{H^{s,p}}` with `C ‖(Σ_k 4^{ks}|f_k|²)^{1/2}‖_{L^p}` for
/// `supp f̂_k ⊆ {|ξ| ≤ A 2^{k+1}}`, `C` calibrated by [`calibrate_support_constant`].
pub fn check_support_inequality(f_seq: &[GridFunction], s: f64, p: f64, a: f64, partition: &LPPartition) -> Result<SupportCheck> {
    validate_exponent(p)?;
    if !(s > 0.0) {
        return Err(Error::OutOfRange { what: "s", value: s });
    }
    if !(a > 0.0) {
        return Err(Error::OutOfRange { what: "A", value: a });
    }
    let grid = partition.grid();
    for (k, f) in f_seq.iter().enumerate() {
        grid.check_same(f.grid())?;
        let bound = a * (k as f64 + 1.0).exp2();
        let peak = f.spectrum().iter().map(|c| c.norm()).fold(0.0, f64::max);
        for (i, c) in f.spectrum().iter().enumerate() {
            let freq = grid.frequency(i);
            if (freq.abs() as f64) > bound && c.norm() > SUPPORT_TOL * peak.max(f64::MIN_POSITIVE) {
                return Err(Error::SupportViolation { block: k, freq, bound });
            }
        }
    }
    let constant = calibrate_support_constant(grid, f_seq.len().max(1), s, p, a)?;
    let (lhs, sq) = support_sides(grid, f_seq, s, p)?;
    let rhs = constant * sq;
    Ok(SupportCheck { lhs, rhs, constant, ok: lhs <= rhs })
}

fn support_sides(grid: &PeriodicGrid, f_seq: &[GridFunction], s: f64, p: f64) -> Result<(f64, f64)> {
    let mut total = GridFunction::zeros(grid);
    for f in f_seq {
        total = total.add(f)?;
    }
    let lhs = sobolev_norm(&total, s, p)?;
    let weighted: Vec<Vec<C64>> = f_seq
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let w = (k as f64 * s).exp2();
            f.samples().iter().map(|v| v * w).collect()
        })
        .collect();
    Ok((lhs, square_sum_norm(&weighted, grid.size(), p)))
}

/// Largest ratio `lhs / square-function side` over a seeded family of admissible
/// sequences of the given length: top-of-support modes, coherent low modes and
/// random band-limited blocks.
pub fn calibrate_support_constant(grid: &PeriodicGrid, len: usize, s: f64, p: f64, a: f64) -> Result<f64> {
    let top = |k: usize| -> i64 { ((a * (k as f64 + 1.0).exp2()).floor() as i64).min(grid.max_frequency()) };
    let amp = |k: usize| C64::new((-(k as f64) * s).exp2(), 0.0);
    let mut family: Vec<Vec<GridFunction>> = Vec::new();
    for single in 0..len {
        family.push(
            (0..len)
                .map(|k| if k == single { GridFunction::mode(grid, top(k)) } else { GridFunction::zeros(grid) })
                .collect(),
        );
    }
    family.push((0..len).map(|k| GridFunction::mode(grid, top(k)).scale(amp(k))).collect());
    family.push((0..len).map(|k| GridFunction::mode(grid, 0).scale(amp(k))).collect());
    if a >= 0.5 {
        family.push((0..len).map(|k| GridFunction::mode(grid, 1).scale(amp(k))).collect());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SUPPORT_CALIBRATION_SEED);
    for _ in 0..SUPPORT_CALIBRATION_DRAWS {
        let seq = (0..len)
            .map(|k| {
                let f = crate::grid::random_band_limited(grid, top(k).max(0), rng.gen())?;
                let u: f64 = rng.gen_range(0.1..1.0);
                Ok(f.scale(amp(k) * u))
            })
            .collect::<Result<Vec<_>>>()?;
        family.push(seq);
    }
    let mut best: f64 = 0.0;
    for seq in &family {
        let (lhs, sq) = support_sides(grid, seq, s, p)?;
        if sq > 0.0 {
            best = best.max(lhs / sq);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, random_band_limited};

    fn cos_mode(grid: &PeriodicGrid, k: f64) -> GridFunction {
        GridFunction::from_real_fn(grid, move |x| (k * x).cos())
    }

    #[test]
    fn partition_values() {
        let g = make_grid(128).unwrap();
        for profile in [CutoffProfile::PolynomialSpline, CutoffProfile::SmoothedErf] {
            let part = make_partition(&g, profile);
            assert_eq!(part.levels(), 6);
            assert_eq!(part.psi(0, 0.0), 1.0);
            for j in 1..=6 {
                assert_eq!(part.psi(j, 0.0), 0.0);
            }
            assert_eq!(part.psi(3, 8.0), 1.0);
            let total: f64 = (0..=6).map(|j| part.psi(j, 37.0)).sum();
            assert!((total - 1.0).abs() < 1e-15);
            for i in 0..128 {
                let k = g.frequency(i) as f64;
                let sum: f64 = (0..=6).map(|j| part.block(j)[i]).sum();
                assert!((sum - 1.0).abs() < 1e-15, "k={k}");
                for j in 1..=6 {
                    let lo = (j as f64 - 1.0).exp2();
                    let hi = (j as f64 + 1.0).exp2();
                    if k.abs() < lo || k.abs() > hi {
                        assert_eq!(part.block(j)[i], 0.0);
                    }
                    let dil = part.psi(1, k / (j as f64 - 1.0).exp2());
                    assert!((part.block(j)[i] - dil).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn spline_derivative_matches_difference() {
        for profile in [CutoffProfile::PolynomialSpline, CutoffProfile::SmoothedErf] {
            for &xi in &[1.1, 1.37, 1.5, 1.8, -1.25] {
                let h = 1e-6;
                let fd = (profile.eval(xi + h) - profile.eval(xi - h)) / (2.0 * h);
                assert!((fd - profile.derivative(xi)).abs() < 1e-6, "{profile:?} {xi}");
            }
        }
    }

    #[test]
    fn uniform_constant_bounds() {
        // The kernel of ψ_0 integrates to 2πψ_0(0) = 2π, so c ≥ 1.
        for profile in [CutoffProfile::PolynomialSpline, CutoffProfile::SmoothedErf] {
            let c = uniform_bound_constant(profile);
            assert!(c >= 1.0 - 1e-9 && c < 3.0, "{profile:?}: {c}");
        }
    }

    #[test]
    fn multipliers() {
        let g = make_grid(64).unwrap();
        let part = make_partition(&g, CutoffProfile::default());
        let f = random_band_limited(&g, 20, 4).unwrap();
        let same = apply_multiplier(&f, |_| C64::new(1.0, 0.0));
        assert!(same.max_abs_diff(&f) < 1e-15);
        let c8 = cos_mode(&g, 8.0);
        assert!(part.apply_block(&c8, 3).unwrap().max_abs_diff(&c8) < 1e-14);
        assert!(sup_norm(&part.apply_block(&c8, 5).unwrap()) < 1e-14);
        let mut acc = GridFunction::zeros(&g);
        for b in part.decompose(&f).unwrap() {
            acc = acc.add(&b).unwrap();
        }
        assert!(acc.max_abs_diff(&f) < 1e-13);
    }

    #[test]
    fn besov_closed_forms() {
        let g = make_grid(1024).unwrap();
        let part = make_partition(&g, CutoffProfile::default());
        assert!((besov_norm(&cos_mode(&g, 8.0), 1.0, &part).unwrap() - 8.0).abs() < 1e-12);
        let one = GridFunction::constant(&g, C64::new(1.0, 0.0));
        for s in [-1.0, 0.0, 2.5] {
            assert!((besov_norm(&one, s, &part).unwrap() - 1.0).abs() < 1e-14);
        }
        let lac = GridFunction::from_real_fn(&g, |x| (0..=8).map(|j| (-(j as f64) / 2.0).exp2() * ((1u64 << j) as f64 * x).cos()).sum());
        assert!((besov_norm(&lac, 0.5, &part).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn continuous_zygmund() {
        let g = make_grid(256).unwrap();
        let part = make_partition(&g, CutoffProfile::default());
        let one = GridFunction::constant(&g, C64::new(1.0, 0.0));
        assert!((zygmund_continuous_norm(&one, 0.7, 8, &part).unwrap() - 1.0).abs() < 1e-14);
        let c8 = cos_mode(&g, 8.0);
        let z8 = zygmund_continuous_norm(&c8, 0.0, 8, &part).unwrap();
        // Direct evaluation on the t grid: ψ(8/t) peaks at 15/8 for 8/t = 1.5.
        let direct = (0..=8 * 7)
            .map(|m| part.psi_continuous(8.0 / (m as f64 / 8.0).exp2()).abs())
            .fold(0.0, f64::max);
        assert!((z8 - direct).abs() < 1e-12);
        let b = besov_norm(&c8, 0.0, &part).unwrap();
        assert!(z8 / b <= 4.0 && b / z8 <= 4.0);
        let z16 = zygmund_continuous_norm(&c8, 0.0, 16, &part).unwrap();
        assert!((z16 - z8).abs() / z8 < 0.02);
        assert!(zygmund_continuous_norm(&c8, 0.0, 0, &part).is_err());
    }

    #[test]
    fn sobolev_and_square_function() {
        let g = make_grid(64).unwrap();
        let part = make_partition(&g, CutoffProfile::default());
        let one = GridFunction::constant(&g, C64::new(1.0, 0.0));
        assert!((sobolev_norm(&one, 2.0, 2.0).unwrap() - (2.0 * PI).sqrt()).abs() < 1e-12);
        let e3 = GridFunction::mode(&g, 3);
        assert!((sobolev_norm(&e3, 1.0, 2.0).unwrap() - (2.0 * PI).sqrt() * 10f64.sqrt()).abs() < 1e-12);
        let f = random_band_limited(&g, 10, 2).unwrap();
        assert_eq!(sobolev_norm(&f, 0.0, 3.0).unwrap(), lp_norm(&f, 3.0).unwrap());
        let c8 = cos_mode(&g, 8.0);
        assert!((square_function_norm(&c8, 1.0, 2.0, &part).unwrap() - 8.0 * PI.sqrt()).abs() < 1e-11);
        assert_eq!(square_function_norm(&GridFunction::zeros(&g), 1.0, 2.0, &part).unwrap(), 0.0);
    }

    #[test]
    fn support_inequality() {
        let g = make_grid(128).unwrap();
        let part = make_partition(&g, CutoffProfile::default());
        let single = vec![cos_mode(&g, 1.0)];
        let chk = check_support_inequality(&single, 1.0, 2.0, 1.0, &part).unwrap();
        assert!(chk.ok && chk.lhs / chk.rhs <= 1.0);
        let zeros = vec![GridFunction::zeros(&g); 4];
        let chk = check_support_inequality(&zeros, 1.0, 2.0, 1.0, &part).unwrap();
        assert!(chk.ok && chk.lhs == 0.0 && chk.rhs == 0.0);
        let s = 0.7;
        let seq: Vec<_> = (0..=5)
            .map(|k| GridFunction::mode(&g, 1 << k).scale(C64::new((-(k as f64) * s).exp2(), 0.0)))
            .collect();
        assert!(check_support_inequality(&seq, s, 2.0, 1.0, &part).unwrap().ok);
        let bad = vec![GridFunction::mode(&g, 5)];
        assert!(matches!(check_support_inequality(&bad, 1.0, 2.0, 1.0, &part), Err(Error::SupportViolation { .. })));
    }
}
