//! Mollifiers given by their Fourier profile `ρ̂`, regularisation `f ↦ f∗ρ_ε`
//! as the lattice multiplier `ρ̂(εk)`, and the ε-sweeps built on it.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{sup_norm, GridFunction, C64};
use crate::lp::{besov_norm, LPPartition};
use crate::sweep::{validate_eps_grid, SweepMeta, SweepReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MollifierKind {
    Gaussian,
    MomentVanishing,
    Custom,
}

impl FromStr for MollifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "momvan" | "moment_vanishing" | "moment-vanishing" => Ok(Self::MomentVanishing),
            "custom" => Ok(Self::Custom),
            other => Err(Error::UnknownName(other.to_string())),
        }
    }
}

type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Regularising profile `ρ` with `∫ρ = 1`, stored as `ρ̂`.
#[derive(Clone)]
pub struct Mollifier {
    kind: MollifierKind,
    name: String,
    profile: Profile,
    all_vanishing: bool,
}

impl fmt::Debug for Mollifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Mollifier")
            .field("kind", &self.kind)
            .field("name", &self.name)
            .field("all_vanishing", &self.all_vanishing)
            .finish()
    }
}

/// `e^{-ξ²/2}`.
pub fn gaussian_profile(xi: f64) -> f64 {
    (-0.5 * xi * xi).exp()
}

/// `1` on `|ξ| ≤ 1/2`, `0` on `|ξ| ≥ 1`, `erfc(tan(π(2|ξ| - 3/2)))/2` between.
pub fn moment_vanishing_profile(xi: f64) -> f64 {
    let a = xi.abs();
    if a <= 0.5 {
        1.0
    } else if a >= 1.0 {
        0.0
    } else {
        0.5 * libm::erfc((PI * (2.0 * a - 1.5)).tan())
    }
}

pub fn make_mollifier(kind: MollifierKind) -> Result<Mollifier> {
    match kind {
        MollifierKind::Gaussian => Ok(Mollifier {
            kind,
            name: "gaussian".into(),
            profile: Arc::new(gaussian_profile),
            all_vanishing: false,
        }),
        MollifierKind::MomentVanishing => Ok(Mollifier {
            kind,
            name: "momvan".into(),
            profile: Arc::new(moment_vanishing_profile),
            all_vanishing: true,
        }),
        MollifierKind::Custom => Err(Error::Invalid("a custom mollifier needs an explicit profile".into())),
    }
}

impl Mollifier {
    pub fn gaussian() -> Self {
        make_mollifier(MollifierKind::Gaussian).expect("builtin kind")
    }

    pub fn moment_vanishing() -> Self {
        make_mollifier(MollifierKind::MomentVanishing).expect("builtin kind")
    }

    /// A user profile; rejected unless `ρ̂(0) = 1` to within `1e-12`.
    pub fn custom(name: impl Into<String>, profile: impl Fn(f64) -> f64 + Send + Sync + 'static, all_vanishing: bool) -> Result<Self> {
        let at0 = profile(0.0);
        if !((at0 - 1.0).abs() <= 1e-12) {
            return Err(Error::NotAMollifier(at0));
        }
        Ok(Self { kind: MollifierKind::Custom, name: name.into(), profile: Arc::new(profile), all_vanishing })
    }

    pub fn kind(&self) -> MollifierKind {
        self.kind
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn all_vanishing(&self) -> bool {
        self.all_vanishing
    }

    /// `ρ̂(ξ)`.
    pub fn fourier(&self, xi: f64) -> f64 {
        (self.profile)(xi)
    }
}

pub(crate) fn validate_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::OutOfRange { what: "eps", value: eps });
    }
    Ok(())
}

/// Spectrum multiplied by `ρ̂(εk)`.
pub fn regularize(f: &GridFunction, mol: &Mollifier, eps: f64) -> Result<GridFunction> {
    validate_eps(eps)?;
    Ok(f.map_spectrum(|k| C64::new(mol.fourier(eps * k as f64), 0.0)))
}

/// `besov_norm(f_ε, s + r)` over the ε-grid.
pub fn zygmund_blowup_sweep(f: &GridFunction, mol: &Mollifier, s: f64, r: f64, eps_grid: &[f64], partition: &LPPartition) -> Result<SweepReport> {
    validate_eps_grid(eps_grid)?;
    let values = eps_grid
        .iter()
        .map(|&e| besov_norm(&regularize(f, mol, e)?, s + r, partition))
        .collect::<Result<Vec<_>>>()?;
    let meta = SweepMeta {
        label: "zygmund".into(),
        s: Some(s),
        r: Some(r),
        mollifier: Some(mol.name().into()),
        ..SweepMeta::default()
    };
    SweepReport::new(eps_grid.to_vec(), values, meta)
}

/// `sup_norm(f_ε)` over the ε-grid.
pub fn sup_norm_sweep(f: &GridFunction, mol: &Mollifier, eps_grid: &[f64]) -> Result<SweepReport> {
    validate_eps_grid(eps_grid)?;
    let values = eps_grid.iter().map(|&e| Ok(sup_norm(&regularize(f, mol, e)?))).collect::<Result<Vec<_>>>()?;
    let meta = SweepMeta { label: "sup".into(), mollifier: Some(mol.name().into()), ..SweepMeta::default() };
    SweepReport::new(eps_grid.to_vec(), values, meta)
}

/// Outcome of [`log_blowup_check`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogBlowupCheck {
    pub eps: Vec<f64>,
    pub ratios: Vec<f64>,
    /// max/min of the ratios over the last four ε.
    pub spread: f64,
    pub ok: bool,
}

pub const LOG_CHECK_TAIL: usize = 4;
pub const LOG_CHECK_SPREAD: f64 = 2.0;

/// Ratios `sup_norm(f_ε) / log(1/ε)`; requires a mollifier with vanishing moments.
pub fn log_blowup_check(f: &GridFunction, mol: &Mollifier, eps_grid: &[f64]) -> Result<LogBlowupCheck> {
    if !mol.all_vanishing() {
        return Err(Error::MomentsNotVanishing(mol.name().into()));
    }
    validate_eps_grid(eps_grid)?;
    if eps_grid.len() < LOG_CHECK_TAIL || eps_grid[0] >= 1.0 {
        return Err(Error::Invalid("log check needs at least four eps values below 1".into()));
    }
    let ratios = eps_grid
        .iter()
        .map(|&e| Ok(sup_norm(&regularize(f, mol, e)?) / (1.0 / e).ln()))
        .collect::<Result<Vec<_>>>()?;
    let tail = &ratios[ratios.len() - LOG_CHECK_TAIL..];
    let max = tail.iter().cloned().fold(f64::MIN, f64::max);
    let min = tail.iter().cloned().fold(f64::MAX, f64::min);
    let spread = if max == 0.0 { 1.0 } else { max / min };
    Ok(LogBlowupCheck { eps: eps_grid.to_vec(), ratios, spread, ok: spread < LOG_CHECK_SPREAD })
}
