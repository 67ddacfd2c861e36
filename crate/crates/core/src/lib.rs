//! Pseudodifferential operators with Hölder-Zygmund symbols on the periodic torus,
//! sampled on uniform grids.

pub mod dsl;
pub mod estimator;
pub mod error;
pub mod grid;
pub mod lp;
pub mod mollifier;
pub mod paradiff;
pub mod quantizer;
pub mod suites;
pub mod sweep;
pub mod symbol;

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Error, Result};
pub use grid::{lp_norm, make_grid, random_band_limited, sup_norm, GridFunction, PeriodicGrid, C64};
pub use lp::{besov_norm, make_partition, CutoffProfile, LPPartition};
pub use mollifier::{make_mollifier, regularize, Mollifier, MollifierKind};
pub use quantizer::{apply, compose, quantize, quantize_dense, transpose, LatticeOperator};
pub use sweep::{fit_rate, parse_eps_grid, Rate, RateFit, SweepReport};
pub use symbol::{builtin, Builtin, Provenance, SampledSymbol};
