//! Sampling errors of quantile estimates from finite samples.
//!
//! The crate estimates, by Monte Carlo, how much a sample quantile `q_p`
//! fluctuates for samples of size `N` from normal and gamma populations, and
//! summarises the result as a scaling coefficient `K(p)`:
//!
//! ```text
//! s_qp ~= K(p) * S / sqrt(N)
//! ```
//!
//! where `S` is the sample standard deviation. Modules, bottom-up:
//!
//! - [`distributions`]: population specs, samplers, reproducible streams.
//! - [`quantile`]: midpoint-rule quantile estimator and the probability grid.
//! - [`mc_engine`]: the replicate sweep producing a [`StdErrTable`].
//! - [`analysis`]: log-log scaling fits, `K(p)` extraction, breakpoints,
//!   bootstrap cross-check.
//! - [`formulas`]: closed-form `K(p)` relationships and their least-squares fit.
//! - [`io`]: run configuration, CSV tables, reports and figures.
//! - [`acceptance`]: the desk-scale acceptance criteria.

pub mod acceptance;
pub mod analysis;
pub mod distributions;
pub mod error;
pub mod formulas;
pub mod io;
pub mod mc_engine;
pub mod quantile;
pub mod reference;
pub mod stats;

pub use analysis::{Breakpoint, ScalingResult};
pub use distributions::{DistributionSpec, Family, RngStream};
pub use error::{Error, Result};
pub use formulas::{FitCoefficients, KForm};
pub use mc_engine::{McConfig, StdErrRow, StdErrTable};
pub use quantile::QuantileGrid;
