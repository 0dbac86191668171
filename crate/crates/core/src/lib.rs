//! Nonparametric test for a constant coefficient of variation, `m(x) = c·σ(x)`.
//!
//! The pipeline: local linear estimates of the mean and variance functions
//! ([`smoothing`]), the kernel U-statistic `T_n(ĉ)` and the scale estimate
//! `ĉ²` ([`statistic`]), smooth-bootstrap calibration ([`bootstrap`]), the
//! simulation models ([`generators`]) and a seeded Monte Carlo driver
//! ([`harness`]).

pub mod bootstrap;
pub mod error;
pub mod exec;
pub mod generators;
pub mod harness;
pub mod rng;
pub mod smoothing;
pub mod statistic;

pub use error::{Error, Result};
pub use exec::Execution;
pub use smoothing::{Bandwidths, Kernel, Sample, SmootherFit, WeightFn};
