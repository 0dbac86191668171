//! Kernels, local linear mean and variance estimation, and cross-validated
//! bandwidth choice.

mod cv;
mod kernel;
mod local_linear;
mod sample;
mod weight;

pub use cv::{cv_bandwidth, cv_score, default_grid, log_grid};
pub use kernel::{Kernel, KernelFamily};
pub use local_linear::{local_linear_fit, LinearSmoother};
pub use sample::{Sample, MIN_OBSERVATIONS};
pub use weight::WeightFn;

pub(crate) use local_linear::SortedAxis;
pub(crate) use sample::{mean, variance};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `g` above `10 · h_mean²` is flagged as outside the `g = o(h²)` regime.
pub const REGIME_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bandwidths {
    pub h_mean: f64,
    pub h_var: f64,
    pub g: f64,
}

impl Bandwidths {
    pub fn new(h_mean: f64, h_var: f64, g: f64) -> Result<Self> {
        for (name, v) in [("h_mean", h_mean), ("h_var", h_var), ("g", g)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Bandwidths { h_mean, h_var, g })
    }

    pub fn in_asymptotic_regime(&self) -> bool {
        self.g <= self.h_mean * self.h_mean * REGIME_FACTOR
    }
}

/// Default pair bandwidth `g = n^{-1/2} · span(x)`.
pub fn default_g(sample: &Sample) -> f64 {
    let span = sample.x_span();
    let span = if span > 0.0 { span } else { 1.0 };
    span / (sample.n() as f64).sqrt()
}

/// Lower clamp for variance estimates: `1e-8 · Var(y)`, or `1e-12` for constant `y`.
pub fn variance_floor(y: &[f64]) -> f64 {
    let v = variance(y);
    if v > 0.0 {
        1e-8 * v
    } else {
        1e-12
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmootherFit {
    pub m_hat: Vec<f64>,
    pub sigma2_hat: Vec<f64>,
    pub residuals: Vec<f64>,
    pub bandwidths: Bandwidths,
}

impl SmootherFit {
    /// Assembles a fit from given mean and variance values, deriving
    /// residuals as `y - m_hat`.
    pub fn from_parts(y: &[f64], m_hat: Vec<f64>, sigma2_hat: Vec<f64>, bandwidths: Bandwidths) -> Result<Self> {
        if m_hat.len() != y.len() || sigma2_hat.len() != y.len() {
            return Err(Error::LengthMismatch { x: y.len(), y: m_hat.len().min(sigma2_hat.len()) });
        }
        let residuals = y.iter().zip(&m_hat).map(|(y, m)| y - m).collect();
        Ok(SmootherFit { m_hat, sigma2_hat, residuals, bandwidths })
    }

    pub fn sigma_hat(&self) -> Vec<f64> {
        self.sigma2_hat.iter().map(|s| s.sqrt()).collect()
    }
}

/// Local linear estimate of the regression function at the observed predictors.
pub fn fit_mean(sample: &Sample, h: f64, kernel: &Kernel, inner_weight: Option<&WeightFn>) -> Result<Vec<f64>> {
    local_linear_fit(sample.x(), sample.x(), sample.y(), h, kernel, inner_weight)
}

/// Local linear fit of the squared residuals `(y_i - m_hat_i)²`, clamped at
/// [`variance_floor`].
pub fn fit_variance(
    sample: &Sample,
    m_hat: &[f64],
    h: f64,
    kernel: &Kernel,
    inner_weight: Option<&WeightFn>,
) -> Result<Vec<f64>> {
    if m_hat.len() != sample.n() {
        return Err(Error::LengthMismatch { x: sample.n(), y: m_hat.len() });
    }
    let r2: Vec<f64> = sample.y().iter().zip(m_hat).map(|(y, m)| (y - m).powi(2)).collect();
    let floor = variance_floor(sample.y());
    let fitted = local_linear_fit(sample.x(), sample.x(), &r2, h, kernel, inner_weight)?;
    Ok(fitted.into_iter().map(|v| v.max(floor)).collect())
}

/// Mean and variance fits with the given bandwidths. `mean_weight` and
/// `var_weight` are the optional inner weights of the two regressions.
pub fn fit(
    sample: &Sample,
    bandwidths: Bandwidths,
    kernel: &Kernel,
    mean_weight: Option<&WeightFn>,
    var_weight: Option<&WeightFn>,
) -> Result<SmootherFit> {
    let m_hat = fit_mean(sample, bandwidths.h_mean, kernel, mean_weight)?;
    let sigma2_hat = fit_variance(sample, &m_hat, bandwidths.h_var, kernel, var_weight)?;
    SmootherFit::from_parts(sample.y(), m_hat, sigma2_hat, bandwidths)
}

/// Selects `h_mean` by CV on `y`, then `h_var` by CV on the squared
/// residuals of the `h_mean` fit.
pub fn select_bandwidths(sample: &Sample, kernel: &Kernel, grid: &[f64], g: f64) -> Result<Bandwidths> {
    let h_mean = cv_bandwidth(sample, sample.y(), kernel, grid)?;
    let m_hat = fit_mean(sample, h_mean, kernel, None)?;
    let r2: Vec<f64> = sample.y().iter().zip(&m_hat).map(|(y, m)| (y - m).powi(2)).collect();
    let h_var = cv_bandwidth(sample, &r2, kernel, grid)?;
    Bandwidths::new(h_mean, h_var, g)
}

#[cfg(test)]
mod tests;
