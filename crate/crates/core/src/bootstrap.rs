//! Smooth-bootstrap calibration of `T_n(ĉ)`.
//!
//! Residuals of the observed fit are standardized, resampled with
//! replacement and jittered by `v · N(0, 1)`; replicate responses are then
//! generated from the fitted null model `Y* = ĉ σ̂ + σ̂ ε*`. Each replicate
//! refits the mean and variance (with the data-selected bandwidths unless
//! `recv` asks for fresh cross-validation), recomputes `ĉ²*` and `T_n*(ĉ*)`,
//! and the observed statistic is compared against the order statistics of
//! the replicates.
//!
//! Replicate `b`, attempt `a` draws from the stream `(seed, b, a)`, so the
//! outcome does not depend on scheduling or thread count.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::rng;
use crate::smoothing::{
    default_g, default_grid, mean, select_bandwidths, variance, variance_floor, Bandwidths, Kernel,
    LinearSmoother, Sample, SmootherFit, WeightFn,
};
use crate::statistic::{scale_estimate_parts, trim_mask, PairTable, ScaleEstimate};

pub const DEFAULT_REPLICATES: usize = 100;
pub const DEFAULT_SMOOTHING_V: f64 = 0.1;
pub const DEFAULT_ALPHAS: [f64; 4] = [0.025, 0.05, 0.10, 0.20];
/// Redraws allowed after a replicate's first attempt fails.
pub const MAX_REDRAWS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub smoothing_v: f64,
    pub alphas: Vec<f64>,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            replicates: DEFAULT_REPLICATES,
            smoothing_v: DEFAULT_SMOOTHING_V,
            alphas: DEFAULT_ALPHAS.to_vec(),
            seed: 0,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidParameter("need at least one bootstrap replicate".into()));
        }
        if !(self.smoothing_v.is_finite() && self.smoothing_v >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "smoothing parameter v must be nonnegative, got {}",
                self.smoothing_v
            )));
        }
        if self.alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            return Err(Error::InvalidParameter("alphas must lie in (0, 1)".into()));
        }
        if self.alphas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("alphas must be strictly increasing".into()));
        }
        Ok(())
    }

    /// 1-indexed order statistic `⌊B(1-α)⌋`, clamped to `[1, B]`.
    pub fn critical_index(&self, alpha: f64) -> usize {
        let b = self.replicates;
        let k = (b as f64 * (1.0 - alpha) + 1e-9).floor() as usize;
        k.clamp(1, b)
    }
}

/// Bandwidth, kernel and weight choices. `None` fields resolve to data-driven
/// defaults: CV bandwidths over [`default_grid`], `g` from [`default_g`],
/// `w` equal to one over the observed predictor range and `w*` ramping in
/// over the trimmed range `[X_(⌊0.05n⌋), X_(⌊0.95n⌋)]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SmoothingConfig {
    pub kernel: Kernel,
    pub h_mean: Option<f64>,
    pub h_var: Option<f64>,
    pub g: Option<f64>,
    pub grid: Option<Vec<f64>>,
    pub weight: Option<WeightFn>,
    pub weight_star: Option<WeightFn>,
    /// Re-run cross-validation on every bootstrap replicate.
    pub recv: bool,
}

/// Default `w*`: support equal to the trimmed predictor range, ramp 10% of its width.
pub fn default_weight_star(sample: &Sample) -> Result<WeightFn> {
    let (lo, hi) = sample.trimmed_range();
    WeightFn::new(lo, hi, 0.1 * (hi - lo))
}

/// Observed-data quantities of one pipeline evaluation.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub fit: SmootherFit,
    pub scale: ScaleEstimate,
    pub t: f64,
}

/// Everything that depends only on the predictors: smoother matrices, pair
/// table and `ĉ²` weights. Evaluating it on a response vector gives the fit,
/// `ĉ²` and `T_n(ĉ)`.
#[derive(Debug, Clone)]
pub struct Pipeline {
    kernel: Kernel,
    bandwidths: Bandwidths,
    w: WeightFn,
    w_star: Option<WeightFn>,
    mean_smoother: LinearSmoother,
    var_smoother: LinearSmoother,
    pairs: PairTable,
    scale_weights: Vec<f64>,
}

impl Pipeline {
    /// Resolves defaults against `sample` (running CV where bandwidths are
    /// not fixed) and precomputes the operators.
    pub fn prepare(sample: &Sample, cfg: &SmoothingConfig, weighted: bool) -> Result<Self> {
        let g = cfg.g.unwrap_or_else(|| default_g(sample));
        let bandwidths = match (cfg.h_mean, cfg.h_var) {
            (Some(hm), Some(hv)) => Bandwidths::new(hm, hv, g)?,
            _ => {
                let grid = cfg.grid.clone().unwrap_or_else(|| default_grid(sample));
                let cv = select_bandwidths(sample, &cfg.kernel, &grid, g)?;
                Bandwidths::new(cfg.h_mean.unwrap_or(cv.h_mean), cfg.h_var.unwrap_or(cv.h_var), g)?
            }
        };
        let (lo, hi) = sample.x_range();
        let w = cfg.weight.unwrap_or_else(|| WeightFn::covering(lo, hi));
        let w_star = if weighted {
            Some(match cfg.weight_star {
                Some(ws) => ws,
                None => default_weight_star(sample)?,
            })
        } else {
            None
        };
        Self::with_bandwidths(sample, cfg.kernel, bandwidths, w, w_star)
    }

    pub fn with_bandwidths(
        sample: &Sample,
        kernel: Kernel,
        bandwidths: Bandwidths,
        w: WeightFn,
        w_star: Option<WeightFn>,
    ) -> Result<Self> {
        if let Some(ws) = &w_star {
            if !w.contains(ws) {
                return Err(Error::InvalidParameter(
                    "support of w* must lie inside the support of w".into(),
                ));
            }
        }
        let x = sample.x();
        let (mean_inner, var_inner) = match &w_star {
            Some(ws) => (Some(&w), Some(ws)),
            None => (None, None),
        };
        let mean_smoother = LinearSmoother::local_linear(x, x, bandwidths.h_mean, &kernel, mean_inner)?;
        let var_smoother = LinearSmoother::local_linear(x, x, bandwidths.h_var, &kernel, var_inner)?;
        let stat_w = w_star.as_ref().unwrap_or(&w).eval_all(x);
        let pairs = PairTable::new(x, &stat_w, bandwidths.g, &kernel);
        let mask = trim_mask(sample);
        let scale_weights = match &w_star {
            Some(ws) => ws.eval_all(x).iter().zip(&mask).map(|(v, m)| v * v * v * m).collect(),
            None => w.eval_all(x).iter().zip(&mask).map(|(v, m)| v * m).collect(),
        };
        Ok(Pipeline { kernel, bandwidths, w, w_star, mean_smoother, var_smoother, pairs, scale_weights })
    }

    pub fn bandwidths(&self) -> Bandwidths {
        self.bandwidths
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn weight(&self) -> WeightFn {
        self.w
    }

    pub fn weight_star(&self) -> Option<WeightFn> {
        self.w_star
    }

    pub fn evaluate(&self, y: &[f64]) -> Result<Evaluation> {
        let m_hat = self.mean_smoother.apply(y);
        let residuals: Vec<f64> = y.iter().zip(&m_hat).map(|(y, m)| y - m).collect();
        let floor = variance_floor(y);
        let sigma2_hat: Vec<f64> = self
            .var_smoother
            .apply_map(&residuals, |r| r * r)
            .into_iter()
            .map(|v| v.max(floor))
            .collect();
        let scale = scale_estimate_parts(&m_hat, &residuals, &sigma2_hat, &self.scale_weights)?;
        let t = self.pairs.evaluate(y, &m_hat, scale.c2_hat);
        Ok(Evaluation {
            fit: SmootherFit { m_hat, sigma2_hat, residuals, bandwidths: self.bandwidths },
            scale,
            t,
        })
    }
}

/// `(η_i - η̄) / sd(η)` with the `1/(n-1)` divisor.
pub fn standardize(eta: &[f64]) -> Result<Vec<f64>> {
    let m = mean(eta);
    let sd = variance(eta).sqrt();
    let scale = eta.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    if eta.iter().all(|&e| e == eta[0]) || !(sd > 1e-14 * scale) {
        return Err(Error::ZeroResidualSpread);
    }
    Ok(eta.iter().map(|e| (e - m) / sd).collect())
}

/// Standardized residuals `η_i = (Y_i - m̂(X_i)) / σ̂(X_i)`, centred and scaled.
pub fn standardize_residuals(sample: &Sample, fit: &SmootherFit) -> Result<Vec<f64>> {
    let eta: Vec<f64> = sample
        .y()
        .iter()
        .zip(&fit.m_hat)
        .zip(&fit.sigma2_hat)
        .map(|((y, m), s2)| (y - m) / s2.sqrt())
        .collect();
    standardize(&eta)
}

/// `ε*_i = ε̃*_i + v N_i`, with `ε̃*` resampled from `eps_hat`.
pub fn draw_bootstrap_errors<R: Rng + ?Sized>(eps_hat: &[f64], v: f64, rng: &mut R) -> Vec<f64> {
    let n = eps_hat.len();
    (0..n)
        .map(|_| {
            let pick = eps_hat[rng.random_range(0..n)];
            let noise: f64 = rng.sample(StandardNormal);
            pick + v * noise
        })
        .collect()
}

/// `Y*_i = ĉ σ̂(X_i) + σ̂(X_i) e_i` on the original predictors.
pub fn make_null_sample(sample: &Sample, fit: &SmootherFit, c2_hat: f64, errors: &[f64]) -> Result<Sample> {
    sample.with_response(null_responses(&fit.sigma2_hat, c2_hat, errors)?)
}

fn null_responses(sigma2_hat: &[f64], c2_hat: f64, errors: &[f64]) -> Result<Vec<f64>> {
    if errors.len() != sigma2_hat.len() {
        return Err(Error::LengthMismatch { x: sigma2_hat.len(), y: errors.len() });
    }
    let c = c2_hat.sqrt();
    Ok(sigma2_hat
        .iter()
        .zip(errors)
        .map(|(s2, e)| {
            let s = s2.sqrt();
            c * s + s * e
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Decision {
    pub alpha: f64,
    pub critical_value: f64,
    pub reject: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestOutcome {
    pub t_observed: f64,
    pub c2_hat: f64,
    pub t_star: Vec<f64>,
    pub p_value: f64,
    pub rejections: Vec<Decision>,
    pub bandwidths: Bandwidths,
    pub weighted: bool,
    /// Replicates that needed at least one redraw.
    pub redrawn: usize,
}

impl TestOutcome {
    pub fn rejects(&self, alpha: f64) -> Option<bool> {
        self.rejections.iter().find(|d| d.alpha == alpha).map(|d| d.reject)
    }
}

/// `(#{b : t*_b ≥ t} + 1) / (B + 1)`.
pub fn p_value(t_observed: f64, t_star: &[f64]) -> f64 {
    let exceed = t_star.iter().filter(|&&t| t >= t_observed).count();
    (exceed + 1) as f64 / (t_star.len() + 1) as f64
}

/// Rejects at level `α` when `t > t*_(⌊B(1-α)⌋)`.
pub fn decide(cfg: &BootstrapConfig, t_observed: f64, t_star: &[f64]) -> Vec<Decision> {
    let mut sorted = t_star.to_vec();
    sorted.sort_by(f64::total_cmp);
    cfg.alphas
        .iter()
        .map(|&alpha| {
            let critical_value = sorted[cfg.critical_index(alpha) - 1];
            Decision { alpha, critical_value, reject: t_observed > critical_value }
        })
        .collect()
}

/// Runs the full smooth-bootstrap test on `sample`.
pub fn bootstrap_test(
    sample: &Sample,
    cfg: &BootstrapConfig,
    smoothing: &SmoothingConfig,
    weighted: bool,
    exec: Execution,
) -> Result<TestOutcome> {
    cfg.validate()?;
    let pipeline = Pipeline::prepare(sample, smoothing, weighted)?;
    let observed = pipeline.evaluate(sample.y())?;
    let eps_hat = standardize_residuals(sample, &observed.fit)?;
    let c2_hat = observed.scale.c2_hat;

    let replicate = |b: usize| -> Result<(f64, bool)> {
        let mut last = None;
        for attempt in 0..=MAX_REDRAWS {
            let mut rng = rng::stream(cfg.seed, &[b as u64, attempt as u64]);
            let errors = draw_bootstrap_errors(&eps_hat, cfg.smoothing_v, &mut rng);
            let run = || -> Result<f64> {
                let y_star = null_responses(&observed.fit.sigma2_hat, c2_hat, &errors)?;
                if smoothing.recv {
                    let boot = sample.with_response(y_star)?;
                    let fresh = SmoothingConfig {
                        g: Some(pipeline.bandwidths.g),
                        weight: Some(pipeline.w),
                        weight_star: pipeline.w_star,
                        h_mean: None,
                        h_var: None,
                        ..smoothing.clone()
                    };
                    Ok(Pipeline::prepare(&boot, &fresh, weighted)?.evaluate(boot.y())?.t)
                } else {
                    Ok(pipeline.evaluate(&y_star)?.t)
                }
            };
            match run() {
                Ok(t) => return Ok((t, attempt > 0)),
                Err(e) => last = Some(e),
            }
        }
        Err(Error::ReplicateFailure {
            replicate: b,
            attempts: MAX_REDRAWS + 1,
            source: Box::new(last.expect("at least one attempt ran")),
        })
    };

    let results = exec.map_indexed(cfg.replicates, replicate);
    let mut t_star = Vec::with_capacity(cfg.replicates);
    let mut redrawn = 0;
    for r in results {
        let (t, redraw) = r?;
        t_star.push(t);
        redrawn += usize::from(redraw);
    }
    let rejections = decide(cfg, observed.t, &t_star);
    Ok(TestOutcome {
        t_observed: observed.t,
        c2_hat,
        p_value: p_value(observed.t, &t_star),
        t_star,
        rejections,
        bandwidths: pipeline.bandwidths,
        weighted,
        redrawn,
    })
}
