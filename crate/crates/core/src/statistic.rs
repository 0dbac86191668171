//! The U-statistic `T_n(c)`, the scale estimate `ĉ²`, the six-term
//! decomposition of `T_n` and the plug-in null variance `μ0²`.
//!
//! `T_n(c) = 1/(n(n-1)) Σ_{i≠j} K_g(X_i - X_j) φ_i φ_j` with
//! `φ_i = {c² Y_i² - (c²+1) m̂²(X_i)} w(X_i)`. Only pairs within `g` times the
//! kernel radius contribute, so [`PairTable`] enumerates them once over sorted
//! predictors and folds `K_g · w_i · w_j` into a single pair weight. The
//! bootstrap reuses the table, since predictors never change across
//! replicates.
//!
//! When a second weight `w*` is supplied the statistic switches to the
//! doubly weighted form: `w*` replaces `w` inside `T_n`, and `ĉ²` weights its
//! sums by `(w*)³`. The matching weighted mean and variance fits are the
//! caller's responsibility (see [`crate::bootstrap::Pipeline`]).

use serde::Serialize;

use crate::bootstrap::standardize_residuals;
use crate::error::{Error, Result};
use crate::smoothing::{mean, variance, Kernel, Sample, SmootherFit, SortedAxis, WeightFn};

#[derive(Debug, Clone)]
pub struct StatisticInput<'a> {
    pub sample: &'a Sample,
    pub fit: &'a SmootherFit,
    pub g: f64,
    pub kernel: Kernel,
    pub w: WeightFn,
    pub w_star: Option<WeightFn>,
}

impl<'a> StatisticInput<'a> {
    pub fn new(
        sample: &'a Sample,
        fit: &'a SmootherFit,
        g: f64,
        kernel: Kernel,
        w: WeightFn,
        w_star: Option<WeightFn>,
    ) -> Result<Self> {
        let n = sample.n();
        if fit.m_hat.len() != n || fit.sigma2_hat.len() != n || fit.residuals.len() != n {
            return Err(Error::LengthMismatch { x: n, y: fit.m_hat.len() });
        }
        if !(g.is_finite() && g > 0.0) {
            return Err(Error::InvalidParameter(format!("g must be positive, got {g}")));
        }
        if let Some(ws) = &w_star {
            if !w.contains(ws) {
                return Err(Error::InvalidParameter(
                    "support of w* must lie inside the support of w".into(),
                ));
            }
        }
        Ok(StatisticInput { sample, fit, g, kernel, w, w_star })
    }

    /// Weight applied inside `T_n`: `w*` when present, `w` otherwise.
    pub fn statistic_weights(&self) -> Vec<f64> {
        self.w_star.as_ref().unwrap_or(&self.w).eval_all(self.sample.x())
    }

    /// Weight of the `ĉ²` sums: `w` or `(w*)³`, zeroed outside the trimmed range.
    pub fn scale_weights(&self) -> Vec<f64> {
        let mask = trim_mask(self.sample);
        let base: Vec<f64> = match &self.w_star {
            Some(ws) => ws.eval_all(self.sample.x()).into_iter().map(|v| v * v * v).collect(),
            None => self.w.eval_all(self.sample.x()),
        };
        base.iter().zip(&mask).map(|(a, b)| a * b).collect()
    }
}

/// Indicator of `[X_(⌊0.05n⌋), X_(⌊0.95n⌋)]`.
pub fn trim_mask(sample: &Sample) -> Vec<f64> {
    let (lo, hi) = sample.trimmed_range();
    sample
        .x()
        .iter()
        .map(|&x| if (lo..=hi).contains(&x) { 1.0 } else { 0.0 })
        .collect()
}

/// Pairs `i < j` with nonzero `K_g(X_i - X_j) w_i w_j`.
#[derive(Debug, Clone)]
pub struct PairTable {
    n: usize,
    pairs: Vec<(u32, u32, f64)>,
}

impl PairTable {
    pub fn new(x: &[f64], weights: &[f64], g: f64, kernel: &Kernel) -> Self {
        let axis = SortedAxis::new(x);
        let reach = g * kernel.support_radius();
        let mut pairs = Vec::new();
        for a in 0..x.len() {
            let i = axis.index(a);
            if weights[i] == 0.0 {
                continue;
            }
            let xa = axis.value(a);
            for b in a + 1..x.len() {
                let xb = axis.value(b);
                if xb - xa > reach {
                    break;
                }
                let j = axis.index(b);
                let pw = kernel.scaled(xa - xb, g) * weights[i] * weights[j];
                if pw != 0.0 {
                    pairs.push((i as u32, j as u32, pw));
                }
            }
        }
        PairTable { n: x.len(), pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `1/(n(n-1)) Σ_{i≠j} pw_ij a_i b_j`, accumulated over the stored `i < j` pairs.
    pub fn cross(&self, a: &[f64], b: &[f64]) -> f64 {
        let sum: f64 = self
            .pairs
            .iter()
            .map(|&(i, j, pw)| {
                let (i, j) = (i as usize, j as usize);
                pw * (a[i] * b[j] + a[j] * b[i])
            })
            .sum();
        sum / (self.n as f64 * (self.n as f64 - 1.0))
    }

    /// `T_n(c)` for responses `y` and fitted means `m_hat`.
    pub fn evaluate(&self, y: &[f64], m_hat: &[f64], c2: f64) -> f64 {
        let psi = unweighted_phi(y, m_hat, c2);
        self.cross(&psi, &psi)
    }
}

fn unweighted_phi(y: &[f64], m_hat: &[f64], c2: f64) -> Vec<f64> {
    y.iter()
        .zip(m_hat)
        .map(|(y, m)| c2 * y * y - (c2 + 1.0) * m * m)
        .collect()
}

/// `T_n(c)` from raw slices; `weights` holds `w(X_i)`.
pub fn t_statistic_parts(
    x: &[f64],
    y: &[f64],
    m_hat: &[f64],
    weights: &[f64],
    g: f64,
    kernel: &Kernel,
    c2: f64,
) -> f64 {
    PairTable::new(x, weights, g, kernel).evaluate(y, m_hat, c2)
}

pub fn t_statistic(input: &StatisticInput<'_>, c2: f64) -> f64 {
    t_statistic_parts(
        input.sample.x(),
        input.sample.y(),
        &input.fit.m_hat,
        &input.statistic_weights(),
        input.g,
        &input.kernel,
        c2,
    )
}

/// `n √g T_n`, the scale on which `T_n` is asymptotically `N(0, μ0²)` under the null.
pub fn standardized(t: f64, n: usize, g: f64) -> f64 {
    n as f64 * g.sqrt() * t
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaleEstimate {
    pub c2_hat: f64,
    pub numerator: f64,
    pub denominator: f64,
}

/// `ĉ² = Σ m̂² r̂² ω / Σ (σ̂²)² ω` for precomputed weights `ω`.
pub fn scale_estimate_parts(
    m_hat: &[f64],
    residuals: &[f64],
    sigma2_hat: &[f64],
    weights: &[f64],
) -> Result<ScaleEstimate> {
    let n = m_hat.len() as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..m_hat.len() {
        let w = weights[i];
        if w == 0.0 {
            continue;
        }
        num += m_hat[i] * m_hat[i] * residuals[i] * residuals[i] * w;
        den += sigma2_hat[i] * sigma2_hat[i] * w;
    }
    let (numerator, denominator) = (num / n, den / n);
    if !(denominator > 0.0) {
        return Err(Error::ZeroDenominator);
    }
    Ok(ScaleEstimate { c2_hat: numerator / denominator, numerator, denominator })
}

pub fn estimate_c2(input: &StatisticInput<'_>) -> Result<ScaleEstimate> {
    scale_estimate_parts(
        &input.fit.m_hat,
        &input.fit.residuals,
        &input.fit.sigma2_hat,
        &input.scale_weights(),
    )
}

/// The six U-statistics whose combination reproduces `T_n(c)` exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Decomposition {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
    pub t5: f64,
    pub t6: f64,
}

impl Decomposition {
    /// `(c²+1)² t1 - 2(c²+1)(2c² t2 - t3) + t4 - 4c²(t5 - c² t6)`.
    pub fn recombine(&self, c2: f64) -> f64 {
        let a = c2 + 1.0;
        a * a * self.t1 - 2.0 * a * (2.0 * c2 * self.t2 - self.t3) + self.t4
            - 4.0 * c2 * (self.t5 - c2 * self.t6)
    }
}

/// Splits `T_n(c)` into terms driven by the estimation error
/// `δ_i = m̂²(X_i) - m²(X_i)`, by `Δ_i = m²(X_i) - c² σ²(X_i) ε_i²` and by
/// `m(X_i) σ(X_i) ε_i`, where `ε_i = (Y_i - m(X_i)) / σ(X_i)` uses the true
/// `m` and `σ`.
pub fn decompose<M, S>(input: &StatisticInput<'_>, c2: f64, m: M, sigma: S) -> Decomposition
where
    M: Fn(f64) -> f64,
    S: Fn(f64) -> f64,
{
    let x = input.sample.x();
    let y = input.sample.y();
    let n = x.len();
    let mut delta = Vec::with_capacity(n);
    let mut big_delta = Vec::with_capacity(n);
    let mut cross = Vec::with_capacity(n);
    for i in 0..n {
        let (mi, si) = (m(x[i]), sigma(x[i]));
        let eps = (y[i] - mi) / si;
        let mh = input.fit.m_hat[i];
        delta.push(mh * mh - mi * mi);
        big_delta.push(mi * mi - c2 * si * si * eps * eps);
        cross.push(mi * si * eps);
    }
    let table = PairTable::new(x, &input.statistic_weights(), input.g, &input.kernel);
    Decomposition {
        t1: table.cross(&delta, &delta),
        t2: table.cross(&delta, &cross),
        t3: table.cross(&delta, &big_delta),
        t4: table.cross(&big_delta, &big_delta),
        t5: table.cross(&big_delta, &cross),
        t6: table.cross(&cross, &cross),
    }
}

/// Kernel density estimate at each observation with bandwidth
/// `1.06 · sd(x) · n^{-1/5}`.
pub fn density_at_points(x: &[f64], kernel: &Kernel) -> Vec<f64> {
    let n = x.len() as f64;
    let sd = variance(x).sqrt();
    let sd = if sd > 0.0 { sd } else { 1.0 };
    let b = 1.06 * sd * n.powf(-0.2);
    let axis = SortedAxis::new(x);
    let reach = b * kernel.support_radius();
    x.iter()
        .map(|&e| {
            let (lo, hi) = axis.window(e - reach, e + reach);
            (lo..hi).map(|p| kernel.scaled(e - axis.value(p), b)).sum::<f64>() / n
        })
        .collect()
}

/// `2 · mean_i[{-1 + 4c² + 4c m3 + m4}² m̂⁸ f̂ w⁴] · ∫K²`.
pub fn mu0_from_parts(
    m_hat: &[f64],
    density: &[f64],
    weights: &[f64],
    m3: f64,
    m4: f64,
    c2: f64,
    kernel: &Kernel,
) -> f64 {
    let c = c2.sqrt();
    let lead = (-1.0 + 4.0 * c2 + 4.0 * c * m3 + m4).powi(2);
    let avg = mean(
        &m_hat
            .iter()
            .zip(density)
            .zip(weights)
            .map(|((m, f), w)| lead * m.powi(8) * f * w.powi(4))
            .collect::<Vec<_>>(),
    );
    2.0 * avg * kernel.roughness()
}

/// Plug-in estimate of the null variance `μ0²` of `n √g T_n(c)`.
///
/// `m3` and `m4` are global moments of the standardized residuals. This is a
/// diagnostic only; calibration goes through the bootstrap.
pub fn mu0_plugin(input: &StatisticInput<'_>, c2: f64) -> Result<f64> {
    if input.sample.n() < 10 {
        return Err(Error::TooFewObservations { min: 10, got: input.sample.n() });
    }
    let eps = standardize_residuals(input.sample, input.fit)?;
    let m3 = mean(&eps.iter().map(|e| e.powi(3)).collect::<Vec<_>>());
    let m4 = mean(&eps.iter().map(|e| e.powi(4)).collect::<Vec<_>>());
    let density = density_at_points(input.sample.x(), &input.kernel);
    Ok(mu0_from_parts(
        &input.fit.m_hat,
        &density,
        &input.statistic_weights(),
        m3,
        m4,
        c2,
        &input.kernel,
    ))
}
