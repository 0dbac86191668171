//! Least squares leave-one-out cross-validation over a bandwidth grid.

use crate::error::{Error, Result};
use crate::smoothing::local_linear::{check_bandwidth, SortedAxis};
use crate::smoothing::{Kernel, Sample};

const DET_GUARD: f64 = 1e-12;
const GRID_POINTS: usize = 20;

/// 20 log-spaced bandwidths from 5% to 50% of the predictor span.
pub fn default_grid(sample: &Sample) -> Vec<f64> {
    let span = sample.x_span();
    let span = if span > 0.0 { span } else { 1.0 };
    log_grid(0.05 * span, 0.5 * span, GRID_POINTS)
}

pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

/// Leave-one-out squared prediction error `Σ (r_i - fit_{-i}(x_i))²`, or
/// `None` when some point has no neighbours within the kernel window.
pub fn cv_score(x: &[f64], response: &[f64], h: f64, kernel: &Kernel) -> Option<f64> {
    let axis = SortedAxis::new(x);
    cv_score_sorted(&axis, x, response, h, kernel)
}

fn cv_score_sorted(
    axis: &SortedAxis,
    x: &[f64],
    response: &[f64],
    h: f64,
    kernel: &Kernel,
) -> Option<f64> {
    let reach = h * kernel.support_radius();
    let mut score = 0.0;
    for (i, &e) in x.iter().enumerate() {
        let (lo, hi) = axis.window(e - reach, e + reach);
        let (mut s0, mut s1, mut s2, mut t0, mut t1) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for pos in lo..hi {
            let j = axis.index(pos);
            if j == i {
                continue;
            }
            let d = e - axis.value(pos);
            let k = kernel.scaled(d, h);
            if k > 0.0 {
                let r = response[j];
                s0 += k;
                s1 += k * d;
                s2 += k * d * d;
                t0 += k * r;
                t1 += k * d * r;
            }
        }
        if s0 <= 0.0 {
            return None;
        }
        let det = s0 * s2 - s1 * s1;
        let fit = if det > DET_GUARD * s0 * s0 * h.powi(4) {
            (s2 * t0 - s1 * t1) / det
        } else {
            t0 / s0
        };
        score += (response[i] - fit).powi(2);
    }
    Some(score)
}

/// Grid value minimizing the leave-one-out score.
///
/// Grid values where some leave-one-out fit is undefined are skipped. Scores
/// within `1e-12 · Σ r_i²` of the minimum count as ties and resolve to the
/// larger bandwidth.
pub fn cv_bandwidth(sample: &Sample, response: &[f64], kernel: &Kernel, grid: &[f64]) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("bandwidth grid is empty".into()));
    }
    if response.len() != sample.n() {
        return Err(Error::LengthMismatch { x: sample.n(), y: response.len() });
    }
    for w in grid.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidParameter("bandwidth grid must be strictly ascending".into()));
        }
    }
    for &h in grid {
        check_bandwidth(h)?;
    }
    let axis = SortedAxis::new(sample.x());
    let scored: Vec<(f64, f64)> = grid
        .iter()
        .filter_map(|&h| cv_score_sorted(&axis, sample.x(), response, h, kernel).map(|s| (h, s)))
        .collect();
    let best = scored
        .iter()
        .map(|&(_, s)| s)
        .fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return Err(Error::AllBandwidthsDegenerate);
    }
    let tol = 1e-12 * response.iter().map(|r| r * r).sum::<f64>();
    scored
        .iter()
        .rev()
        .find(|&&(_, s)| s <= best + tol)
        .map(|&(h, _)| h)
        .ok_or(Error::AllBandwidthsDegenerate)
}
