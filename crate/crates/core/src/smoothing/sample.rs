use serde::Serialize;

use crate::error::{Error, Result};

pub const MIN_OBSERVATIONS: usize = 5;

/// Paired observations `(x_i, y_i)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Sample {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch { x: x.len(), y: y.len() });
        }
        if x.len() < MIN_OBSERVATIONS {
            return Err(Error::TooFewObservations {
                min: MIN_OBSERVATIONS,
                got: x.len(),
            });
        }
        if let Some(index) = x.iter().chain(&y).position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: index % x.len() });
        }
        Ok(Sample { x, y })
    }

    /// Same predictors, new responses.
    pub fn with_response(&self, y: Vec<f64>) -> Result<Self> {
        Sample::new(self.x.clone(), y)
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x_range(&self) -> (f64, f64) {
        min_max(&self.x)
    }

    pub fn x_span(&self) -> f64 {
        let (lo, hi) = self.x_range();
        hi - lo
    }

    /// Order statistics `X_(⌊0.05n⌋)` and `X_(⌊0.95n⌋)` (1-indexed, lower
    /// index clamped to 1). Ties fall back to original index order.
    pub fn trimmed_range(&self) -> (f64, f64) {
        let n = self.n();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| self.x[a].total_cmp(&self.x[b]).then(a.cmp(&b)));
        let lo = (n as f64 * 0.05).floor() as usize;
        let hi = (n as f64 * 0.95).floor() as usize;
        let lo = lo.clamp(1, n);
        let hi = hi.clamp(lo, n);
        (self.x[order[lo - 1]], self.x[order[hi - 1]])
    }
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample variance with the `1/(n-1)` divisor.
pub(crate) fn variance(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}
