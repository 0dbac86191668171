use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Compactly supported trimming weight.
///
/// Zero outside `[lower, upper]`, one on `[lower + ramp, upper - ramp]`, and a
/// quintic smoothstep in between, which keeps the function `C²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightFn {
    lower: f64,
    upper: f64,
    ramp: f64,
}

#[inline]
fn smoothstep(t: f64) -> f64 {
    t * t * t * (t * (6.0 * t - 15.0) + 10.0)
}

impl WeightFn {
    pub fn new(lower: f64, upper: f64, ramp: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && ramp.is_finite()) {
            return Err(Error::InvalidParameter("weight bounds must be finite".into()));
        }
        if lower >= upper {
            return Err(Error::InvalidParameter(format!(
                "weight needs lower < upper, got [{lower}, {upper}]"
            )));
        }
        if ramp <= 0.0 || 2.0 * ramp > upper - lower {
            return Err(Error::InvalidParameter(format!(
                "weight ramp {ramp} must be positive and at most half of the support width"
            )));
        }
        Ok(WeightFn { lower, upper, ramp })
    }

    /// Weight equal to one on all of `[lo, hi]`, ramping off just outside it.
    pub fn covering(lo: f64, hi: f64) -> Self {
        let width = (hi - lo).abs().max(lo.abs().max(hi.abs())).max(1.0);
        let ramp = 1e-6 * width;
        WeightFn {
            lower: lo.min(hi) - ramp,
            upper: lo.max(hi) + ramp,
            ramp,
        }
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn ramp(&self) -> f64 {
        self.ramp
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.lower || x >= self.upper {
            0.0
        } else if x < self.lower + self.ramp {
            smoothstep((x - self.lower) / self.ramp)
        } else if x > self.upper - self.ramp {
            smoothstep((self.upper - x) / self.ramp)
        } else {
            1.0
        }
    }

    pub fn eval_all(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.eval(x)).collect()
    }

    /// True when `other` vanishes wherever `self` does.
    pub fn contains(&self, other: &WeightFn) -> bool {
        self.lower <= other.lower && other.upper <= self.upper
    }
}
