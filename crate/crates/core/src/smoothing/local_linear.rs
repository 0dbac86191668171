//! Local linear smoothing as an explicit sparse linear operator.
//!
//! The local linear estimate at `x` is linear in the responses,
//! `m̂(x) = Σ_i l_i(x) Y_i`, with weights determined by the predictors,
//! the bandwidth and the kernel alone. [`LinearSmoother`] stores those weights
//! in CSR form so the bootstrap can refit replicate after replicate with a
//! single sparse product; [`local_linear_fit`] is the one-shot wrapper.
//!
//! Each row is built from the moment sums `s_l(x) = Σ K_h(X_i - x)(x - X_i)^l`
//! restricted to the kernel window found by binary search over sorted
//! predictors. When `s0 s2 - s1²` falls below `1e-12 · s0² · h⁴` the row falls
//! back to the kernel-weighted mean.

use crate::error::{Error, Result};
use crate::smoothing::{Kernel, WeightFn};

const DET_GUARD: f64 = 1e-12;

/// Predictors sorted ascending, with the permutation back to input order.
#[derive(Debug, Clone)]
pub(crate) struct SortedAxis {
    order: Vec<usize>,
    xs: Vec<f64>,
}

impl SortedAxis {
    pub(crate) fn new(x: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..x.len()).collect();
        order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
        let xs = order.iter().map(|&i| x[i]).collect();
        SortedAxis { order, xs }
    }

    /// Sorted positions `[lo, hi)` whose predictor lies in `[a, b]`.
    #[inline]
    pub(crate) fn window(&self, a: f64, b: f64) -> (usize, usize) {
        let lo = self.xs.partition_point(|&v| v < a);
        let hi = self.xs.partition_point(|&v| v <= b);
        (lo, hi.max(lo))
    }

    #[inline]
    pub(crate) fn index(&self, pos: usize) -> usize {
        self.order[pos]
    }

    #[inline]
    pub(crate) fn value(&self, pos: usize) -> f64 {
        self.xs[pos]
    }
}

/// Sparse row-weight matrix of a linear smoother.
#[derive(Debug, Clone)]
pub struct LinearSmoother {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    weights: Vec<f64>,
}

impl LinearSmoother {
    /// Local linear weights at each of `eval` for data predictors `x`.
    ///
    /// With `inner_weight` the kernel weights are multiplied by `w(X_i)`,
    /// which solves the weighted least squares problem instead. Eval points
    /// that receive no weighted mass are fitted without the inner weight.
    pub fn local_linear(
        x: &[f64],
        eval: &[f64],
        h: f64,
        kernel: &Kernel,
        inner_weight: Option<&WeightFn>,
    ) -> Result<Self> {
        check_bandwidth(h)?;
        let axis = SortedAxis::new(x);
        let omega: Option<Vec<f64>> = inner_weight.map(|w| w.eval_all(x));
        let mut out = LinearSmoother {
            offsets: Vec::with_capacity(eval.len() + 1),
            cols: Vec::new(),
            weights: Vec::new(),
        };
        out.offsets.push(0);
        let reach = h * kernel.support_radius();
        let mut scratch = Vec::new();
        for (p, &e) in eval.iter().enumerate() {
            let (lo, hi) = axis.window(e - reach, e + reach);
            let ok = push_row(&axis, lo, hi, e, h, kernel, omega.as_deref(), &mut scratch)
                || (omega.is_some() && push_row(&axis, lo, hi, e, h, kernel, None, &mut scratch));
            if !ok {
                return Err(Error::DegenerateNeighborhood { point: p, x: e });
            }
            for &(i, l, _) in &scratch {
                out.cols.push(i);
                out.weights.push(l);
            }
            out.offsets.push(out.cols.len());
        }
        Ok(out)
    }

    pub fn rows(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Nonzero `(column, weight)` pairs of row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.offsets[r]..self.offsets[r + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.weights[span].iter().copied())
    }

    pub fn apply(&self, response: &[f64]) -> Vec<f64> {
        (0..self.rows())
            .map(|r| {
                let span = self.offsets[r]..self.offsets[r + 1];
                self.cols[span.clone()]
                    .iter()
                    .zip(&self.weights[span])
                    .map(|(&i, &l)| l * response[i])
                    .sum()
            })
            .collect()
    }

    /// Applies the smoother to `f(response_i)` without materializing it.
    pub fn apply_map(&self, response: &[f64], f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.rows())
            .map(|r| {
                let span = self.offsets[r]..self.offsets[r + 1];
                self.cols[span.clone()]
                    .iter()
                    .zip(&self.weights[span])
                    .map(|(&i, &l)| l * f(response[i]))
                    .sum()
            })
            .collect()
    }
}

/// Fills `row` with `(index, weight, offset)` for one eval point; `false`
/// when the window carries no kernel mass.
#[allow(clippy::too_many_arguments)]
fn push_row(
    axis: &SortedAxis,
    lo: usize,
    hi: usize,
    e: f64,
    h: f64,
    kernel: &Kernel,
    omega: Option<&[f64]>,
    row: &mut Vec<(usize, f64, f64)>,
) -> bool {
    row.clear();
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for pos in lo..hi {
        let i = axis.index(pos);
        let d = e - axis.value(pos);
        let mut k = kernel.scaled(d, h);
        if let Some(om) = omega {
            k *= om[i];
        }
        if k > 0.0 {
            s0 += k;
            s1 += k * d;
            s2 += k * d * d;
            row.push((i, k, d));
        }
    }
    if s0 <= 0.0 {
        return false;
    }
    let det = s0 * s2 - s1 * s1;
    if det > DET_GUARD * s0 * s0 * h.powi(4) {
        for (_, k, d) in row.iter_mut() {
            *k *= (s2 - *d * s1) / det;
        }
    } else {
        for (_, k, _) in row.iter_mut() {
            *k /= s0;
        }
    }
    true
}

pub(crate) fn check_bandwidth(h: f64) -> Result<()> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("bandwidth must be positive, got {h}")))
    }
}

/// Local linear fit of `response` on `x`, evaluated at `eval_points`.
pub fn local_linear_fit(
    x: &[f64],
    eval_points: &[f64],
    response: &[f64],
    h: f64,
    kernel: &Kernel,
    inner_weight: Option<&WeightFn>,
) -> Result<Vec<f64>> {
    if response.len() != x.len() {
        return Err(Error::LengthMismatch { x: x.len(), y: response.len() });
    }
    Ok(LinearSmoother::local_linear(x, eval_points, h, kernel, inner_weight)?.apply(response))
}
