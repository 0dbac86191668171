//! Data-generating processes of the simulation study.
//!
//! Regression models S6-S8 draw `X ~ U[0, 1]` and `Y = m(X) + σ(X) ε`.
//! The autoregressions STA1-STA4 iterate `Z_t = m(Z_{t-1}) + σ(Z_{t-1}) ε_t`
//! and regress `Z_t` on `Z_{t-1}`. ARCH(1) iterates
//! `Z_t = sqrt(θ0 + θ1 Z²_{t-1}) η_t` and regresses `Z_t²` on `Z²_{t-1}`,
//! which has mean `θ0 + θ1 x` and constant coefficient of variation
//! `c = (E η⁴ - 1)^{-1/2}`.
//!
//! Recursions start at `Z_0 = 0` and discard `burn_in` steps.

use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::smoothing::Sample;

pub const DEFAULT_BURN_IN: usize = 200;
pub const OVERFLOW_GUARD: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelId {
    S6,
    S7,
    S8,
    Sta1,
    Sta2,
    Sta3,
    Sta4,
    Arch1,
}

impl ModelId {
    pub const ALL: [ModelId; 8] = [
        ModelId::S6,
        ModelId::S7,
        ModelId::S8,
        ModelId::Sta1,
        ModelId::Sta2,
        ModelId::Sta3,
        ModelId::Sta4,
        ModelId::Arch1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelId::S6 => "s6",
            ModelId::S7 => "s7",
            ModelId::S8 => "s8",
            ModelId::Sta1 => "sta1",
            ModelId::Sta2 => "sta2",
            ModelId::Sta3 => "sta3",
            ModelId::Sta4 => "sta4",
            ModelId::Arch1 => "arch1",
        }
    }

    pub fn parse(s: &str) -> Option<ModelId> {
        ModelId::ALL.into_iter().find(|m| m.name().eq_ignore_ascii_case(s))
    }

    pub fn is_series(self) -> bool {
        !matches!(self, ModelId::S6 | ModelId::S7 | ModelId::S8)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub id: ModelId,
    /// Scale of the mean in S6-S8; ignored elsewhere.
    pub c: f64,
    pub theta0: f64,
    pub theta1: f64,
    pub n: usize,
    pub burn_in: usize,
}

impl ModelSpec {
    pub fn regression(id: ModelId, c: f64, n: usize) -> Self {
        ModelSpec { id, c, theta0: 0.0, theta1: 0.0, n, burn_in: 0 }
    }

    pub fn series(id: ModelId, n: usize) -> Self {
        ModelSpec { id, c: 1.0, theta0: 0.0, theta1: 0.0, n, burn_in: DEFAULT_BURN_IN }
    }

    pub fn arch1(theta0: f64, theta1: f64, n: usize) -> Self {
        ModelSpec { id: ModelId::Arch1, c: 1.0, theta0, theta1, n, burn_in: DEFAULT_BURN_IN }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < crate::smoothing::MIN_OBSERVATIONS {
            return Err(Error::TooFewObservations {
                min: crate::smoothing::MIN_OBSERVATIONS,
                got: self.n,
            });
        }
        match self.id {
            ModelId::S6 | ModelId::S7 | ModelId::S8 if !(self.c.is_finite() && self.c > 0.0) => Err(
                Error::InvalidParameter(format!("model scale c must be positive, got {}", self.c)),
            ),
            ModelId::Arch1 if !(self.theta0 >= 0.0 && self.theta0.is_finite()) => Err(
                Error::InvalidParameter(format!("theta0 must be nonnegative, got {}", self.theta0)),
            ),
            ModelId::Arch1 if !(self.theta1 >= 0.0 && self.theta1 < 1.0) => Err(Error::InvalidParameter(
                format!("ARCH(1) needs 0 <= theta1 < 1, got {}", self.theta1),
            )),
            _ => Ok(()),
        }
    }

    /// Short human label, e.g. `s6 c=1` or `arch1 θ=(1,0.5)`.
    pub fn label(&self) -> String {
        match self.id {
            ModelId::S6 | ModelId::S7 | ModelId::S8 => format!("{} c={}", self.id.name(), self.c),
            ModelId::Arch1 => format!("arch1 theta=({},{})", self.theta0, self.theta1),
            _ => self.id.name().to_string(),
        }
    }
}

/// Source of the i.i.d. innovations driving a model.
pub trait InnovationSampler: Sync {
    fn draw(&self, rng: &mut dyn RngCore) -> f64;
    /// `E[η⁴]`, which fixes the ARCH(1) scaling constant.
    fn fourth_moment(&self) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StandardNormalInnovations;

impl InnovationSampler for StandardNormalInnovations {
    fn draw(&self, rng: &mut dyn RngCore) -> f64 {
        StandardNormal.sample(rng)
    }

    fn fourth_moment(&self) -> f64 {
        3.0
    }
}

/// The model's regression and scale functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrueFunctions {
    spec: ModelSpec,
    arch_c: f64,
}

impl TrueFunctions {
    pub fn m(&self, x: f64) -> f64 {
        let s = &self.spec;
        match s.id {
            ModelId::S6 | ModelId::S7 | ModelId::S8 => s.c * (1.0 + 0.1 * x),
            ModelId::Sta1 | ModelId::Sta3 => 1.0 + 0.1 * x,
            ModelId::Sta2 | ModelId::Sta4 => (1.0 + 0.5 * x).sin(),
            ModelId::Arch1 => s.theta0 + s.theta1 * x,
        }
    }

    pub fn sigma(&self, x: f64) -> f64 {
        let s = &self.spec;
        match s.id {
            ModelId::S6 | ModelId::Sta1 => 1.0 + 0.1 * x,
            ModelId::S7 => 1.0 + 0.1 * x + x.sqrt(),
            ModelId::S8 => 1.0 + 0.1 * x + 2.0 * x.sqrt(),
            ModelId::Sta2 => (1.0 + 0.5 * x).sin(),
            ModelId::Sta3 => 0.5 * x.abs().sqrt(),
            ModelId::Sta4 => (1.0 + 0.5 * x).cos(),
            ModelId::Arch1 => (s.theta0 + s.theta1 * x) / self.arch_c,
        }
    }

    pub fn h0_holds(&self) -> bool {
        self.c_true().is_some()
    }

    /// The constant `c` with `m = c σ`, when the null holds.
    pub fn c_true(&self) -> Option<f64> {
        match self.spec.id {
            ModelId::S6 => Some(self.spec.c),
            ModelId::Sta1 | ModelId::Sta2 => Some(1.0),
            ModelId::Arch1 => Some(self.arch_c),
            _ => None,
        }
    }
}

pub fn true_functions(spec: &ModelSpec) -> TrueFunctions {
    true_functions_with(spec, &StandardNormalInnovations)
}

pub fn true_functions_with(spec: &ModelSpec, innovations: &dyn InnovationSampler) -> TrueFunctions {
    TrueFunctions {
        spec: *spec,
        arch_c: 1.0 / (innovations.fourth_moment() - 1.0).sqrt(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingMode {
    /// `X_t = Z_{t-1}`, `Y_t = Z_t`.
    Lag,
    /// `X_t = Z²_{t-1}`, `Y_t = Z²_t`.
    SquaredLag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedSeries {
    pub raw: Vec<f64>,
    pub sample: Sample,
    pub mode: EmbeddingMode,
}

/// Turns a series into a regression sample with `n = raw.len() - 1`.
pub fn embed(raw: Vec<f64>, mode: EmbeddingMode) -> Result<EmbeddedSeries> {
    if raw.len() < 2 {
        return Err(Error::TooFewObservations {
            min: crate::smoothing::MIN_OBSERVATIONS,
            got: raw.len().saturating_sub(1),
        });
    }
    let f = |z: f64| match mode {
        EmbeddingMode::Lag => z,
        EmbeddingMode::SquaredLag => z * z,
    };
    let x = raw[..raw.len() - 1].iter().map(|&z| f(z)).collect();
    let y = raw[1..].iter().map(|&z| f(z)).collect();
    let sample = Sample::new(x, y)?;
    Ok(EmbeddedSeries { raw, sample, mode })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Regression {
        sample: Sample,
        /// `ε_i` behind each `Y_i`.
        innovations: Vec<f64>,
    },
    Series {
        series: EmbeddedSeries,
        /// Innovation (`ε_t`, or `η_t` for ARCH) behind each `Y_t`.
        innovations: Vec<f64>,
    },
}

impl Dataset {
    pub fn sample(&self) -> &Sample {
        match self {
            Dataset::Regression { sample, .. } => sample,
            Dataset::Series { series, .. } => &series.sample,
        }
    }

    pub fn into_sample(self) -> Sample {
        match self {
            Dataset::Regression { sample, .. } => sample,
            Dataset::Series { series, .. } => series.sample,
        }
    }

    pub fn innovations(&self) -> &[f64] {
        match self {
            Dataset::Regression { innovations, .. } | Dataset::Series { innovations, .. } => innovations,
        }
    }
}

pub fn generate<R: Rng>(spec: &ModelSpec, rng: &mut R) -> Result<Dataset> {
    generate_with(spec, rng, &StandardNormalInnovations)
}

pub fn generate_with<R: Rng>(
    spec: &ModelSpec,
    rng: &mut R,
    innovations: &dyn InnovationSampler,
) -> Result<Dataset> {
    spec.validate()?;
    let truth = true_functions_with(spec, innovations);
    if !spec.id.is_series() {
        let mut x = Vec::with_capacity(spec.n);
        let mut y = Vec::with_capacity(spec.n);
        let mut eps = Vec::with_capacity(spec.n);
        for _ in 0..spec.n {
            let xi: f64 = rng.random();
            let e = innovations.draw(rng);
            x.push(xi);
            y.push(truth.m(xi) + truth.sigma(xi) * e);
            eps.push(e);
        }
        return Ok(Dataset::Regression { sample: Sample::new(x, y)?, innovations: eps });
    }
    let steps = spec.burn_in + spec.n;
    let mut z = 0.0f64;
    let mut raw = Vec::with_capacity(spec.n + 1);
    let mut eps = Vec::with_capacity(spec.n);
    if spec.burn_in == 0 {
        raw.push(z);
    }
    for t in 1..=steps {
        let e = innovations.draw(rng);
        z = step(spec, &truth, z, e);
        if !z.is_finite() || z.abs() > OVERFLOW_GUARD {
            return Err(Error::ExplosiveSeries { step: t, value: z.abs() });
        }
        if t >= spec.burn_in {
            if t > spec.burn_in {
                eps.push(e);
            }
            raw.push(z);
        }
    }
    let mode = if spec.id == ModelId::Arch1 { EmbeddingMode::SquaredLag } else { EmbeddingMode::Lag };
    Ok(Dataset::Series { series: embed(raw, mode)?, innovations: eps })
}

#[inline]
fn step(spec: &ModelSpec, truth: &TrueFunctions, z: f64, e: f64) -> f64 {
    match spec.id {
        ModelId::Arch1 => (spec.theta0 + spec.theta1 * z * z).sqrt() * e,
        _ => truth.m(z) + truth.sigma(z) * e,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    struct Zero;
    impl InnovationSampler for Zero {
        fn draw(&self, _: &mut dyn RngCore) -> f64 {
            0.0
        }
        fn fourth_moment(&self) -> f64 {
            3.0
        }
    }

    #[test]
    fn null_models_are_proportional() {
        let specs = [
            ModelSpec::regression(ModelId::S6, 1.0, 50),
            ModelSpec::regression(ModelId::S6, 1.5, 50),
            ModelSpec::series(ModelId::Sta1, 50),
            ModelSpec::series(ModelId::Sta2, 50),
            ModelSpec::arch1(1.0, 0.5, 50),
        ];
        for spec in specs {
            let tf = true_functions(&spec);
            let c = tf.c_true().unwrap();
            for i in 0..=200 {
                let x = -3.0 + i as f64 * 0.05;
                let x = if spec.id.is_series() { x } else { x.abs() / 10.0 };
                assert!((tf.m(x) - c * tf.sigma(x)).abs() < 1e-12, "{spec:?} at {x}");
            }
        }
        assert!(!true_functions(&ModelSpec::regression(ModelId::S7, 1.0, 50)).h0_holds());
        assert!(!true_functions(&ModelSpec::series(ModelId::Sta3, 50)).h0_holds());
        assert!(!true_functions(&ModelSpec::series(ModelId::Sta4, 50)).h0_holds());
    }

    #[test]
    fn model_formulas() {
        let s7 = true_functions(&ModelSpec::regression(ModelId::S7, 1.0, 50));
        assert!((s7.sigma(0.25) - (1.025 + 0.5)).abs() < 1e-15);
        let s8 = true_functions(&ModelSpec::regression(ModelId::S8, 0.5, 50));
        assert!((s8.sigma(0.25) - (1.025 + 1.0)).abs() < 1e-15);
        assert!((s8.m(0.25) - 0.5 * 1.025).abs() < 1e-15);
        let sta2 = true_functions(&ModelSpec::series(ModelId::Sta2, 50));
        assert_eq!(sta2.m(0.4), (1.2f64).sin());
        assert_eq!(sta2.sigma(0.4), (1.2f64).sin());
        assert_eq!(sta2.c_true(), Some(1.0));
        let sta3 = true_functions(&ModelSpec::series(ModelId::Sta3, 50));
        assert_eq!(sta3.sigma(-4.0), 1.0);
        let sta4 = true_functions(&ModelSpec::series(ModelId::Sta4, 50));
        assert_eq!(sta4.sigma(0.4), (1.2f64).cos());
        let arch = true_functions(&ModelSpec::arch1(1.0, 0.5, 50));
        assert!((arch.c_true().unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(arch.m(2.0), 2.0);
        assert!((arch.sigma(2.0) - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn regression_innovations_are_recovered() {
        for id in [ModelId::S6, ModelId::S7, ModelId::S8] {
            let spec = ModelSpec::regression(id, 1.5, 100);
            let data = generate(&spec, &mut rng::stream(1, &[])).unwrap();
            let tf = true_functions(&spec);
            let s = data.sample();
            assert!(s.x().iter().all(|x| (0.0..1.0).contains(x)));
            for i in 0..s.n() {
                let e = (s.y()[i] - tf.m(s.x()[i])) / tf.sigma(s.x()[i]);
                assert!((e - data.innovations()[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn series_follow_recursion() {
        for id in [ModelId::Sta1, ModelId::Sta2, ModelId::Sta3, ModelId::Sta4] {
            let spec = ModelSpec::series(id, 80);
            let data = generate(&spec, &mut rng::stream(2, &[])).unwrap();
            let Dataset::Series { series, innovations } = &data else { panic!() };
            assert_eq!(series.sample.n(), series.raw.len() - 1);
            assert_eq!(series.sample.n(), 80);
            assert_eq!(innovations.len(), 80);
            let tf = true_functions(&spec);
            for t in 0..80 {
                assert_eq!(series.sample.x()[t], series.raw[t]);
                assert_eq!(series.sample.y()[t], series.raw[t + 1]);
                let x = series.sample.x()[t];
                let expect = tf.m(x) + tf.sigma(x) * innovations[t];
                assert_eq!(series.sample.y()[t], expect);
            }
        }
    }

    #[test]
    fn arch_squared_embedding() {
        let spec = ModelSpec::arch1(1.0, 0.5, 150);
        let data = generate(&spec, &mut rng::stream(3, &[])).unwrap();
        let Dataset::Series { series, innovations } = &data else { panic!() };
        assert_eq!(series.mode, EmbeddingMode::SquaredLag);
        let tf = true_functions(&spec);
        let c = tf.c_true().unwrap();
        for t in 0..150 {
            let (x, y) = (series.sample.x()[t], series.sample.y()[t]);
            assert_eq!(x, series.raw[t].powi(2));
            assert_eq!(y, series.raw[t + 1].powi(2));
            // ε_t = c (η_t² - 1) reproduces Y = m(X) + σ(X) ε
            let eps = c * (innovations[t] * innovations[t] - 1.0);
            assert!((y - (tf.m(x) + tf.sigma(x) * eps)).abs() < 1e-10 * y.max(1.0));
        }
    }

    #[test]
    fn zero_innovations_reach_fixed_point() {
        let spec = ModelSpec::series(ModelId::Sta1, 10);
        let data = generate_with(&spec, &mut rng::stream(0, &[]), &Zero).unwrap();
        for &z in &data.sample().y().to_vec() {
            assert!((z - 10.0 / 9.0).abs() < 1e-12);
        }
    }

    #[test]
    fn burn_in_zero_starts_at_origin() {
        let spec = ModelSpec { burn_in: 0, ..ModelSpec::series(ModelId::Sta1, 6) };
        let data = generate(&spec, &mut rng::stream(0, &[])).unwrap();
        let Dataset::Series { series, .. } = data else { panic!() };
        assert_eq!(series.raw[0], 0.0);
        assert_eq!(series.raw.len(), 7);
    }

    #[test]
    fn determinism_per_seed() {
        let spec = ModelSpec::series(ModelId::Sta3, 60);
        let a = generate(&spec, &mut rng::stream(9, &[1])).unwrap();
        let b = generate(&spec, &mut rng::stream(9, &[1])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn validation_and_overflow() {
        assert!(ModelSpec::arch1(1.0, 1.0, 50).validate().is_err());
        assert!(ModelSpec::regression(ModelId::S6, 0.0, 50).validate().is_err());
        assert!(ModelSpec::regression(ModelId::S6, 1.0, 4).validate().is_err());
        struct Huge;
        impl InnovationSampler for Huge {
            fn draw(&self, _: &mut dyn RngCore) -> f64 {
                1e5
            }
            fn fourth_moment(&self) -> f64 {
                3.0
            }
        }
        let err = generate_with(&ModelSpec::series(ModelId::Sta1, 20), &mut rng::stream(0, &[]), &Huge);
        assert!(matches!(err, Err(Error::ExplosiveSeries { .. })));
    }

    #[test]
    fn model_names_round_trip() {
        for id in ModelId::ALL {
            assert_eq!(ModelId::parse(id.name()), Some(id));
        }
        assert_eq!(ModelId::parse("STA2"), Some(ModelId::Sta2));
        assert_eq!(ModelId::parse("s9"), None);
    }
}
