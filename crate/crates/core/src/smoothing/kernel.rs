use serde::Serialize;
use statrs::function::erf::erf;
use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelFamily {
    Epanechnikov,
    GaussianTruncated,
}

/// Symmetric second-order kernel with compact support `[-radius, radius]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Kernel {
    family: KernelFamily,
    support_radius: f64,
    #[serde(skip)]
    norm: f64,
}

impl Default for Kernel {
    fn default() -> Self {
        Self::epanechnikov()
    }
}

impl Kernel {
    /// `K(u) = 0.75 (1 - u²)` on `[-1, 1]`.
    pub fn epanechnikov() -> Self {
        Kernel {
            family: KernelFamily::Epanechnikov,
            support_radius: 1.0,
            norm: 0.75,
        }
    }

    /// Standard normal density restricted to `[-radius, radius]` and renormalized.
    pub fn truncated_gaussian(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "truncation radius must be positive, got {radius}"
            )));
        }
        let mass = erf(radius / std::f64::consts::SQRT_2);
        Ok(Kernel {
            family: KernelFamily::GaussianTruncated,
            support_radius: radius,
            norm: 1.0 / ((2.0 * PI).sqrt() * mass),
        })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn name(&self) -> &'static str {
        match self.family {
            KernelFamily::Epanechnikov => "epanechnikov",
            KernelFamily::GaussianTruncated => "gaussian-truncated",
        }
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        if u.abs() > self.support_radius {
            return 0.0;
        }
        match self.family {
            KernelFamily::Epanechnikov => self.norm * (1.0 - u * u),
            KernelFamily::GaussianTruncated => self.norm * (-0.5 * u * u).exp(),
        }
    }

    /// `K_h(d) = K(d / h) / h`.
    #[inline]
    pub fn scaled(&self, d: f64, h: f64) -> f64 {
        self.eval(d / h) / h
    }

    /// `κ2 = ∫ u² K(u) du`.
    pub fn second_moment(&self) -> f64 {
        match self.family {
            KernelFamily::Epanechnikov => 0.2,
            KernelFamily::GaussianTruncated => {
                let r = self.support_radius;
                let phi = (-0.5 * r * r).exp() / (2.0 * PI).sqrt();
                let mass = erf(r / std::f64::consts::SQRT_2);
                1.0 - 2.0 * r * phi / mass
            }
        }
    }

    /// `∫ K²(u) du`.
    pub fn roughness(&self) -> f64 {
        match self.family {
            KernelFamily::Epanechnikov => 0.6,
            KernelFamily::GaussianTruncated => {
                let r = self.support_radius;
                let mass = erf(r / std::f64::consts::SQRT_2);
                erf(r) / (2.0 * PI.sqrt() * mass * mass)
            }
        }
    }
}
