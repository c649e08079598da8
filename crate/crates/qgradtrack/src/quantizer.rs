//! Scalar and vector quantization operators.
//!
//! Two lossy quantizers are provided together with an exact passthrough:
//!
//! * **log-scale**: `q(z) = sgn(z) * exp(rho * [log|z| / rho])`, a
//!   strongly sign-preserving odd mapping with *relative* precision.
//!   Its ratio `q(z)/z` lies in the tight sector
//!   `[exp(-rho/2), exp(rho/2)]` for every `z != 0`.
//! * **uniform**: `q(z) = rho * [z / rho]`, constant *absolute*
//!   precision `rho/2` and a dead band around zero.
//!
//! `[.]` rounds to the nearest integer, ties to even. `q(0) = 0` by
//! definition for both kinds (the odd, sign-preserving extension).

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Magnitudes below this are quantized to zero instead of evaluating
/// `log` near the subnormal range.
pub const UNDERFLOW_GUARD: f64 = 1e-300;

/// The quantization law applied to transmitted values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantizerKind {
    LogScale,
    Uniform,
    Identity,
}

impl QuantizerKind {
    fn name(self) -> &'static str {
        match self {
            QuantizerKind::LogScale => "log_scale",
            QuantizerKind::Uniform => "uniform",
            QuantizerKind::Identity => "identity",
        }
    }
}

/// A quantizer kind plus its level `rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizerSpec {
    pub kind: QuantizerKind,
    /// Quantization level. Ignored by `Identity`.
    pub rho: f64,
}

impl QuantizerSpec {
    /// Log-scale quantizer. Requires `0 < rho < 2`.
    pub fn log_scale(rho: f64) -> Result<Self> {
        if !rho.is_finite() || rho <= 0.0 || rho >= 2.0 {
            return Err(Error::InvalidConfig(format!(
                "log-scale quantizer requires 0 < rho < 2, got {rho}"
            )));
        }
        Ok(Self {
            kind: QuantizerKind::LogScale,
            rho,
        })
    }

    /// Uniform quantizer. Requires `rho > 0`.
    pub fn uniform(rho: f64) -> Result<Self> {
        if !rho.is_finite() || rho <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "uniform quantizer requires rho > 0, got {rho}"
            )));
        }
        Ok(Self {
            kind: QuantizerKind::Uniform,
            rho,
        })
    }

    /// Exact passthrough.
    pub fn identity() -> Self {
        Self {
            kind: QuantizerKind::Identity,
            rho: 1.0,
        }
    }

    /// Quantize a scalar.
    pub fn quantize(&self, z: f64) -> Result<f64> {
        if !z.is_finite() {
            return Err(Error::NonFinite {
                value: z,
                index: None,
            });
        }
        Ok(self.quantize_finite(z))
    }

    /// Componentwise quantization. On a non-finite entry the error
    /// reports the offending index.
    pub fn quantize_vector(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        for (i, &z) in v.iter().enumerate() {
            if !z.is_finite() {
                return Err(Error::NonFinite {
                    value: z,
                    index: Some(i),
                });
            }
        }
        Ok(v.map(|z| self.quantize_finite(z)))
    }

    /// Tight multiplicative sector bounds `(lo, hi)` with
    /// `lo <= q(z)/z <= hi` for all `z != 0`. Log-scale only.
    pub fn sector_ratio_bounds(&self) -> Result<(f64, f64)> {
        match self.kind {
            QuantizerKind::LogScale => Ok(((-self.rho / 2.0).exp(), (self.rho / 2.0).exp())),
            kind => Err(Error::UnsupportedQuantizer {
                kind: kind.name(),
                operation: "sector_ratio_bounds",
            }),
        }
    }

    #[inline]
    pub(crate) fn quantize_finite(&self, z: f64) -> f64 {
        match self.kind {
            QuantizerKind::Identity => z,
            QuantizerKind::Uniform => self.rho * round_ties_even(z / self.rho),
            QuantizerKind::LogScale => {
                let a = z.abs();
                if a < UNDERFLOW_GUARD {
                    return 0.0;
                }
                z.signum() * (self.rho * round_ties_even(a.ln() / self.rho)).exp()
            }
        }
    }
}

#[inline]
fn round_ties_even(x: f64) -> f64 {
    x.round_ties_even()
}
