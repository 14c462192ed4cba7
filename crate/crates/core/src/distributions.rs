//! Demand laws.
//!
//! Sampling clamps draws at zero because negative demand has no physical
//! meaning. [`DemandDistribution::cdf`] and [`DemandDistribution::quantile`]
//! describe the unclamped law.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// A single-day demand law.
///
/// Serialized as an internally tagged JSON object, e.g.
/// `{"kind":"normal","mu":50,"sigma":20}`. Uniform laws may also be written
/// as `{"kind":"uniform","mean":70,"halfwidth":0}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "RawDistribution")]
pub enum DemandDistribution {
    Normal {
        mu: f64,
        sigma: f64,
    },
    /// `shift + Exp(scale)`: mean `shift + scale`, standard deviation `scale`.
    ShiftedExponential {
        shift: f64,
        scale: f64,
    },
    /// Uniform on `[low, high]`; `low == high` is a point mass.
    Uniform {
        low: f64,
        high: f64,
    },
}

impl DemandDistribution {
    pub fn normal(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() || !sigma.is_finite() || sigma < 0.0 {
            return Err(domain(format!(
                "normal requires finite mu and sigma >= 0, got ({mu}, {sigma})"
            )));
        }
        Ok(Self::Normal { mu, sigma })
    }

    pub fn shifted_exponential(shift: f64, scale: f64) -> Result<Self> {
        if !shift.is_finite() || !scale.is_finite() || shift < 0.0 || scale <= 0.0 {
            return Err(domain(format!(
                "shifted exponential requires shift >= 0 and scale > 0, got ({shift}, {scale})"
            )));
        }
        Ok(Self::ShiftedExponential { shift, scale })
    }

    pub fn uniform(low: f64, high: f64) -> Result<Self> {
        if !low.is_finite() || !high.is_finite() || low > high {
            return Err(domain(format!(
                "uniform requires low <= high, got ({low}, {high})"
            )));
        }
        Ok(Self::Uniform { low, high })
    }

    /// Point mass at `value`.
    pub fn constant(value: f64) -> Result<Self> {
        Self::uniform(value, value)
    }

    /// True when the law has zero variance.
    pub fn is_degenerate(&self) -> bool {
        match *self {
            Self::Normal { sigma, .. } => sigma == 0.0,
            Self::ShiftedExponential { .. } => false,
            Self::Uniform { low, high } => low == high,
        }
    }

    /// One demand draw, clamped to be nonnegative.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let raw = match *self {
            Self::Normal { mu, sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                mu + sigma * z
            }
            Self::ShiftedExponential { shift, scale } => {
                let e: f64 = Exp1.sample(rng);
                shift + scale * e
            }
            Self::Uniform { low, high } => {
                if low == high {
                    low
                } else {
                    low + (high - low) * rng.random::<f64>()
                }
            }
        };
        raw.max(0.0)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Self::Normal { mu, sigma } => {
                if sigma == 0.0 {
                    step(x, mu)
                } else {
                    std_normal_cdf((x - mu) / sigma)
                }
            }
            Self::ShiftedExponential { shift, scale } => {
                if x <= shift {
                    0.0
                } else {
                    -(-(x - shift) / scale).exp_m1()
                }
            }
            Self::Uniform { low, high } => {
                if low == high {
                    step(x, low)
                } else {
                    ((x - low) / (high - low)).clamp(0.0, 1.0)
                }
            }
        }
    }

    pub fn quantile(&self, prob: f64) -> Result<f64> {
        if !(prob > 0.0 && prob < 1.0) {
            return Err(domain(format!(
                "quantile requires prob in (0, 1), got {prob}"
            )));
        }
        Ok(match *self {
            Self::Normal { mu, sigma } => mu + sigma * std_normal_quantile(prob),
            Self::ShiftedExponential { shift, scale } => shift - scale * (-prob).ln_1p(),
            Self::Uniform { low, high } => low + prob * (high - low),
        })
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Normal { mu, .. } => mu,
            Self::ShiftedExponential { shift, scale } => shift + scale,
            Self::Uniform { low, high } => 0.5 * (low + high),
        }
    }

    pub fn std(&self) -> f64 {
        match *self {
            Self::Normal { sigma, .. } => sigma,
            Self::ShiftedExponential { scale, .. } => scale,
            Self::Uniform { low, high } => (high - low) / 12f64.sqrt(),
        }
    }
}

fn step(x: f64, at: f64) -> f64 {
    if x >= at {
        1.0
    } else {
        0.0
    }
}

/// Standard normal CDF, `Φ(z) = erfc(-z/√2) / 2`.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn std_normal_pdf(z: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Inverse of the standard normal CDF.
///
/// Acklam's rational approximation (relative error ~1.2e-9) followed by one
/// Halley step against [`std_normal_cdf`], which brings the result to near
/// machine precision. Returns `±inf` at 0 and 1 and NaN outside `[0, 1]`.
pub fn std_normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }

    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let x = if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (-p).ln_1p()).sqrt())
    };

    // Halley refinement. In the upper tail work with the complement to avoid
    // cancellation in `Φ(x) - p`.
    let e = if p > 0.5 {
        (1.0 - p) - 0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
    } else {
        std_normal_cdf(x) - p
    };
    let u = e / std_normal_pdf(x);
    x - u / (1.0 + 0.5 * x * u)
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RawDistribution {
    Normal(NormalFields),
    ShiftedExponential(ExponentialFields),
    Uniform(UniformFields),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NormalFields {
    mu: f64,
    sigma: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExponentialFields {
    shift: f64,
    scale: f64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum UniformFields {
    Bounds { low: f64, high: f64 },
    Centered { mean: f64, halfwidth: f64 },
}

impl TryFrom<RawDistribution> for DemandDistribution {
    type Error = crate::Error;

    fn try_from(raw: RawDistribution) -> Result<Self> {
        match raw {
            RawDistribution::Normal(NormalFields { mu, sigma }) => Self::normal(mu, sigma),
            RawDistribution::ShiftedExponential(ExponentialFields { shift, scale }) => {
                Self::shifted_exponential(shift, scale)
            }
            RawDistribution::Uniform(UniformFields::Bounds { low, high }) => {
                Self::uniform(low, high)
            }
            RawDistribution::Uniform(UniformFields::Centered { mean, halfwidth }) => {
                if halfwidth < 0.0 {
                    return Err(domain(format!(
                        "uniform halfwidth must be >= 0, got {halfwidth}"
                    )));
                }
                Self::uniform(mean - halfwidth, mean + halfwidth)
            }
        }
    }
}
