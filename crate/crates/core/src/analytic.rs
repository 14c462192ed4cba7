//! Closed-form newsvendor solution and a Monte Carlo profit oracle.
//!
//! Prices follow the margin convention: `unit_profit` is what a sold unit
//! earns over its cost, so the retail price is `unit_profit + unit_cost`.
//! The expected single-day profit of stocking `q` is
//!
//! ```text
//! E[(p + c) * min(q, D)] - c * q
//! ```
//!
//! with `D` the (nonnegative) sampled demand, and it is maximised at the
//! critical fractile `F(q*) = p / (p + c)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{std_normal_cdf, DemandDistribution};
use crate::env::reward;
use crate::error::{domain, Result};

/// Per-unit economics of a product.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct EconomicParams {
    unit_profit: f64,
    unit_cost: f64,
}

impl EconomicParams {
    pub fn new(unit_profit: f64, unit_cost: f64) -> Result<Self> {
        if !(unit_profit.is_finite()
            && unit_profit > 0.0
            && unit_cost.is_finite()
            && unit_cost > 0.0)
        {
            return Err(domain(format!(
                "unit profit and unit cost must be positive, got ({unit_profit}, {unit_cost})"
            )));
        }
        Ok(Self {
            unit_profit,
            unit_cost,
        })
    }

    pub fn unit_profit(&self) -> f64 {
        self.unit_profit
    }

    pub fn unit_cost(&self) -> f64 {
        self.unit_cost
    }

    /// Retail price, `unit_profit + unit_cost`.
    pub fn price(&self) -> f64 {
        self.unit_profit + self.unit_cost
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    unit_profit: f64,
    unit_cost: f64,
}

impl TryFrom<RawParams> for EconomicParams {
    type Error = crate::Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        Self::new(raw.unit_profit, raw.unit_cost)
    }
}

/// `p / (p + c)`, the demand-CDF level at which the optimal stock sits.
pub fn critical_fractile(params: &EconomicParams) -> f64 {
    params.unit_profit / (params.unit_profit + params.unit_cost)
}

/// The profit-maximising stock level.
pub fn optimal_quantity(dist: &DemandDistribution, params: &EconomicParams) -> f64 {
    match *dist {
        DemandDistribution::Uniform { low, high } if low == high => low,
        DemandDistribution::Normal { mu, sigma: 0.0 } => mu,
        _ => dist
            .quantile(critical_fractile(params))
            .expect("critical fractile lies strictly inside (0, 1)"),
    }
}

/// Exact expected single-day profit of stocking `q`.
///
/// Closed forms are used for the uniform and shifted-exponential laws; the
/// normal law is integrated with adaptive Simpson quadrature.
pub fn expected_profit(dist: &DemandDistribution, q: f64, params: &EconomicParams) -> Result<f64> {
    if !(q.is_finite() && q >= 0.0) {
        return Err(domain(format!("stock level must be >= 0, got {q}")));
    }
    Ok(params.price() * expected_sales(dist, q) - params.unit_cost * q)
}

/// `E[min(q, max(D, 0))] = ∫_0^q P(D > x) dx` for `q >= 0`.
pub fn expected_sales(dist: &DemandDistribution, q: f64) -> f64 {
    match *dist {
        DemandDistribution::Uniform { low, high } if low == high => q.min(low.max(0.0)),
        DemandDistribution::Normal { mu, sigma: 0.0 } => q.min(mu.max(0.0)),
        DemandDistribution::Uniform { low, high } => {
            let below = q.min(low).max(0.0);
            let a = low.max(0.0);
            let b = q.min(high);
            let ramp = if b > a {
                ((high - a).powi(2) - (high - b).powi(2)) / (2.0 * (high - low))
            } else {
                0.0
            };
            below + ramp
        }
        DemandDistribution::ShiftedExponential { shift, scale } => {
            let below = q.min(shift);
            if q > shift {
                below - scale * (-(q - shift) / scale).exp_m1()
            } else {
                below
            }
        }
        DemandDistribution::Normal { mu, sigma } => {
            let lo = dist.quantile(1e-9).expect("valid probability");
            let hi = dist.quantile(1.0 - 1e-9).expect("valid probability");
            let a = lo.max(0.0);
            let b = q.min(hi);
            let below = q.min(a);
            let survival = |x: f64| 1.0 - std_normal_cdf((x - mu) / sigma);
            let body = if b > a {
                adaptive_simpson(survival, a, b, 1e-10 * sigma)
            } else {
                0.0
            };
            below + body
        }
    }
}

fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(&f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Sample mean of simulated profits and its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    /// `None` when fewer than two samples were drawn.
    pub std_error: Option<f64>,
    pub samples: usize,
}

/// Monte Carlo estimate of [`expected_profit`] using the environment's reward.
pub fn mc_expected_profit<R: Rng + ?Sized>(
    dist: &DemandDistribution,
    q: f64,
    params: &EconomicParams,
    n: usize,
    rng: &mut R,
) -> Result<McEstimate> {
    if n == 0 {
        return Err(domain("Monte Carlo estimate needs at least one sample"));
    }
    if !(q.is_finite() && q >= 0.0) {
        return Err(domain(format!("stock level must be >= 0, got {q}")));
    }
    let mut acc = Welford::default();
    for _ in 0..n {
        acc.push(reward(params, q, dist.sample(rng))?);
    }
    Ok(acc.estimate())
}

/// One point of a Monte Carlo profit curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub q: f64,
    pub estimate: f64,
    pub std_error: Option<f64>,
}

/// Monte Carlo expected profit over a grid of stock levels.
///
/// Every grid point is evaluated against the same `n` demand draws (common
/// random numbers), so differences between points carry no sampling noise
/// from independent streams.
pub fn profit_curve<R: Rng + ?Sized>(
    dist: &DemandDistribution,
    params: &EconomicParams,
    grid: &[f64],
    n: usize,
    rng: &mut R,
) -> Result<Vec<CurvePoint>> {
    if grid.is_empty() {
        return Err(domain("profit curve grid is empty"));
    }
    if n == 0 {
        return Err(domain("profit curve needs at least one sample per point"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(domain("profit curve grid must be strictly ascending"));
    }
    if !(grid[0].is_finite() && grid[0] >= 0.0) || !grid[grid.len() - 1].is_finite() {
        return Err(domain("profit curve grid must be finite and nonnegative"));
    }
    let demands: Vec<f64> = (0..n).map(|_| dist.sample(rng)).collect();
    grid.iter()
        .map(|&q| {
            let mut acc = Welford::default();
            for &d in &demands {
                acc.push(reward(params, q, d)?);
            }
            let est = acc.estimate();
            Ok(CurvePoint {
                q,
                estimate: est.mean,
                std_error: est.std_error,
            })
        })
        .collect()
}

/// Grid point with the highest estimate (first one on ties).
pub fn curve_argmax(curve: &[CurvePoint]) -> Option<f64> {
    curve
        .iter()
        .fold(None::<&CurvePoint>, |best, p| match best {
            Some(b) if b.estimate >= p.estimate => Some(b),
            _ => Some(p),
        })
        .map(|p| p.q)
}

/// Evenly spaced grid `start, start + step, ...` up to and including `stop`
/// (within rounding).
pub fn linear_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(domain(format!("invalid grid {start}:{stop}:{step}")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

#[derive(Default)]
struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn estimate(&self) -> McEstimate {
        let std_error =
            (self.n > 1).then(|| (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt());
        McEstimate {
            mean: self.mean,
            std_error,
            samples: self.n,
        }
    }
}
