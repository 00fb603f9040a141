//! Zero-rate Black-Scholes valuation, implied volatility and strike slopes.
//!
//! Rates and carry are zero throughout; chains quoted with carry should be
//! forward-adjusted before they reach this module.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Result, TailError};
use crate::special::{norm_cdf, norm_pdf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OptionSide {
    Call,
    Put,
}

impl fmt::Display for OptionSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptionSide::Call => "C",
            OptionSide::Put => "P",
        })
    }
}

impl FromStr for OptionSide {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "c" | "call" => Ok(OptionSide::Call),
            "p" | "put" => Ok(OptionSide::Put),
            other => Err(format!("unknown option side '{other}', expected C or P")),
        }
    }
}

/// Inputs of a single Black-Scholes valuation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsInputs {
    pub spot: f64,
    pub strike: f64,
    pub sigma: f64,
    pub expiry: f64,
}

impl BsInputs {
    pub fn new(spot: f64, strike: f64, sigma: f64, expiry: f64) -> Result<Self> {
        require_positive("spot", spot)?;
        require_positive("strike", strike)?;
        require_positive("volatility", sigma)?;
        require_positive("expiry", expiry)?;
        Ok(Self { spot, strike, sigma, expiry })
    }

    pub fn with_sigma(self, sigma: f64) -> Result<Self> {
        Self::new(self.spot, self.strike, sigma, self.expiry)
    }

    fn d1_d2(&self) -> (f64, f64) {
        let sd = self.sigma * self.expiry.sqrt();
        let d1 = ((self.spot / self.strike).ln() + 0.5 * sd * sd) / sd;
        (d1, d1 - sd)
    }
}

/// `S0 Φ(d1) - K Φ(d2)`.
pub fn bs_call(inputs: &BsInputs) -> f64 {
    let (d1, d2) = inputs.d1_d2();
    let price = inputs.spot * norm_cdf(d1) - inputs.strike * norm_cdf(d2);
    price.max(0.0)
}

/// `K Φ(-d2) - S0 Φ(-d1)`.
pub fn bs_put(inputs: &BsInputs) -> f64 {
    let (d1, d2) = inputs.d1_d2();
    let price = inputs.strike * norm_cdf(-d2) - inputs.spot * norm_cdf(-d1);
    price.max(0.0)
}

pub fn bs_price(inputs: &BsInputs, side: OptionSide) -> f64 {
    match side {
        OptionSide::Call => bs_call(inputs),
        OptionSide::Put => bs_put(inputs),
    }
}

/// `∂BS/∂σ = S0 φ(d1) √t`, identical for calls and puts.
pub fn vega(inputs: &BsInputs) -> f64 {
    let (d1, _) = inputs.d1_d2();
    inputs.spot * norm_pdf(d1) * inputs.expiry.sqrt()
}

/// Total strike derivative of the call when the volatility follows a skew:
/// `d/dK BSC(K, σ(K)) = -Φ(d2) + vega · σ'(K)`.
pub fn bs_call_dk(inputs: &BsInputs, skew_slope: f64) -> Result<f64> {
    if !skew_slope.is_finite() {
        return Err(TailError::parameter(format!("skew slope must be finite, got {skew_slope}")));
    }
    let (_, d2) = inputs.d1_d2();
    Ok(-norm_cdf(d2) + vega(inputs) * skew_slope)
}

/// Skew slope `σ'(K)` for which the Black-Scholes call, evaluated at
/// `inputs`, has total strike derivative `price_slope`.
///
/// Converts the strike slope of any call-price curve into the slope of its
/// implied-volatility smile.
pub fn implied_vol_slope(inputs: &BsInputs, price_slope: f64) -> Result<f64> {
    let v = vega(inputs);
    if !(v > 0.0) {
        return Err(TailError::domain(format!("vega vanishes at strike {}; smile slope undefined", inputs.strike)));
    }
    let (_, d2) = inputs.d1_d2();
    Ok((price_slope + norm_cdf(d2)) / v)
}

/// Search interval and accuracy of [`implied_vol_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpliedVolConfig {
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// Required absolute price accuracy.
    pub price_tol: f64,
    pub max_iterations: usize,
}

impl Default for ImpliedVolConfig {
    fn default() -> Self {
        Self { sigma_min: 1e-6, sigma_max: 10.0, price_tol: 1e-10, max_iterations: 300 }
    }
}

pub fn implied_vol(price: f64, spot: f64, strike: f64, expiry: f64, side: OptionSide) -> Result<f64> {
    implied_vol_with(price, spot, strike, expiry, side, &ImpliedVolConfig::default())
}

/// Inverts the Black-Scholes price for `σ` with a safeguarded Newton
/// iteration inside a shrinking bisection bracket.
///
/// Iterates well past `price_tol` (down to a relative price error of
/// `1e-14` or a collapsed bracket) so deep out-of-the-money prices are
/// matched in relative terms too; `price_tol` is the acceptance threshold.
pub fn implied_vol_with(
    price: f64,
    spot: f64,
    strike: f64,
    expiry: f64,
    side: OptionSide,
    cfg: &ImpliedVolConfig,
) -> Result<f64> {
    let base = BsInputs::new(spot, strike, cfg.sigma_min, expiry)?;
    let (intrinsic, cap) = match side {
        OptionSide::Call => ((spot - strike).max(0.0), spot),
        OptionSide::Put => ((strike - spot).max(0.0), strike),
    };
    let band = TailError::OutOfBand { price, lower: intrinsic, upper: cap };
    if !(price.is_finite() && price > intrinsic && price < cap) {
        return Err(band);
    }

    let f = |sigma: f64| -> (f64, BsInputs) {
        let inputs = BsInputs { sigma, ..base };
        (bs_price(&inputs, side) - price, inputs)
    };
    let (f_lo, _) = f(cfg.sigma_min);
    let (f_hi, _) = f(cfg.sigma_max);
    if f_lo > 0.0 || f_hi < 0.0 {
        return Err(TailError::OutOfBand { price, lower: f_lo + price, upper: f_hi + price });
    }

    let target = (1e-14 * price).max(f64::MIN_POSITIVE);
    let (mut lo, mut hi) = (cfg.sigma_min, cfg.sigma_max);
    // Start from the Brenner-Subrahmanyam estimate, clipped into the bracket.
    let mut sigma = ((2.0 * std::f64::consts::PI / expiry).sqrt() * price / spot).clamp(lo, hi);
    if !(sigma > lo && sigma < hi) {
        sigma = 0.5 * (lo + hi);
    }
    let mut best = (f64::INFINITY, sigma);

    for _ in 0..cfg.max_iterations {
        let (diff, inputs) = f(sigma);
        if diff.abs() < best.0 {
            best = (diff.abs(), sigma);
        }
        if diff.abs() <= target {
            return Ok(sigma);
        }
        if diff > 0.0 {
            hi = sigma;
        } else {
            lo = sigma;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let v = vega(&inputs);
        let newton = sigma - diff / v;
        sigma = if v > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
    }

    if best.0 <= cfg.price_tol {
        Ok(best.1)
    } else {
        Err(TailError::NonConvergence {
            iterations: cfg.max_iterations,
            context: format!("implied volatility for price {price} at strike {strike}"),
        })
    }
}
