//! Static no-arbitrage diagnostics for Pareto tail extensions.
//!
//! A tail extension priced off an anchor at `K1` meets the market (quoted
//! through Black-Scholes with a smile) at that strike. Beyond the anchor the
//! Pareto prices are convex by construction; the junction itself is where a
//! butterfly `K1 - ΔK, K1, K1 + ΔK` can break, which in the limit becomes a
//! call-spread slope comparison and, solved for the tail index, a
//! closed-form lower bound on `α`.
//!
//! Every check reports its margin alongside the verdict.

use std::f64::consts::{PI, SQRT_2};

use serde::Serialize;

use crate::black_scholes::{bs_call, bs_call_dk, BsInputs};
use crate::error::{require_positive, Result, TailError};
use crate::special::erfc;
use crate::tail_model::{PriceTailModel, ReturnTailModel};

/// Relative tolerance of the matching condition `BSC(K1, σ(K1)) = C(K1)`.
pub const MATCHING_REL_TOL: f64 = 1e-8;

/// Piecewise-linear implied-volatility smile `σ(K)`.
///
/// A single knot describes a flat smile valid at every strike. With two or
/// more knots the smile is defined on `[first, last]` only.
#[derive(Debug, Clone, PartialEq)]
pub struct VolSkew {
    knots: Vec<(f64, f64)>,
}

impl VolSkew {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(TailError::parameter("volatility skew needs at least one knot"));
        }
        for &(k, s) in &knots {
            require_positive("skew strike", k)?;
            require_positive("skew volatility", s)?;
        }
        if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(TailError::parameter("skew strikes must be strictly increasing"));
        }
        Ok(Self { knots })
    }

    pub fn flat(sigma: f64) -> Result<Self> {
        Self::new(vec![(1.0, sigma)])
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    /// Index `i` of the segment `[knots[i], knots[i+1]]` containing `k`.
    /// Interior knots belong to the segment on their left.
    fn segment(&self, k: f64) -> Result<Option<usize>> {
        let n = self.knots.len();
        if n == 1 {
            return Ok(None);
        }
        let (first, last) = (self.knots[0].0, self.knots[n - 1].0);
        if !(k >= first && k <= last) {
            return Err(TailError::domain(format!("strike {k} outside the skew range [{first}, {last}]")));
        }
        let idx = self.knots.partition_point(|&(kk, _)| kk < k);
        Ok(Some(idx.saturating_sub(1).min(n - 2)))
    }

    pub fn sigma_at(&self, k: f64) -> Result<f64> {
        match self.segment(k)? {
            None => Ok(self.knots[0].1),
            Some(i) => {
                let (k0, s0) = self.knots[i];
                let (k1, s1) = self.knots[i + 1];
                Ok(s0 + (s1 - s0) * (k - k0) / (k1 - k0))
            }
        }
    }

    /// `dσ/dK` of the containing segment; at an interior knot, the segment
    /// to its left.
    pub fn slope_at(&self, k: f64) -> Result<f64> {
        match self.segment(k)? {
            None => Ok(0.0),
            Some(i) => {
                let (k0, s0) = self.knots[i];
                let (k1, s1) = self.knots[i + 1];
                Ok((s1 - s0) / (k1 - k0))
            }
        }
    }
}

/// Pass threshold `max(rel · scale, floor)` applied to a check's margin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckTolerance {
    pub rel: f64,
    pub floor: f64,
}

impl Default for CheckTolerance {
    fn default() -> Self {
        Self { rel: 1e-12, floor: 1e-12 }
    }
}

impl CheckTolerance {
    fn threshold(&self, scale: f64) -> f64 {
        (self.rel * scale.abs()).max(self.floor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub pass: bool,
    pub margin: f64,
    pub tolerance: f64,
}

impl CheckOutcome {
    fn new(margin: f64, tolerance: f64) -> Self {
        Self { pass: margin >= -tolerance, margin, tolerance }
    }
}

/// Breeden-Litzenberger density of the price-tail model,
/// `∂²C/∂K² = α l^α K^{-α-1}`.
pub fn bl_density(model: &PriceTailModel, strike: f64) -> Result<f64> {
    if !(strike.is_finite() && strike > model.l()) {
        return Err(TailError::domain(format!("strike {strike} not above the Karamata constant {}", model.l())));
    }
    let a = model.alpha().value();
    Ok(a * (a * model.l().ln() - (a + 1.0) * strike.ln()).exp())
}

/// Breeden-Litzenberger density of the return-tail model,
/// `α (l S0)^α (K - S0)^{-α-1}`.
pub fn bl_density_return(model: &ReturnTailModel, strike: f64) -> Result<f64> {
    model.density(strike)
}

fn require_price(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(TailError::parameter(format!("{name} must be a nonnegative price, got {value}")))
    }
}

/// Butterfly across `K1 - ΔK, K1, K1 + ΔK`:
/// `C(K1 + ΔK) + BSC(K1 - ΔK) - 2 C(K1) ≥ 0`.
pub fn butterfly_check(c_up: f64, c_mid: f64, bsc_down: f64) -> Result<CheckOutcome> {
    butterfly_check_with(c_up, c_mid, bsc_down, CheckTolerance::default())
}

pub fn butterfly_check_with(c_up: f64, c_mid: f64, bsc_down: f64, tol: CheckTolerance) -> Result<CheckOutcome> {
    require_price("upper call", c_up)?;
    require_price("middle call", c_mid)?;
    require_price("lower call", bsc_down)?;
    let margin = c_up + bsc_down - 2.0 * c_mid;
    Ok(CheckOutcome::new(margin, tol.threshold(c_mid)))
}

/// Butterfly on an uneven strike triple `(K, price)`, scaled so that equal
/// spacing reproduces [`butterfly_check`]'s margin.
pub fn convexity_check(down: (f64, f64), mid: (f64, f64), up: (f64, f64), tol: CheckTolerance) -> Result<CheckOutcome> {
    if !(down.0 < mid.0 && mid.0 < up.0) {
        return Err(TailError::parameter("convexity check needs strictly increasing strikes"));
    }
    require_price("lower price", down.1)?;
    require_price("middle price", mid.1)?;
    require_price("upper price", up.1)?;
    let width = up.0 - down.0;
    let w_up = (mid.0 - down.0) / width;
    let w_down = (up.0 - mid.0) / width;
    let margin = 2.0 * (w_up * up.1 + w_down * down.1 - mid.1);
    Ok(CheckOutcome::new(margin, tol.threshold(mid.1)))
}

/// Outcome of the call-spread slope comparison at the junction strike.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeCheck {
    pub strike: f64,
    /// `d/dK BSC(K, σ(K))` at the junction (market side, left of `K1`).
    pub left_slope: f64,
    /// `dC/dK` of the Pareto extension (right of `K1`).
    pub right_slope: f64,
    pub outcome: CheckOutcome,
}

/// Call-spread condition at the junction `K1 = bs_leg.strike`.
///
/// The butterfly `C(K1 + ΔK) + BSC(K1 - ΔK) ≥ 2 C(K1)` with
/// `BSC(K1) = C(K1)` requires, as `ΔK → 0`, that the Pareto slope to the
/// right is no steeper than the Black-Scholes slope to the left:
/// `dC/dK ≥ dBSC/dK`. The margin is `right - left`.
///
/// `bs_leg.sigma` is the level `σ(K1)`; `skew` supplies `σ'(K1)`.
pub fn slope_condition(
    bs_leg: &BsInputs,
    skew: &VolSkew,
    model: &ReturnTailModel,
    tol: CheckTolerance,
) -> Result<SlopeCheck> {
    let k1 = bs_leg.strike;
    let c = model.call_price(k1)?;
    let right = model.call_slope(k1)?;
    junction_slope(bs_leg, skew, c, right, tol)
}

/// [`slope_condition`] against a [`PriceTailModel`] extension.
pub fn slope_condition_price_tail(
    bs_leg: &BsInputs,
    skew: &VolSkew,
    model: &PriceTailModel,
    tol: CheckTolerance,
) -> Result<SlopeCheck> {
    let k1 = bs_leg.strike;
    let c = model.call_price(k1)?;
    let right = model.call_slope(k1)?;
    junction_slope(bs_leg, skew, c, right, tol)
}

fn junction_slope(
    bs_leg: &BsInputs,
    skew: &VolSkew,
    model_price: f64,
    right: f64,
    tol: CheckTolerance,
) -> Result<SlopeCheck> {
    let k1 = bs_leg.strike;
    let bsc = bs_call(bs_leg);
    if !((bsc - model_price).abs() <= MATCHING_REL_TOL * model_price) {
        return Err(TailError::MatchingCondition { bs: bsc, model: model_price, strike: k1 });
    }
    let left = bs_call_dk(bs_leg, skew.slope_at(k1)?)?;
    let margin = right - left;
    Ok(SlopeCheck {
        strike: k1,
        left_slope: left,
        right_slope: right,
        outcome: CheckOutcome::new(margin, tol.threshold(right)),
    })
}

/// Closed-form tail index at which the junction slope condition binds,
/// with the Karamata constant `l` (return units) held fixed:
///
/// ```text
/// α ≥ ln( ½ erfc((tσ² + 2 ln K - 2 ln S0) / (2√2 √t σ))
///         - √S0 √t σ' K^{ln S0/(tσ²) + ½} e^{-(ln²K + ln²S0)/(2tσ²) - tσ²/8} / √(2π) )
///     / (ln l + ln S0 - ln(K - S0))
/// ```
///
/// The power and exponential of the skew term are combined in log space.
/// The value may fall at or below one, in which case the bound does not
/// restrict any admissible tail index.
pub fn alpha_lower_bound(strike: f64, spot: f64, l: f64, expiry: f64, sigma: f64, sigma_slope: f64) -> Result<f64> {
    require_positive("strike", strike)?;
    require_positive("spot", spot)?;
    require_positive("Karamata constant l", l)?;
    require_positive("expiry", expiry)?;
    require_positive("volatility", sigma)?;
    if !sigma_slope.is_finite() {
        return Err(TailError::parameter(format!("skew slope must be finite, got {sigma_slope}")));
    }
    if !(strike > spot * (1.0 + l)) {
        return Err(TailError::domain(format!(
            "strike {strike} must exceed S0 (1 + l) = {} for a finite bound",
            spot * (1.0 + l)
        )));
    }

    let (ln_k, ln_s) = (strike.ln(), spot.ln());
    let var = expiry * sigma * sigma;
    let denom = -(strike - spot).ln() + l.ln() + ln_s;

    let spread = 0.5 * erfc((var + 2.0 * ln_k - 2.0 * ln_s) / (2.0 * SQRT_2 * expiry.sqrt() * sigma));
    let ln_kernel = (ln_s / var + 0.5) * ln_k - (ln_k * ln_k + ln_s * ln_s) / (2.0 * var) - var / 8.0;
    let skew = spot.sqrt() * expiry.sqrt() * sigma_slope * ln_kernel.exp() / (2.0 * PI).sqrt();

    let arg = spread - skew;
    if !(arg.is_finite() && arg > 0.0) {
        return Err(TailError::domain(format!(
            "no finite bound: log argument {arg} is not positive (unbounded or invalid input)"
        )));
    }
    Ok(arg.ln() / denom)
}
