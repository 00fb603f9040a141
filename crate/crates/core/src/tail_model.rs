//! Strong-Pareto tail models and their closed-form option prices.
//!
//! Two parameterizations of the right tail are supported. In the first the
//! underlying price itself is Pareto beyond the Karamata constant `l`
//! ([`PriceTailModel`]); in the second it is the simple return
//! `(S - S0)/S0` ([`ReturnTailModel`]). Puts use a Pareto law on the
//! negative return truncated to `(l, 1)` so the price stays positive
//! ([`PutReturnModel`]).
//!
//! Every model is fully pinned by one anchor price and the tail index, so
//! the relative-pricing helpers never need `l` explicitly.

use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Result, TailError};
use crate::quadrature::{self, Integral, Tolerance};

/// Relative slack allowed when a strike sits exactly on a zone boundary
/// after a calibration round trip.
pub const BOUNDARY_REL_TOL: f64 = 1e-12;

/// `base^exponent` evaluated as `exp(exponent · ln base)`; `base > 0`.
#[inline]
fn pow_log(base: f64, exponent: f64) -> f64 {
    (exponent * base.ln()).exp()
}

#[inline]
fn at_or_above(x: f64, bound: f64) -> bool {
    x >= bound * (1.0 - BOUNDARY_REL_TOL)
}

#[inline]
fn at_or_below(x: f64, bound: f64) -> bool {
    x <= bound * (1.0 + BOUNDARY_REL_TOL)
}

/// Tail index of a regularly varying survival function.
///
/// Must exceed one (finite mean). Values within `1e-9` of one are rejected
/// because prices diverge like `1/(α - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct TailIndex(f64);

impl TailIndex {
    pub const MIN_EXCESS: f64 = 1e-9;

    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_finite() && alpha > 1.0 + Self::MIN_EXCESS {
            Ok(Self(alpha))
        } else {
            Err(TailError::parameter(format!(
                "tail index must be finite and exceed 1 + {:e}, got {alpha}",
                Self::MIN_EXCESS
            )))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for TailIndex {
    type Error = TailError;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<TailIndex> for f64 {
    fn from(alpha: TailIndex) -> f64 {
        alpha.0
    }
}

/// Pareto tail on the underlying price: `P(S > s) = (l/s)^α` for `s ≥ l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceTailModel {
    l: f64,
    alpha: TailIndex,
}

impl PriceTailModel {
    pub fn new(l: f64, alpha: TailIndex) -> Result<Self> {
        require_positive("Karamata constant l", l)?;
        Ok(Self { l, alpha })
    }

    /// Calibrates `l` so that the model reprices the anchor call `c_m` at `k1`.
    ///
    /// Fails with a consistency error when the implied `l` lies above `k1`,
    /// i.e. the anchor is not in the strong-Pareto zone.
    pub fn calibrate(c_m: f64, k1: f64, alpha: TailIndex) -> Result<Self> {
        require_positive("anchor price", c_m)?;
        require_positive("anchor strike", k1)?;
        let a = alpha.value();
        let l = (((a - 1.0).ln() + c_m.ln() + (a - 1.0) * k1.ln()) / a).exp();
        if !at_or_below(l, k1) {
            return Err(TailError::Consistency(format!("implied Karamata constant {l} exceeds anchor strike {k1}")));
        }
        Self::new(l, alpha)
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn alpha(&self) -> TailIndex {
        self.alpha
    }

    fn check_zone(&self, x: f64, what: &str) -> Result<()> {
        if x.is_finite() && at_or_above(x, self.l) {
            Ok(())
        } else {
            Err(TailError::domain(format!("{what} {x} is below the Karamata constant {}", self.l)))
        }
    }

    /// `P(S > s) = l^α s^{-α}`.
    pub fn survival(&self, s: f64) -> Result<f64> {
        self.check_zone(s, "level")?;
        Ok(pow_log(self.l / s, self.alpha.value()).min(1.0))
    }

    /// `C(K) = K^{1-α} l^α / (α - 1)`, valid for `K ≥ l`.
    pub fn call_price(&self, strike: f64) -> Result<f64> {
        self.check_zone(strike, "strike")?;
        let a = self.alpha.value();
        Ok((a * self.l.ln() + (1.0 - a) * strike.ln()).exp() / (a - 1.0))
    }

    /// `dC/dK = -(l/K)^α`.
    pub fn call_slope(&self, strike: f64) -> Result<f64> {
        self.check_zone(strike, "strike")?;
        Ok(-pow_log(self.l / strike, self.alpha.value()))
    }
}

/// Pareto tail on the simple return: `P(S > K) = ((K - S0)/(l S0))^{-α}`
/// for `K ≥ S0 (1 + l)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReturnTailModel {
    l: f64,
    alpha: TailIndex,
    spot: f64,
}

impl ReturnTailModel {
    pub fn new(l: f64, alpha: TailIndex, spot: f64) -> Result<Self> {
        require_positive("Karamata constant l", l)?;
        require_positive("spot", spot)?;
        Ok(Self { l, alpha, spot })
    }

    /// Calibrates `l` from an anchor call; the anchor must end up at or
    /// beyond `S0 (1 + l)`.
    pub fn calibrate(c_m: f64, k1: f64, spot: f64, alpha: TailIndex) -> Result<Self> {
        require_positive("anchor price", c_m)?;
        require_positive("spot", spot)?;
        if !(k1.is_finite() && k1 > spot) {
            return Err(TailError::domain(format!("anchor strike {k1} must lie above spot {spot}")));
        }
        let a = alpha.value();
        let l = (((a - 1.0).ln() + c_m.ln() + (a - 1.0) * (k1 - spot).ln()) / a).exp() / spot;
        let model = Self::new(l, alpha, spot)?;
        if !at_or_above(k1, model.zone_start()) {
            return Err(TailError::Consistency(format!(
                "anchor strike {k1} lies inside the Karamata point {} implied by l = {l}",
                model.zone_start()
            )));
        }
        Ok(model)
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn alpha(&self) -> TailIndex {
        self.alpha
    }

    pub fn spot(&self) -> f64 {
        self.spot
    }

    /// First strike of the strong-Pareto zone, `S0 (1 + l)`.
    pub fn zone_start(&self) -> f64 {
        self.spot * (1.0 + self.l)
    }

    fn check_zone(&self, strike: f64) -> Result<()> {
        if strike.is_finite() && strike > self.spot && at_or_above(strike, self.zone_start()) {
            Ok(())
        } else {
            Err(TailError::domain(format!("strike {strike} is inside the Karamata point {}", self.zone_start())))
        }
    }

    pub fn survival(&self, strike: f64) -> Result<f64> {
        self.check_zone(strike)?;
        let scale = self.l * self.spot;
        Ok(pow_log((strike - self.spot) / scale, -self.alpha.value()).min(1.0))
    }

    /// `C(K, S0) = (l S0)^α (K - S0)^{1-α} / (α - 1)`.
    pub fn call_price(&self, strike: f64) -> Result<f64> {
        self.check_zone(strike)?;
        let a = self.alpha.value();
        let ln_scale = (self.l * self.spot).ln();
        Ok((a * ln_scale + (1.0 - a) * (strike - self.spot).ln()).exp() / (a - 1.0))
    }

    /// `dC/dK = -(l S0)^α (K - S0)^{-α}`.
    pub fn call_slope(&self, strike: f64) -> Result<f64> {
        self.check_zone(strike)?;
        let a = self.alpha.value();
        Ok(-pow_log(self.l * self.spot / (strike - self.spot), a))
    }

    /// Risk-neutral density `α (l S0)^α (K - S0)^{-α-1}`.
    pub fn density(&self, strike: f64) -> Result<f64> {
        self.check_zone(strike)?;
        let a = self.alpha.value();
        let ln_scale = (self.l * self.spot).ln();
        Ok(a * (a * ln_scale - (a + 1.0) * (strike - self.spot).ln()).exp())
    }
}

/// Truncated Pareto on the negative return `r ∈ (l, 1)` with `S = (1 - r) S0`.
///
/// Density in price space: `f(S) = λ α (l S0)^α (S0 - S)^{-α-1}` on
/// `(0, (1 - l) S0)` with `λ = 1/(1 - l^α)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PutReturnModel {
    l: f64,
    alpha: TailIndex,
    spot: f64,
    lambda: f64,
}

impl PutReturnModel {
    pub fn new(l: f64, alpha: TailIndex, spot: f64) -> Result<Self> {
        if !(l.is_finite() && l > 0.0 && l < 1.0) {
            return Err(TailError::parameter(format!("put-side Karamata constant must lie in (0, 1), got {l}")));
        }
        require_positive("spot", spot)?;
        // 1/(1 - l^α) without cancellation for l^α near 1.
        let lambda = -1.0 / (alpha.value() * l.ln()).exp_m1();
        Ok(Self { l, alpha, spot, lambda })
    }

    /// Inverts [`put_price`](Self::put_price) for `l` given an anchor put.
    ///
    /// With `y = P (α - 1) / (S0 g(K/S0))` the calibrated constant satisfies
    /// `l^α = y / (1 + y)`.
    pub fn calibrate(p_m: f64, k1: f64, spot: f64, alpha: TailIndex) -> Result<Self> {
        require_positive("anchor price", p_m)?;
        require_positive("spot", spot)?;
        if !(k1.is_finite() && k1 > 0.0 && k1 < spot) {
            return Err(TailError::domain(format!("anchor put strike {k1} must lie in (0, {spot})")));
        }
        let a = alpha.value();
        let y = p_m * (a - 1.0) / (spot * put_shape(a, k1 / spot));
        let l = ((y / (1.0 + y)).ln() / a).exp();
        let model = Self::new(l, alpha, spot)?;
        if !at_or_below(k1, model.zone_end()) {
            return Err(TailError::Consistency(format!(
                "anchor put strike {k1} lies above the Karamata point {} implied by l = {l}",
                model.zone_end()
            )));
        }
        Ok(model)
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn alpha(&self) -> TailIndex {
        self.alpha
    }

    pub fn spot(&self) -> f64 {
        self.spot
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Upper end of the put zone, `(1 - l) S0`.
    pub fn zone_end(&self) -> f64 {
        (1.0 - self.l) * self.spot
    }

    pub fn density(&self, s: f64) -> Result<f64> {
        if !(s.is_finite() && s > 0.0 && at_or_below(s, self.zone_end())) {
            return Err(TailError::domain(format!("level {s} outside the put zone (0, {}]", self.zone_end())));
        }
        let a = self.alpha.value();
        let ln_scale = (self.l * self.spot).ln();
        Ok(self.lambda * a * (a * ln_scale - (a + 1.0) * (self.spot - s).ln()).exp())
    }

    /// Mass of the density over its support, by adaptive quadrature.
    pub fn total_mass(&self, tol: Tolerance) -> Result<Integral> {
        let end = self.zone_end();
        quadrature::integrate(|s| self.density(s.min(end)).unwrap_or(0.0), 0.0, end, tol)
    }

    /// `P(K) = λ l^α/(α - 1) · [S0^α (S0 - K)^{1-α} - ((α - 1) K + S0)]`
    /// for `0 < K ≤ (1 - l) S0`.
    pub fn put_price(&self, strike: f64) -> Result<f64> {
        if !(strike.is_finite() && strike > 0.0) {
            return Err(TailError::domain(format!("put strike must be positive, got {strike}")));
        }
        if !at_or_below(strike, self.zone_end()) {
            return Err(TailError::domain(format!("put strike {strike} above the Karamata point {}", self.zone_end())));
        }
        let a = self.alpha.value();
        let strike = strike.min(self.zone_end());
        Ok(self.lambda * pow_log(self.l, a) / (a - 1.0) * self.spot * put_shape(a, strike / self.spot))
    }
}

/// `g(x) = (1 - x)^{1-α} - 1 - (α - 1) x`, so that the bracketed put term is
/// `S0 · g(K/S0)`.
///
/// For small `x` the two leading terms cancel; the binomial series
/// `Σ_{n≥2} (α-1)_n x^n / n!` (rising factorials) is used there instead.
pub(crate) fn put_shape(alpha: f64, x: f64) -> f64 {
    let beta = alpha - 1.0;
    if x < 0.1 {
        let mut term = beta * (beta + 1.0) * x * x / 2.0;
        let mut sum = term;
        let mut n = 2.0;
        while term.abs() > 1e-18 * sum.abs() && n < 1000.0 {
            term *= (beta + n) * x / (n + 1.0);
            sum += term;
            n += 1.0;
        }
        sum
    } else {
        (-beta * (-x).ln_1p()).exp_m1() - beta * x
    }
}

/// Price-tail ratio: `C(K2) = (K2/K1)^{1-α} C(K1)`.
///
/// The anchor is validated by calibrating `l`, and `K2` must sit in the
/// resulting strong-Pareto zone.
pub fn relative_call_price_tail(c_k1: f64, k1: f64, k2: f64, alpha: TailIndex) -> Result<f64> {
    let model = PriceTailModel::calibrate(c_k1, k1, alpha)?;
    model.check_zone(k2, "strike")?;
    Ok(c_k1 * pow_log(k2 / k1, 1.0 - alpha.value()))
}

/// Return-tail ratio: `C(K2) = ((K2 - S0)/(K1 - S0))^{1-α} C(K1)`.
pub fn relative_call_return(c_k1: f64, k1: f64, k2: f64, spot: f64, alpha: TailIndex) -> Result<f64> {
    let model = ReturnTailModel::calibrate(c_k1, k1, spot, alpha)?;
    model.check_zone(k2)?;
    Ok(c_k1 * pow_log((k2 - spot) / (k1 - spot), 1.0 - alpha.value()))
}

/// Put ratio in which both `l` and `λ` cancel:
///
/// `P(K2) = P(K1) · g(K2/S0) / g(K1/S0)`.
///
/// Only `0 < K < S0` can be checked here; the tighter `K ≤ (1 - l) S0`
/// needs `l`, which the ratio does not see. Callers holding an anchor can
/// use [`PutReturnModel::calibrate`] for that check.
pub fn relative_put(p_k1: f64, k1: f64, k2: f64, spot: f64, alpha: TailIndex) -> Result<f64> {
    require_positive("anchor price", p_k1)?;
    require_positive("spot", spot)?;
    for k in [k1, k2] {
        if !(k.is_finite() && k > 0.0 && k < spot) {
            return Err(TailError::domain(format!("put strike {k} must lie in (0, {spot})")));
        }
    }
    let a = alpha.value();
    Ok(p_k1 * put_shape(a, k2 / spot) / put_shape(a, k1 / spot))
}

/// Coordinate in which a Zipf (log-log survival) plot is drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZipfTransform {
    /// The raw underlying `S`.
    Identity,
    /// `x = (S - S0)/S0`.
    SimpleReturn { spot: f64 },
    /// `r = ln(S/S0)`.
    LogReturn { spot: f64 },
}

const ZIPF_LOG_STEP: f64 = 1e-4;

/// Local slope `d ln P(X > x) / d ln x` of the transformed variable under a
/// [`PriceTailModel`], by central differences in `ln x`.
///
/// A power law has a constant slope; for log returns the survival is
/// exponential in `r` and the slope `-α r` grows without bound.
pub fn zipf_local_slope(model: &PriceTailModel, transform: ZipfTransform, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    let a = model.alpha().value();
    let ln_l = model.l().ln();
    let underlying = |x: f64| -> f64 {
        match transform {
            ZipfTransform::Identity => x,
            ZipfTransform::SimpleReturn { spot } => spot * (1.0 + x),
            ZipfTransform::LogReturn { spot } => spot * x.exp(),
        }
    };
    let ln_survival = |x: f64| -> f64 {
        let ln_s = match transform {
            ZipfTransform::Identity => x.ln(),
            ZipfTransform::SimpleReturn { spot } => spot.ln() + x.ln_1p(),
            ZipfTransform::LogReturn { spot } => spot.ln() + x,
        };
        a * (ln_l - ln_s)
    };
    if let ZipfTransform::SimpleReturn { spot } | ZipfTransform::LogReturn { spot } = transform {
        require_positive("spot", spot)?;
    }

    grid.iter()
        .map(|&x| {
            if !(x.is_finite() && x > 0.0) || !at_or_above(underlying(x), model.l()) {
                return Err(TailError::domain(format!("grid point {x} outside the transformed Pareto domain")));
            }
            let up = x * ZIPF_LOG_STEP.exp();
            let down = x * (-ZIPF_LOG_STEP).exp();
            let slope = (ln_survival(up) - ln_survival(down)) / (2.0 * ZIPF_LOG_STEP);
            Ok((x, slope))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alpha(a: f64) -> TailIndex {
        TailIndex::new(a).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn tail_index_bounds() {
        assert!(TailIndex::new(1.0).is_err());
        assert!(TailIndex::new(1.0 + 5e-10).is_err());
        assert!(TailIndex::new(f64::NAN).is_err());
        assert!(TailIndex::new(1.5).is_ok());
        let parsed: TailIndex = serde_json::from_str("2.75").unwrap();
        assert_eq!(parsed.value(), 2.75);
        assert!(serde_json::from_str::<TailIndex>("0.5").is_err());
    }

    #[test]
    fn price_tail_survival_examples() {
        let m = PriceTailModel::new(1.0, alpha(2.0)).unwrap();
        assert_eq!(m.survival(1.0).unwrap(), 1.0);
        assert!(rel(m.survival(10.0).unwrap(), 0.01) < 1e-15);
        let m = PriceTailModel::new(2.0, alpha(2.75)).unwrap();
        // exp(α (ln l - ln s)), evaluated independently.
        let oracle = (2.75 * (2f64.ln() - 5f64.ln())).exp();
        assert!(rel(m.survival(5.0).unwrap(), oracle) < 1e-15);
        assert!(rel(m.survival(5.0).unwrap(), 0.080_475_739_499_707_866) < 1e-14);
        assert!(matches!(m.survival(1.9), Err(TailError::Domain(_))));
    }

    #[test]
    fn price_tail_call_examples() {
        let m = PriceTailModel::new(1.0, alpha(2.0)).unwrap();
        assert!(rel(m.call_price(2.0).unwrap(), 0.5) < 1e-15);
        assert!(rel(m.call_price(1.0).unwrap(), 1.0) < 1e-15);
        assert!(m.call_price(0.99).is_err());
        let m = PriceTailModel::new(2.0, alpha(2.75)).unwrap();
        assert!(rel(m.call_price(10.0).unwrap(), 0.068_358_801_427_255_796) < 1e-14);
    }

    #[test]
    fn price_tail_calibration_round_trips() {
        let m = PriceTailModel::calibrate(0.5, 2.0, alpha(2.0)).unwrap();
        assert!(rel(m.l(), 1.0) < 1e-14);
        // Fixed point at the Karamata constant: C = l/(α - 1) at K1 = l.
        let m = PriceTailModel::calibrate(3.0 / 1.5, 3.0, alpha(2.5)).unwrap();
        assert!(rel(m.l(), 3.0) < 1e-14);
        let m = PriceTailModel::calibrate(0.068_358_801_427_255_796, 10.0, alpha(2.75)).unwrap();
        assert!(rel(m.l(), 2.0) < 1e-14);
        assert!(rel(m.call_price(10.0).unwrap(), 0.068_358_801_427_255_796) < 1e-12);
    }

    #[test]
    fn price_tail_calibration_rejects_anchor_inside_zone() {
        // l/(α - 1) at K1 = l is the largest admissible price; go above it.
        let err = PriceTailModel::calibrate(5.0, 2.0, alpha(2.0)).unwrap_err();
        assert!(matches!(err, TailError::Consistency(_)));
    }

    #[test]
    fn relative_price_tail_examples() {
        assert!(rel(relative_call_price_tail(0.5, 2.0, 2.0, alpha(2.0)).unwrap(), 0.5) < 1e-15);
        assert_eq!(relative_call_price_tail(0.5, 2.0, 4.0, alpha(2.0)).unwrap(), 0.25);
        let r = relative_call_price_tail(1.0, 100.0, 200.0, alpha(2.75)).unwrap();
        assert!(rel(r, 0.297_301_778_750_680_266_68) < 1e-14);
    }

    #[test]
    fn return_tail_examples() {
        let m = ReturnTailModel::new(0.1, alpha(2.0), 100.0).unwrap();
        assert!(rel(m.survival(110.0).unwrap(), 1.0) < 1e-14);
        assert!(rel(m.survival(120.0).unwrap(), 0.25) < 1e-14);
        assert!(rel(m.call_price(120.0).unwrap(), 5.0) < 1e-14);
        assert!(rel(m.call_price(110.0).unwrap(), 10.0) < 1e-13);
        assert!(m.survival(105.0).is_err());
        assert!(m.call_price(109.0).is_err());

        let m = ReturnTailModel::new(0.05, alpha(2.75), 100.0).unwrap();
        assert!(rel(m.survival(150.0).unwrap(), 0.001_778_279_410_038_922_8) < 1e-13);
        assert!(rel(m.call_price(150.0).unwrap(), 0.050_807_983_143_969_222_89) < 1e-13);
    }

    #[test]
    fn return_tail_calibration() {
        let m = ReturnTailModel::calibrate(5.0, 120.0, 100.0, alpha(2.0)).unwrap();
        assert!(rel(m.l(), 0.1) < 1e-14);
        // Boundary fixed point.
        let l = 0.07;
        let a = 3.1;
        let c = l * 100.0 / (a - 1.0);
        let m = ReturnTailModel::calibrate(c, 100.0 * (1.0 + l), 100.0, alpha(a)).unwrap();
        assert!(rel(m.l(), l) < 1e-13);
        let m = ReturnTailModel::calibrate(0.050_807_983_143_969_222_89, 150.0, 100.0, alpha(2.75)).unwrap();
        assert!(rel(m.l(), 0.05) < 1e-13);
        assert!(matches!(ReturnTailModel::calibrate(50.0, 120.0, 100.0, alpha(2.0)), Err(TailError::Consistency(_))));
        assert!(ReturnTailModel::calibrate(1.0, 90.0, 100.0, alpha(2.0)).is_err());
    }

    #[test]
    fn relative_return_examples() {
        assert!(rel(relative_call_return(5.0, 120.0, 120.0, 100.0, alpha(2.0)).unwrap(), 5.0) < 1e-15);
        assert!(rel(relative_call_return(5.0, 120.0, 140.0, 100.0, alpha(2.0)).unwrap(), 2.5) < 1e-15);
        let r = relative_call_return(1.0, 110.0, 130.0, 100.0, alpha(2.75)).unwrap();
        assert!(rel(r, 0.146_230_445_883_610_273_42) < 1e-14);
    }

    #[test]
    fn put_density_examples() {
        let m = PutReturnModel::new(0.1, alpha(2.0), 100.0).unwrap();
        assert!(rel(m.lambda(), 1.0 / 0.99) < 1e-15);
        assert!(rel(m.density(80.0).unwrap(), 0.025 / 0.99) < 1e-14);
        assert!(m.density(95.0).is_err());
        assert!(m.density(0.0).is_err());
        let mass = m.total_mass(Tolerance::relative(1e-12)).unwrap();
        assert!((mass.value - 1.0).abs() < 1e-9);

        let m = PutReturnModel::new(0.5, alpha(2.0), 100.0).unwrap();
        assert!(rel(m.lambda(), 4.0 / 3.0) < 1e-15);
        assert!(PutReturnModel::new(1.0, alpha(2.0), 100.0).is_err());
    }

    #[test]
    fn put_density_matches_numeric_derivative_of_return_cdf() {
        // P(S ≤ s) = P(r ≥ 1 - s/S0) = λ ((1 - s/S0)^{-α} l^α - l^α) for s in the zone.
        let (l, a, s0): (f64, f64, f64) = (0.1, 2.0, 100.0);
        let lambda = 1.0 / (1.0 - l * l);
        let cdf = |s: f64| lambda * (l.powf(a) * (1.0 - s / s0).powf(-a) - l.powf(a));
        let h = 1e-4;
        let fd = (cdf(80.0 + h) - cdf(80.0 - h)) / (2.0 * h);
        let m = PutReturnModel::new(l, alpha(a), s0).unwrap();
        assert!(rel(m.density(80.0).unwrap(), fd) < 1e-7);
    }

    #[test]
    fn put_price_examples() {
        let m = PutReturnModel::new(0.1, alpha(2.0), 100.0).unwrap();
        assert!(rel(m.put_price(90.0).unwrap(), 8.1 / 0.99) < 1e-14);
        assert!(m.put_price(90.5).is_err());
        assert!(m.put_price(0.0).is_err());
        assert!(m.put_price(1e-9).unwrap() < 1e-15);
    }

    #[test]
    fn put_calibration_round_trip() {
        for (l, a, k) in [(0.1, 2.0, 90.0), (0.25, 2.75, 60.0), (0.02, 1.5, 97.0)] {
            let m = PutReturnModel::new(l, alpha(a), 100.0).unwrap();
            let p = m.put_price(k).unwrap();
            let back = PutReturnModel::calibrate(p, k, 100.0, alpha(a)).unwrap();
            assert!(rel(back.l(), l) < 1e-12, "l {l} recovered as {}", back.l());
        }
        let m = PutReturnModel::new(0.1, alpha(2.0), 100.0).unwrap();
        let p = m.put_price(90.0).unwrap();
        assert!(matches!(PutReturnModel::calibrate(p * 3.0, 90.0, 100.0, alpha(2.0)), Err(TailError::Consistency(_))));
    }

    #[test]
    fn put_shape_series_and_closed_form_agree_at_switch() {
        for a in [1.5, 2.0, 2.75, 4.0] {
            let x = 0.1;
            let series = {
                let beta = a - 1.0;
                let mut term = beta * (beta + 1.0) * x * x / 2.0;
                let mut sum = term;
                for n in 2..400 {
                    term *= (beta + n as f64) * x / (n as f64 + 1.0);
                    sum += term;
                }
                sum
            };
            assert!(rel(put_shape(a, x), series) < 1e-14);
            // Integer α = 2: g(x) = x^2/(1 - x).
            if a == 2.0 {
                for x in [1e-6, 0.05, 0.3, 0.9] {
                    assert!(rel(put_shape(a, x), x * x / (1.0 - x)) < 1e-14);
                }
            }
        }
    }

    #[test]
    fn relative_put_examples() {
        let p = relative_put(8.1818, 90.0, 90.0, 100.0, alpha(2.0)).unwrap();
        assert!(rel(p, 8.1818) < 1e-15);
        let r = relative_put(1.0, 90.0, 80.0, 100.0, alpha(2.0)).unwrap();
        assert!(rel(r, 320.0 / 810.0) < 1e-14);
        let r = relative_put(1.0, 90.0, 85.0, 100.0, alpha(2.75)).unwrap();
        assert!(rel(r, 0.469_104_554_124_391_023_54) < 1e-13);
        assert!(relative_put(1.0, 90.0, 100.0, 100.0, alpha(2.0)).is_err());
        assert!(relative_put(1.0, 0.0, 80.0, 100.0, alpha(2.0)).is_err());
    }

    #[test]
    fn zipf_identity_slope_is_minus_alpha() {
        let m = PriceTailModel::new(1.5, alpha(2.75)).unwrap();
        let out = zipf_local_slope(&m, ZipfTransform::Identity, &[1.5, 3.0, 100.0, 1e6]).unwrap();
        for (_, s) in out {
            assert!((s + 2.75).abs() < 1e-6);
        }
        assert!(zipf_local_slope(&m, ZipfTransform::Identity, &[1.0]).is_err());
    }

    #[test]
    fn zipf_log_return_slope_doubles() {
        let m = PriceTailModel::new(50.0, alpha(3.0)).unwrap();
        let out = zipf_local_slope(&m, ZipfTransform::LogReturn { spot: 100.0 }, &[1.0, 2.0]).unwrap();
        // Analytic: slope = -α r.
        assert!(rel(out[0].1, -3.0) < 1e-8);
        assert!(rel(out[1].1 / out[0].1, 2.0) < 1e-8);
    }

    #[test]
    fn zipf_simple_return_tends_to_minus_alpha() {
        let m = PriceTailModel::new(50.0, alpha(2.0)).unwrap();
        let grid: Vec<f64> = (0..8).map(|i| 10f64.powi(i - 1)).collect();
        let out = zipf_local_slope(&m, ZipfTransform::SimpleReturn { spot: 100.0 }, &grid).unwrap();
        for w in out.windows(2) {
            assert!(w[1].1 < w[0].1);
        }
        let last = out.last().unwrap();
        assert!((last.1 + 2.0).abs() < 1e-5);
        // Analytic: -α x / (1 + x).
        for (x, s) in &out {
            assert!(rel(*s, -2.0 * x / (1.0 + x)) < 1e-7);
        }
    }
}
