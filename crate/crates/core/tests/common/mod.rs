//! Independent oracles shared by the integration tests.
//!
//! Everything here integrates payoffs against densities written out from
//! scratch; nothing calls the closed-form pricers under test.

#![allow(dead_code)]

use std::f64::consts::PI;

use tailprice::quadrature::{integrate, integrate_to_infinity, Tolerance};

pub fn oracle_tol() -> Tolerance {
    Tolerance::relative(1e-11)
}

pub fn rel_err(got: f64, expected: f64) -> f64 {
    ((got - expected) / expected).abs()
}

/// `∫_K^∞ (S - K) α l^α S^{-α-1} dS` for a Pareto underlying.
pub fn call_oracle_price_tail(l: f64, alpha: f64, strike: f64) -> f64 {
    let density = |s: f64| alpha * l.powf(alpha) * s.powf(-alpha - 1.0);
    let lower = strike.max(l);
    integrate_to_infinity(|s| (s - strike) * density(s), lower, oracle_tol()).unwrap().value
}

/// Same payoff for a Pareto simple return, integrated in `y = S - S0`.
pub fn call_oracle_return_tail(l: f64, alpha: f64, spot: f64, strike: f64) -> f64 {
    let scale = l * spot;
    let density = |y: f64| alpha * scale.powf(alpha) * y.powf(-alpha - 1.0);
    let ky = strike - spot;
    integrate_to_infinity(|y| (y - ky) * density(y), ky.max(scale), oracle_tol()).unwrap().value
}

/// Survival-integral form `∫_K^∞ P(S > x) dx` of the return-tail call.
pub fn call_oracle_return_survival(l: f64, alpha: f64, spot: f64, strike: f64) -> f64 {
    let scale = l * spot;
    integrate_to_infinity(|k| ((k - spot) / scale).powf(-alpha), strike, oracle_tol()).unwrap().value
}

/// Truncated-Pareto put density in price space, written from the return law:
/// `r ~ Pareto(l, α)` conditioned on `r < 1`, `S = (1 - r) S0`.
pub fn put_density_oracle(l: f64, alpha: f64, spot: f64, s: f64) -> f64 {
    let r = 1.0 - s / spot;
    if r <= l || r >= 1.0 {
        return 0.0;
    }
    let mass = 1.0 - l.powf(alpha);
    let f_r = alpha * l.powf(alpha) * r.powf(-alpha - 1.0);
    f_r / mass / spot
}

pub fn put_oracle(l: f64, alpha: f64, spot: f64, strike: f64) -> f64 {
    integrate(|s| (strike - s) * put_density_oracle(l, alpha, spot, s), 0.0, strike, Tolerance::relative(1e-12))
        .unwrap()
        .value
}

/// Zero-rate call by integrating `(S - K)^+` against the lognormal density
/// with mean `S0`.
pub fn bs_call_oracle(spot: f64, strike: f64, sigma: f64, t: f64) -> f64 {
    let sd = sigma * t.sqrt();
    let mu = spot.ln() - 0.5 * sd * sd;
    let pdf = |s: f64| {
        let z = (s.ln() - mu) / sd;
        (-0.5 * z * z).exp() / (s * sd * (2.0 * PI).sqrt())
    };
    // Split at the median and a few standard deviations above it.
    let median = mu.exp();
    let mut points = vec![strike];
    for n in [0.0, 2.0, 5.0, 10.0, 20.0] {
        let p = median * (n * sd).exp();
        if p > strike {
            points.push(p);
        }
    }
    let mut total = 0.0;
    for w in points.windows(2) {
        total += integrate(|s| (s - strike) * pdf(s), w[0], w[1], Tolerance::relative(1e-13)).unwrap().value;
    }
    let last = *points.last().unwrap();
    total + integrate_to_infinity(|s| (s - strike) * pdf(s), last, Tolerance { abs: 1e-300, rel: 1e-13 }).unwrap().value
}

/// Bisection for a sign change of `f` on `[lo, hi]`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> Option<f64> {
    let (mut flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 || (hi - lo) <= 1e-15 * mid.abs() {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}
