//! Option-chain ingestion and tail-curve generation against market quotes.

use std::collections::HashSet;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::black_scholes::{implied_vol, OptionSide};
use crate::error::{require_positive, Result, TailError};
use crate::tail_model::{
    relative_call_price_tail, relative_call_return, relative_put, PriceTailModel, PutReturnModel, ReturnTailModel,
    TailIndex,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionQuote {
    pub strike: f64,
    #[serde(with = "side_code")]
    pub side: OptionSide,
    pub price: f64,
}

mod side_code {
    use super::OptionSide;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(side: &OptionSide, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(side)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<OptionSide, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

/// A single-expiry snapshot: spot, time to expiry and quotes sorted by strike.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Chain {
    pub spot: f64,
    pub expiry_years: f64,
    quotes: Vec<OptionQuote>,
}

impl Chain {
    pub fn new(spot: f64, expiry_years: f64, quotes: Vec<OptionQuote>) -> Result<Self> {
        let located = quotes.into_iter().enumerate().map(|(i, q)| (format!("quote #{}", i + 1), q)).collect();
        Self::from_located(spot, expiry_years, located)
    }

    fn from_located(spot: f64, expiry_years: f64, quotes: Vec<(String, OptionQuote)>) -> Result<Self> {
        let meta = |message: String| TailError::Validation { location: "chain".into(), message };
        if !(spot.is_finite() && spot > 0.0) {
            return Err(meta(format!("spot must be positive, got {spot}")));
        }
        if !(expiry_years.is_finite() && expiry_years > 0.0) {
            return Err(meta(format!("expiry_years must be positive, got {expiry_years}")));
        }
        let mut seen = HashSet::new();
        for (location, q) in &quotes {
            let invalid = |message: String| TailError::Validation { location: location.clone(), message };
            if !(q.strike.is_finite() && q.strike > 0.0) {
                return Err(invalid(format!("strike must be positive, got {}", q.strike)));
            }
            if !(q.price.is_finite() && q.price >= 0.0) {
                return Err(invalid(format!("price must be nonnegative, got {}", q.price)));
            }
            if !seen.insert((q.side, q.strike.to_bits())) {
                return Err(invalid(format!("duplicate {} strike {}", q.side, q.strike)));
            }
        }
        let mut quotes: Vec<OptionQuote> = quotes.into_iter().map(|(_, q)| q).collect();
        quotes.sort_by(|a, b| a.strike.total_cmp(&b.strike).then(a.side.cmp(&b.side)));
        Ok(Self { spot, expiry_years, quotes })
    }

    pub fn quotes(&self) -> &[OptionQuote] {
        &self.quotes
    }

    pub fn side(&self, side: OptionSide) -> impl Iterator<Item = &OptionQuote> + '_ {
        self.quotes.iter().filter(move |q| q.side == side)
    }

    pub fn quote_at(&self, side: OptionSide, strike: f64) -> Option<&OptionQuote> {
        self.side(side).find(|q| q.strike == strike)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainFormat {
    Csv,
    Json,
}

/// Spot and expiry accompanying a CSV chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainMeta {
    pub spot: f64,
    pub expiry_years: f64,
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    strike: f64,
    side: String,
    price: f64,
}

#[derive(Debug, Deserialize)]
struct JsonChain {
    spot: f64,
    expiry_years: f64,
    #[serde(default)]
    quotes: Vec<OptionQuote>,
}

pub const CSV_HEADER: [&str; 3] = ["strike", "side", "price"];

/// Reads a `strike,side,price` CSV; spot and expiry come from `meta`.
pub fn load_chain_csv<R: Read>(source: R, meta: ChainMeta) -> Result<Chain> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let header = reader.headers().map_err(|e| TailError::Parse { line: 1, message: e.to_string() })?.clone();
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(TailError::Parse {
            line: 1,
            message: format!(
                "expected header '{}', got '{}'",
                CSV_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut quotes = Vec::new();
    for record in reader.records() {
        let record = record
            .map_err(|e| TailError::Parse { line: e.position().map_or(0, |p| p.line()), message: e.to_string() })?;
        let line = record.position().map_or(0, |p| p.line());
        let row: CsvRow =
            record.deserialize(Some(&header)).map_err(|e| TailError::Parse { line, message: e.to_string() })?;
        let side = row.side.parse::<OptionSide>().map_err(|message| TailError::Parse { line, message })?;
        quotes.push((format!("line {line}"), OptionQuote { strike: row.strike, side, price: row.price }));
    }
    Chain::from_located(meta.spot, meta.expiry_years, quotes)
}

/// Reads `{ "spot", "expiry_years", "quotes": [{ "strike", "side", "price" }] }`.
pub fn load_chain_json<R: Read>(source: R) -> Result<Chain> {
    let raw: JsonChain = serde_json::from_reader(source)
        .map_err(|e| TailError::Parse { line: e.line() as u64, message: e.to_string() })?;
    Chain::new(raw.spot, raw.expiry_years, raw.quotes)
}

/// Reads only the spot/expiry metadata of a JSON sidecar; any quotes are ignored.
pub fn load_meta_json<R: Read>(source: R) -> Result<ChainMeta> {
    let raw: JsonChain = serde_json::from_reader(source)
        .map_err(|e| TailError::Parse { line: e.line() as u64, message: e.to_string() })?;
    Ok(ChainMeta { spot: raw.spot, expiry_years: raw.expiry_years })
}

pub fn load_chain<R: Read>(source: R, format: ChainFormat, meta: Option<ChainMeta>) -> Result<Chain> {
    match format {
        ChainFormat::Json => load_chain_json(source),
        ChainFormat::Csv => {
            let meta = meta.ok_or_else(|| TailError::Validation {
                location: "chain".into(),
                message: "CSV chains need spot and expiry (flags or JSON sidecar)".into(),
            })?;
            load_chain_csv(source, meta)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnchorSpec {
    Strike(f64),
    /// Percent of spot, e.g. `90.0` for `K = 0.9 S0`.
    Moneyness(f64),
}

/// Default anchor search radius, as a fraction of spot.
pub const DEFAULT_ANCHOR_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSelection {
    pub quote: OptionQuote,
    pub requested_strike: f64,
    /// Set when the nearest listed strike differs from the requested one.
    pub note: Option<String>,
}

/// Picks the quote on `side` nearest to the requested strike, within
/// `tolerance · spot`. Ties go to the lower strike.
pub fn select_anchor(chain: &Chain, side: OptionSide, spec: AnchorSpec, tolerance: f64) -> Result<AnchorSelection> {
    let requested = match spec {
        AnchorSpec::Strike(k) => k,
        AnchorSpec::Moneyness(pct) => chain.spot * pct / 100.0,
    };
    require_positive("requested anchor strike", requested)?;
    let best = chain
        .side(side)
        .filter(|q| q.price > 0.0)
        .min_by(|a, b| (a.strike - requested).abs().total_cmp(&(b.strike - requested).abs()))
        .ok_or_else(|| TailError::NoCandidate(format!("chain has no priced {side} quotes")))?;
    let distance = (best.strike - requested).abs();
    if distance > tolerance * chain.spot {
        return Err(TailError::NoCandidate(format!(
            "nearest {side} strike {} is {distance} away from requested {requested} (limit {})",
            best.strike,
            tolerance * chain.spot
        )));
    }
    let note = (distance > 0.0)
        .then(|| format!("requested strike {requested} resolved to nearest listed {side} strike {}", best.strike));
    Ok(AnchorSelection { quote: *best, requested_strike: requested, note })
}

/// Call-side tail parameterization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailApproach {
    PriceTail,
    ReturnTail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRecord {
    pub strike: f64,
    pub model_price: Option<f64>,
    pub implied_vol_model: Option<f64>,
    pub market_price: Option<f64>,
    pub implied_vol_market: Option<f64>,
    /// `model / market`, present only with a positive market price.
    pub ratio: Option<f64>,
    pub issue: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratedCurve {
    pub spot: f64,
    pub expiry_years: f64,
    pub side: OptionSide,
    pub approach: TailApproach,
    pub alpha: TailIndex,
    pub anchor: OptionQuote,
    /// Karamata constant implied by the anchor (price units for the price
    /// tail, return units otherwise).
    pub karamata: f64,
    pub records: Vec<CurveRecord>,
    pub warnings: Vec<String>,
}

/// Extends the anchor across every chain strike of `side` beyond it.
///
/// Calls use the price-tail or return-tail ratio according to `approach`;
/// puts always use the truncated-Pareto put ratio and ignore `approach`.
/// Failures at individual strikes are recorded on the row.
pub fn generate_curve(
    chain: &Chain,
    side: OptionSide,
    anchor: &OptionQuote,
    alpha: TailIndex,
    approach: TailApproach,
) -> Result<GeneratedCurve> {
    let strikes: Vec<f64> = chain
        .side(side)
        .map(|q| q.strike)
        .filter(|&k| match side {
            OptionSide::Call => k >= anchor.strike,
            OptionSide::Put => k <= anchor.strike,
        })
        .collect();
    let mut strikes = strikes;
    if !strikes.contains(&anchor.strike) {
        strikes.push(anchor.strike);
        strikes.sort_by(f64::total_cmp);
    }
    generate_curve_at(chain, side, anchor, alpha, approach, &strikes)
}

/// Same as [`generate_curve`] at caller-chosen strikes.
pub fn generate_curve_at(
    chain: &Chain,
    side: OptionSide,
    anchor: &OptionQuote,
    alpha: TailIndex,
    approach: TailApproach,
    strikes: &[f64],
) -> Result<GeneratedCurve> {
    if anchor.side != side {
        return Err(TailError::parameter(format!("anchor is a {} but the curve side is {side}", anchor.side)));
    }
    let (spot, t) = (chain.spot, chain.expiry_years);
    let mut warnings = Vec::new();

    let (karamata, pricer): (f64, Box<dyn Fn(f64) -> Result<f64>>) = match side {
        OptionSide::Call => match approach {
            TailApproach::PriceTail => {
                let m = PriceTailModel::calibrate(anchor.price, anchor.strike, alpha)?;
                let a = *anchor;
                (m.l(), Box::new(move |k| relative_call_price_tail(a.price, a.strike, k, alpha)))
            }
            TailApproach::ReturnTail => {
                let m = ReturnTailModel::calibrate(anchor.price, anchor.strike, spot, alpha)?;
                let a = *anchor;
                (m.l(), Box::new(move |k| relative_call_return(a.price, a.strike, k, spot, alpha)))
            }
        },
        OptionSide::Put => {
            let m = PutReturnModel::calibrate(anchor.price, anchor.strike, spot, alpha)?;
            let zone_end = m.zone_end();
            let a = *anchor;
            if approach == TailApproach::PriceTail {
                warnings.push("puts are always priced on returns; price-tail approach ignored".into());
            }
            (
                m.l(),
                Box::new(move |k| {
                    if k > zone_end * (1.0 + crate::tail_model::BOUNDARY_REL_TOL) {
                        return Err(TailError::domain(format!("put strike {k} above the Karamata point {zone_end}")));
                    }
                    relative_put(a.price, a.strike, k, spot, alpha)
                }),
            )
        }
    };

    let records = strikes
        .iter()
        .map(|&k| {
            let market_price = chain.quote_at(side, k).map(|q| q.price);
            let implied_vol_market = market_price.and_then(|p| implied_vol(p, spot, k, t, side).ok());
            let mut record = CurveRecord {
                strike: k,
                model_price: None,
                implied_vol_model: None,
                market_price,
                implied_vol_market,
                ratio: None,
                issue: None,
            };
            match pricer(k) {
                Ok(price) => {
                    record.model_price = Some(price);
                    record.ratio = market_price.filter(|&m| m > 0.0).map(|m| price / m);
                    match implied_vol(price, spot, k, t, side) {
                        Ok(v) => record.implied_vol_model = Some(v),
                        Err(e) => record.issue = Some(format!("implied vol: {e}")),
                    }
                }
                Err(TailError::Domain(msg)) => record.issue = Some(format!("inside Karamata point: {msg}")),
                Err(e) => record.issue = Some(e.to_string()),
            }
            record
        })
        .collect();

    Ok(GeneratedCurve { spot, expiry_years: t, side, approach, alpha, anchor: *anchor, karamata, records, warnings })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub max_abs_residual: f64,
}

/// Ordinary least squares `y ≈ intercept + slope · x`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() {
        return Err(TailError::parameter("abscissa and ordinate lengths differ"));
    }
    if xs.len() < 2 {
        return Err(TailError::InsufficientPoints { needed: 2, got: xs.len() });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(TailError::parameter("abscissae are all equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals = xs.iter().zip(ys).map(|(x, y)| y - intercept - slope * x);
    let (ss_res, max_abs_residual) = residuals.fold((0.0, 0.0f64), |(s, m), r| (s + r * r, m.max(r.abs())));
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(LineFit { slope, intercept, r_squared, max_abs_residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogLogRow {
    pub strike: f64,
    pub x: f64,
    pub ln_model: f64,
    pub ln_market: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogLogTable {
    /// Name of the abscissa: `ln_k`, `ln_k_minus_s0` or `ln_s0_minus_k`.
    pub x_label: &'static str,
    pub rows: Vec<LogLogRow>,
}

impl LogLogTable {
    pub fn model_fit(&self) -> Result<LineFit> {
        let xs: Vec<f64> = self.rows.iter().map(|r| r.x).collect();
        let ys: Vec<f64> = self.rows.iter().map(|r| r.ln_model).collect();
        fit_line(&xs, &ys)
    }
}

/// Log-log coordinates of a curve: `ln K` for price-tail calls,
/// `ln(K - S0)` for return-tail calls and `ln(S0 - K)` for puts, against
/// `ln price`. Call curves are exactly affine with slope `1 - α`.
pub fn loglog_export(curve: &GeneratedCurve) -> Result<LogLogTable> {
    let s0 = curve.spot;
    let (x_label, abscissa): (&'static str, fn(f64, f64) -> f64) = match (curve.side, curve.approach) {
        (OptionSide::Call, TailApproach::PriceTail) => ("ln_k", |k, _| k.ln()),
        (OptionSide::Call, TailApproach::ReturnTail) => ("ln_k_minus_s0", |k, s0| (k - s0).ln()),
        (OptionSide::Put, _) => ("ln_s0_minus_k", |k, s0| (s0 - k).ln()),
    };
    let rows: Vec<LogLogRow> = curve
        .records
        .iter()
        .filter_map(|r| {
            let price = r.model_price.filter(|&p| p > 0.0)?;
            let x = abscissa(r.strike, s0);
            x.is_finite().then(|| LogLogRow {
                strike: r.strike,
                x,
                ln_model: price.ln(),
                ln_market: r.market_price.filter(|&m| m > 0.0).map(f64::ln),
            })
        })
        .collect();
    if rows.is_empty() {
        return Err(TailError::EmptyCurve("no priced strikes beyond spot".into()));
    }
    Ok(LogLogTable { x_label, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaFit {
    pub alpha: TailIndex,
    pub r_squared: f64,
    pub points: usize,
}

pub const MIN_FIT_POINTS_BEYOND_ANCHOR: usize = 3;
const PUT_FIT_ALPHA_RANGE: (f64, f64) = (1.0 + 1e-6, 50.0);

/// Tail index matching the market quotes at and beyond the anchor.
///
/// Calls: least-squares slope of `ln(price)` on `ln(K - S0)`, returned as
/// `α = 1 - slope`. Puts: `ln(price)` is not affine in `ln(S0 - K)` under
/// the put model, so `α` minimizes the squared log errors of the put ratio
/// curve through the anchor instead.
pub fn fit_alpha_to_market(chain: &Chain, side: OptionSide, anchor: &OptionQuote) -> Result<AlphaFit> {
    let s0 = chain.spot;
    let beyond: Vec<&OptionQuote> = chain
        .side(side)
        .filter(|q| q.price > 0.0)
        .filter(|q| match side {
            OptionSide::Call => q.strike > anchor.strike && q.strike > s0,
            OptionSide::Put => q.strike < anchor.strike && q.strike < s0,
        })
        .collect();
    if beyond.len() < MIN_FIT_POINTS_BEYOND_ANCHOR {
        return Err(TailError::InsufficientPoints { needed: MIN_FIT_POINTS_BEYOND_ANCHOR, got: beyond.len() });
    }
    let mut points: Vec<(f64, f64)> = beyond.iter().map(|q| (q.strike, q.price)).collect();
    points.push((anchor.strike, anchor.price));

    match side {
        OptionSide::Call => {
            if !(anchor.strike > s0 && anchor.price > 0.0) {
                return Err(TailError::domain("call anchor must be a priced strike above spot"));
            }
            let xs: Vec<f64> = points.iter().map(|(k, _)| (k - s0).ln()).collect();
            let ys: Vec<f64> = points.iter().map(|(_, p)| p.ln()).collect();
            let fit = fit_line(&xs, &ys)?;
            Ok(AlphaFit { alpha: TailIndex::new(1.0 - fit.slope)?, r_squared: fit.r_squared, points: points.len() })
        }
        OptionSide::Put => {
            if !(anchor.strike < s0 && anchor.price > 0.0) {
                return Err(TailError::domain("put anchor must be a priced strike below spot"));
            }
            let ys: Vec<f64> = points.iter().map(|(_, p)| p.ln()).collect();
            let sse = |a: f64| -> f64 {
                let alpha = TailIndex::new(a).expect("search range keeps α above one");
                points
                    .iter()
                    .map(|&(k, p)| match relative_put(anchor.price, anchor.strike, k, s0, alpha) {
                        Ok(m) if m > 0.0 => (m.ln() - p.ln()).powi(2),
                        _ => f64::INFINITY,
                    })
                    .sum()
            };
            let a = minimize_scalar(sse, PUT_FIT_ALPHA_RANGE.0, PUT_FIT_ALPHA_RANGE.1);
            let my = ys.iter().sum::<f64>() / ys.len() as f64;
            let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
            let r_squared = if ss_tot > 0.0 { 1.0 - sse(a) / ss_tot } else { 1.0 };
            Ok(AlphaFit { alpha: TailIndex::new(a)?, r_squared, points: points.len() })
        }
    }
}

/// Grid scan on a log scale followed by golden-section refinement.
fn minimize_scalar<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> f64 {
    const GRID: usize = 400;
    let (ln_lo, ln_hi) = ((lo - 1.0).ln(), (hi - 1.0).ln());
    let at = |i: usize| 1.0 + (ln_lo + (ln_hi - ln_lo) * i as f64 / GRID as f64).exp();
    let best = (0..=GRID).min_by(|&i, &j| f(at(i)).total_cmp(&f(at(j)))).unwrap_or(0);
    let (mut a, mut b) = (at(best.saturating_sub(1)), at((best + 1).min(GRID)));
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-14 * (a.abs() + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
