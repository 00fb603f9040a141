use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde_json::{json, Map, Value};
use tailprice::arbitrage::{
    alpha_lower_bound, bl_density, bl_density_return, convexity_check, slope_condition, slope_condition_price_tail,
    CheckOutcome, CheckTolerance, SlopeCheck, VolSkew,
};
use tailprice::black_scholes::{
    implied_vol, implied_vol_slope, implied_vol_with, BsInputs, ImpliedVolConfig, OptionSide,
};
use tailprice::surface::{
    fit_alpha_to_market, generate_curve, load_chain, load_meta_json, loglog_export, select_anchor, AlphaFit, Chain,
    ChainFormat, ChainMeta, GeneratedCurve, OptionQuote, TailApproach,
};
use tailprice::tail_model::{
    zipf_local_slope, PriceTailModel, PutReturnModel, ReturnTailModel, TailIndex, ZipfTransform,
};
use tailprice::TailError;

use crate::args::*;
use crate::error::CliError;
use crate::output::{csv_table, emit, json_num, json_opt, json_text, num, opt};

pub const REPORT_HEADER: [&str; 6] =
    ["strike", "model_price", "market_price", "ratio", "implied_vol_model", "implied_vol_market"];

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Price(a) => price(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Curve(a) => curve(a, false),
        Command::PutCurve(a) => curve(CurveArgs { side: Side::Put, ..a }, false),
        Command::Report(a) => curve(a, true),
        Command::Ivol(a) => ivol(a),
        Command::CheckArb(a) => check_arb(a),
        Command::AlphaBound(a) => alpha_bound(a),
        Command::FitAlpha(a) => fit_alpha(a),
        Command::Zipf(a) => zipf(a),
    }
}

fn require_spot(spot: Option<f64>, what: &str) -> Result<f64, CliError> {
    spot.ok_or_else(|| CliError::Usage(format!("--spot is required for {what}")))
}

fn print_line(v: f64) -> Result<(), CliError> {
    emit(&format!("{}\n", num(v)), None)
}

fn price(a: PriceArgs) -> Result<(), CliError> {
    let alpha = TailIndex::new(a.alpha)?;
    let pricer: Box<dyn Fn(f64) -> tailprice::Result<f64>> = match a.approach {
        Approach::Price => {
            let m = PriceTailModel::new(a.l, alpha)?;
            Box::new(move |k| m.call_price(k))
        }
        Approach::Return => {
            let m = ReturnTailModel::new(a.l, alpha, require_spot(a.spot, "the return approach")?)?;
            Box::new(move |k| m.call_price(k))
        }
        Approach::Put => {
            let m = PutReturnModel::new(a.l, alpha, require_spot(a.spot, "puts")?)?;
            Box::new(move |k| m.put_price(k))
        }
    };
    let mut strikes = a.strike.clone();
    strikes.sort_by(f64::total_cmp);
    let prices = strikes.iter().map(|&k| pricer(k)).collect::<tailprice::Result<Vec<f64>>>()?;

    let text = match a.out.format {
        OutputFormat::Csv if prices.len() == 1 => format!("{}\n", num(prices[0])),
        OutputFormat::Csv => {
            let rows: Vec<Vec<String>> = strikes.iter().zip(&prices).map(|(&k, &p)| vec![num(k), num(p)]).collect();
            csv_table(&["strike", "price"], &rows)
        }
        OutputFormat::Json => json_text(&Value::Array(
            strikes.iter().zip(&prices).map(|(&k, &p)| json!({"strike": json_num(k), "price": json_num(p)})).collect(),
        )),
    };
    emit(&text, a.out.output.as_deref())
}

fn calibrate(a: CalibrateArgs) -> Result<(), CliError> {
    let alpha = TailIndex::new(a.alpha)?;
    let l = match a.approach {
        Approach::Price => PriceTailModel::calibrate(a.price, a.strike, alpha)?.l(),
        Approach::Return => {
            ReturnTailModel::calibrate(a.price, a.strike, require_spot(a.spot, "the return approach")?, alpha)?.l()
        }
        Approach::Put => PutReturnModel::calibrate(a.price, a.strike, require_spot(a.spot, "puts")?, alpha)?.l(),
    };
    print_line(l)
}

fn ivol(a: IvolArgs) -> Result<(), CliError> {
    let cfg = ImpliedVolConfig {
        sigma_min: a.sigma_min,
        sigma_max: a.sigma_max,
        price_tol: a.ivol_tol,
        max_iterations: a.max_iterations,
    };
    print_line(implied_vol_with(a.price, a.spot, a.strike, a.expiry, a.side.into(), &cfg)?)
}

fn alpha_bound(a: AlphaBoundArgs) -> Result<(), CliError> {
    print_line(alpha_lower_bound(a.strike, a.spot, a.l, a.expiry, a.sigma, a.skew_slope)?)
}

fn zipf(a: ZipfArgs) -> Result<(), CliError> {
    let model = PriceTailModel::new(a.l, TailIndex::new(a.alpha)?)?;
    let transform = match a.transform {
        Transform::Identity => ZipfTransform::Identity,
        Transform::SimpleReturn => ZipfTransform::SimpleReturn { spot: require_spot(a.spot, "return transforms")? },
        Transform::LogReturn => ZipfTransform::LogReturn { spot: require_spot(a.spot, "return transforms")? },
    };
    let mut grid = a.x.clone();
    grid.sort_by(f64::total_cmp);
    let slopes = zipf_local_slope(&model, transform, &grid)?;
    let text = match a.out.format {
        OutputFormat::Csv => {
            let rows: Vec<Vec<String>> = slopes.iter().map(|&(x, s)| vec![num(x), num(s)]).collect();
            csv_table(&["x", "slope"], &rows)
        }
        OutputFormat::Json => json_text(&Value::Array(
            slopes.iter().map(|&(x, s)| json!({"x": json_num(x), "slope": json_num(s)})).collect(),
        )),
    };
    emit(&text, a.out.output.as_deref())
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Io { path: path.display().to_string(), message: e.to_string() })
}

fn read_chain(c: &ChainArgs) -> Result<Chain, CliError> {
    let format: ChainFormat = match c.input_format {
        Some(f) => f.into(),
        None if c.chain.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) => ChainFormat::Json,
        None => ChainFormat::Csv,
    };
    let sidecar = c.meta.as_deref().map(|p| load_meta_json(open(p)?).map_err(CliError::from)).transpose()?;
    let spot = c.spot.or(sidecar.map(|m| m.spot));
    let expiry = c.expiry.or(sidecar.map(|m| m.expiry_years));
    let meta = match (spot, expiry) {
        (Some(spot), Some(expiry_years)) => Some(ChainMeta { spot, expiry_years }),
        _ => None,
    };
    let mut chain = load_chain(open(&c.chain)?, format, meta)?;
    if format == ChainFormat::Json && (c.spot.is_some() || c.expiry.is_some() || sidecar.is_some()) {
        let quotes = chain.quotes().to_vec();
        let spot = spot.unwrap_or(chain.spot);
        let expiry = expiry.unwrap_or(chain.expiry_years);
        chain = Chain::new(spot, expiry, quotes)?;
    }
    Ok(chain)
}

/// Explicit anchor, or else the first priced out-of-the-money quote.
fn resolve_anchor(chain: &Chain, side: OptionSide, anchor: &AnchorArgs) -> Result<OptionQuote, CliError> {
    if let Some(spec) = anchor.spec() {
        let sel = select_anchor(chain, side, spec, anchor.anchor_tolerance)?;
        if let Some(note) = &sel.note {
            eprintln!("note: {note}");
        }
        return Ok(sel.quote);
    }
    let otm = |q: &&OptionQuote| {
        q.price > 0.0
            && match side {
                OptionSide::Call => q.strike > chain.spot,
                OptionSide::Put => q.strike < chain.spot,
            }
    };
    let pick = match side {
        OptionSide::Call => chain.side(side).find(otm),
        OptionSide::Put => chain.side(side).filter(otm).last(),
    };
    pick.copied()
        .ok_or_else(|| TailError::NoCandidate(format!("no priced out-of-the-money {side} quote to anchor on")).into())
}

fn build_curve(
    chain_args: &ChainArgs,
    anchor: &AnchorArgs,
    side: Side,
    approach: Approach,
    alpha: f64,
) -> Result<(Chain, GeneratedCurve), CliError> {
    let chain = read_chain(chain_args)?;
    let side = OptionSide::from(side);
    if side == OptionSide::Call && approach == Approach::Put {
        return Err(CliError::Usage("--approach put applies to put curves only".into()));
    }
    let anchor = resolve_anchor(&chain, side, anchor)?;
    let curve = generate_curve(&chain, side, &anchor, TailIndex::new(alpha)?, approach.tail())?;
    for w in &curve.warnings {
        eprintln!("warning: {w}");
    }
    for r in &curve.records {
        if let Some(issue) = &r.issue {
            eprintln!("warning: strike {}: {issue}", num(r.strike));
        }
    }
    Ok((chain, curve))
}

fn report_rows(curve: &GeneratedCurve) -> Vec<Vec<String>> {
    curve
        .records
        .iter()
        .map(|r| {
            vec![
                num(r.strike),
                opt(r.model_price),
                opt(r.market_price),
                opt(r.ratio),
                opt(r.implied_vol_model),
                opt(r.implied_vol_market),
            ]
        })
        .collect()
}

fn records_json(curve: &GeneratedCurve) -> Value {
    Value::Array(
        curve
            .records
            .iter()
            .map(|r| {
                json!({
                    "strike": json_num(r.strike),
                    "model_price": json_opt(r.model_price),
                    "market_price": json_opt(r.market_price),
                    "ratio": json_opt(r.ratio),
                    "implied_vol_model": json_opt(r.implied_vol_model),
                    "implied_vol_market": json_opt(r.implied_vol_market),
                    "issue": r.issue,
                })
            })
            .collect(),
    )
}

fn approach_name(a: TailApproach) -> &'static str {
    match a {
        TailApproach::PriceTail => "price_tail",
        TailApproach::ReturnTail => "return_tail",
    }
}

fn curve_header(curve: &GeneratedCurve) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("spot".into(), json_num(curve.spot));
    m.insert("expiry_years".into(), json_num(curve.expiry_years));
    m.insert("side".into(), json!(curve.side.to_string()));
    m.insert("approach".into(), json!(approach_name(curve.approach)));
    m.insert("alpha".into(), json_num(curve.alpha.value()));
    m.insert("karamata".into(), json_num(curve.karamata));
    m.insert("anchor".into(), json!({"strike": json_num(curve.anchor.strike), "price": json_num(curve.anchor.price)}));
    m.insert("warnings".into(), json!(curve.warnings));
    m
}

fn alpha_fit_json(fit: &AlphaFit) -> Value {
    json!({"alpha": json_num(fit.alpha.value()), "r_squared": json_num(fit.r_squared), "points": fit.points})
}

fn curve(a: CurveArgs, full_report: bool) -> Result<(), CliError> {
    let (chain, curve) = build_curve(&a.chain, &a.anchor, a.side, a.approach, a.alpha)?;

    if a.loglog {
        let table = loglog_export(&curve)?;
        let text = match a.out.format {
            OutputFormat::Csv => {
                let rows: Vec<Vec<String>> =
                    table.rows.iter().map(|r| vec![num(r.x), num(r.ln_model), opt(r.ln_market)]).collect();
                csv_table(&[table.x_label, "ln_model_price", "ln_market_price"], &rows)
            }
            OutputFormat::Json => {
                let fit = table.model_fit().ok();
                json_text(&json!({
                    "x_label": table.x_label,
                    "slope": json_opt(fit.map(|f| f.slope)),
                    "intercept": json_opt(fit.map(|f| f.intercept)),
                    "rows": table.rows.iter().map(|r| json!({
                        "strike": json_num(r.strike),
                        "x": json_num(r.x),
                        "ln_model_price": json_num(r.ln_model),
                        "ln_market_price": json_opt(r.ln_market),
                    })).collect::<Vec<_>>(),
                }))
            }
        };
        return emit(&text, a.out.output.as_deref());
    }

    let fitted = if full_report { Some(fit_alpha_to_market(&chain, curve.side, &curve.anchor)) } else { None };
    let loglog = if full_report { Some(loglog_export(&curve).and_then(|t| t.model_fit())) } else { None };

    let text = match a.out.format {
        OutputFormat::Csv => {
            if let Some(fit) = &fitted {
                match fit {
                    Ok(f) => eprintln!("market-fitted alpha {} (R^2 {})", num(f.alpha.value()), num(f.r_squared)),
                    Err(e) => eprintln!("warning: market-fitted alpha unavailable: [{}] {e}", e.code()),
                }
            }
            csv_table(&REPORT_HEADER, &report_rows(&curve))
        }
        OutputFormat::Json => {
            let mut doc = curve_header(&curve);
            if let Some(fit) = fitted {
                doc.insert(
                    "market_fit".into(),
                    match fit {
                        Ok(f) => alpha_fit_json(&f),
                        Err(e) => json!({"error": e.to_string(), "code": e.code()}),
                    },
                );
            }
            if let Some(line) = loglog {
                doc.insert(
                    "loglog_fit".into(),
                    match line {
                        Ok(f) => json!({
                            "slope": json_num(f.slope),
                            "intercept": json_num(f.intercept),
                            "r_squared": json_num(f.r_squared),
                        }),
                        Err(e) => json!({"error": e.to_string(), "code": e.code()}),
                    },
                );
            }
            doc.insert("records".into(), records_json(&curve));
            json_text(&Value::Object(doc))
        }
    };
    emit(&text, a.out.output.as_deref())
}

fn fit_alpha(a: FitAlphaArgs) -> Result<(), CliError> {
    let chain = read_chain(&a.chain)?;
    let side = OptionSide::from(a.side);
    let anchor = resolve_anchor(&chain, side, &a.anchor)?;
    let fit = fit_alpha_to_market(&chain, side, &anchor)?;
    let text = match a.out.format {
        OutputFormat::Csv => csv_table(
            &["alpha", "r_squared", "points", "anchor_strike"],
            &[vec![num(fit.alpha.value()), num(fit.r_squared), fit.points.to_string(), num(anchor.strike)]],
        ),
        OutputFormat::Json => {
            let mut v = alpha_fit_json(&fit);
            v["anchor_strike"] = json_num(anchor.strike);
            json_text(&v)
        }
    };
    emit(&text, a.out.output.as_deref())
}

struct CheckRow {
    strike: f64,
    check: &'static str,
    outcome: CheckOutcome,
    detail: String,
}

fn density_outcome(d: f64) -> CheckOutcome {
    CheckOutcome { pass: d >= 0.0, margin: d, tolerance: 0.0 }
}

fn slope_row(s: SlopeCheck, check: &'static str) -> CheckRow {
    CheckRow {
        strike: s.strike,
        check,
        outcome: s.outcome,
        detail: format!("left {} right {}", num(s.left_slope), num(s.right_slope)),
    }
}

/// Two-knot smile ending at `k` with the given level and slope.
fn local_skew(k: f64, sigma: f64, slope: f64) -> Result<VolSkew, CliError> {
    let h = 1e-3 * k;
    Ok(VolSkew::new(vec![(k - h, sigma - slope * h), (k, sigma)])?)
}

enum CallModel {
    Price(PriceTailModel),
    Return(ReturnTailModel),
}

impl CallModel {
    fn slope_check(&self, leg: &BsInputs, skew: &VolSkew, tol: CheckTolerance) -> tailprice::Result<SlopeCheck> {
        match self {
            CallModel::Price(m) => slope_condition_price_tail(leg, skew, m, tol),
            CallModel::Return(m) => slope_condition(leg, skew, m, tol),
        }
    }

    fn slope(&self, k: f64) -> tailprice::Result<f64> {
        match self {
            CallModel::Price(m) => m.call_slope(k),
            CallModel::Return(m) => m.call_slope(k),
        }
    }

    fn density(&self, k: f64) -> tailprice::Result<f64> {
        match self {
            CallModel::Price(m) => bl_density(m, k),
            CallModel::Return(m) => bl_density_return(m, k),
        }
    }
}

fn check_arb(a: CheckArbArgs) -> Result<(), CliError> {
    let (chain, curve) = build_curve(&a.chain, &a.anchor, a.side, a.approach, a.alpha)?;
    let tol = a.tol.tolerance();
    let (spot, t) = (chain.spot, chain.expiry_years);
    let side = curve.side;
    let anchor = curve.anchor;
    let mut rows = Vec::new();

    // Market quotes on the near side of the anchor, model prices beyond it.
    let mut combined: Vec<(f64, f64)> = chain
        .side(side)
        .filter(|q| match side {
            OptionSide::Call => q.strike < anchor.strike,
            OptionSide::Put => q.strike > anchor.strike,
        })
        .map(|q| (q.strike, q.price))
        .collect();
    combined.extend(curve.records.iter().filter_map(|r| r.model_price.map(|p| (r.strike, p))));
    combined.sort_by(|x, y| x.0.total_cmp(&y.0));
    for w in combined.windows(3) {
        let outcome = convexity_check(w[0], w[1], w[2], tol)?;
        rows.push(CheckRow {
            strike: w[1].0,
            check: "butterfly",
            outcome,
            detail: format!("strikes {} {} {}", num(w[0].0), num(w[1].0), num(w[2].0)),
        });
    }

    match side {
        OptionSide::Put => {
            let model = PutReturnModel::new(curve.karamata, curve.alpha, spot)?;
            for r in curve.records.iter().filter(|r| r.model_price.is_some()) {
                let d = model.density(r.strike)?;
                rows.push(CheckRow {
                    strike: r.strike,
                    check: "density",
                    outcome: density_outcome(d),
                    detail: String::new(),
                });
            }
            if a.skew_slope.is_some() {
                eprintln!("warning: --skew-slope applies to call junctions only; ignored");
            }
        }
        OptionSide::Call => {
            let model = match curve.approach {
                TailApproach::PriceTail => CallModel::Price(PriceTailModel::new(curve.karamata, curve.alpha)?),
                TailApproach::ReturnTail => CallModel::Return(ReturnTailModel::new(curve.karamata, curve.alpha, spot)?),
            };
            for r in &curve.records {
                let (Some(_), Some(sigma)) = (r.model_price, r.implied_vol_model) else { continue };
                match model.density(r.strike) {
                    Ok(d) => rows.push(CheckRow {
                        strike: r.strike,
                        check: "density",
                        outcome: density_outcome(d),
                        detail: String::new(),
                    }),
                    // The density is undefined exactly at the Karamata point.
                    Err(TailError::Domain(_)) => {}
                    Err(e) => return Err(e.into()),
                }
                let leg = BsInputs::new(spot, r.strike, sigma, t)?;
                let smile_slope = implied_vol_slope(&leg, model.slope(r.strike)?)?;
                let check = model.slope_check(&leg, &local_skew(r.strike, sigma, smile_slope)?, tol)?;
                rows.push(slope_row(check, "slope_model_smile"));
            }
            if let Some(slope) = a.skew_slope {
                let sigma = implied_vol(anchor.price, spot, anchor.strike, t, side)?;
                let leg = BsInputs::new(spot, anchor.strike, sigma, t)?;
                let check = model.slope_check(&leg, &local_skew(anchor.strike, sigma, slope)?, tol)?;
                rows.push(slope_row(check, "slope_market_skew"));
            }
        }
    }

    rows.sort_by(|x, y| x.strike.total_cmp(&y.strike).then(x.check.cmp(y.check)));
    let failures = rows.iter().filter(|r| !r.outcome.pass).count();
    eprintln!("check-arb: {} checks, {failures} failed{}", rows.len(), if failures == 0 { " (all pass)" } else { "" });

    let text = match a.out.format {
        OutputFormat::Csv => {
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        num(r.strike),
                        r.check.to_owned(),
                        if r.outcome.pass { "pass" } else { "fail" }.to_owned(),
                        num(r.outcome.margin),
                        num(r.outcome.tolerance),
                        r.detail.clone(),
                    ]
                })
                .collect();
            csv_table(&["strike", "check", "result", "margin", "tolerance", "detail"], &table)
        }
        OutputFormat::Json => json_text(&json!({
            "checks": rows.len(),
            "failures": failures,
            "anchor_strike": json_num(anchor.strike),
            "karamata": json_num(curve.karamata),
            "rows": rows.iter().map(|r| json!({
                "strike": json_num(r.strike),
                "check": r.check,
                "pass": r.outcome.pass,
                "margin": json_num(r.outcome.margin),
                "tolerance": json_num(r.outcome.tolerance),
                "detail": r.detail,
            })).collect::<Vec<_>>(),
        })),
    };
    emit(&text, a.out.output.as_deref())
}
