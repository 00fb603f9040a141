use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tailprice::arbitrage::CheckTolerance;
use tailprice::black_scholes::{ImpliedVolConfig, OptionSide};
use tailprice::surface::{AnchorSpec, ChainFormat, TailApproach, DEFAULT_ANCHOR_TOLERANCE};

#[derive(Debug, Parser)]
#[command(
    name = "tailprice",
    version,
    about = "Relative pricing of tail options under Pareto tails",
    after_help = "Flags may also be supplied through --config FILE.json, an object whose keys are \
                  flag names (\"alpha\", \"anchor-moneyness\", ...). Flags given on the command line win.\n\
                  Exit status: 0 on success, 2 on any usage, input or validation error."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Absolute model price at one or more strikes.
    Price(PriceArgs),
    /// Karamata constant implied by one market quote.
    Calibrate(CalibrateArgs),
    /// Extend an anchor quote across a chain (report CSV or JSON).
    Curve(CurveArgs),
    /// Same as `curve` on the put side.
    PutCurve(CurveArgs),
    /// Black-Scholes implied volatility at zero rates.
    Ivol(IvolArgs),
    /// Density, butterfly and junction-slope checks on a chain.
    CheckArb(CheckArbArgs),
    /// Smallest tail index compatible with the junction slope condition.
    AlphaBound(AlphaBoundArgs),
    /// Tail index matching the market quotes beyond the anchor.
    FitAlpha(FitAlphaArgs),
    /// Local Zipf-plot slope of a Pareto underlying.
    Zipf(ZipfArgs),
    /// Curve, log-log fit and market-fitted tail index in one document.
    Report(CurveArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Approach {
    /// Pareto tail on the price itself.
    Price,
    /// Pareto tail on the simple return above spot.
    Return,
    /// Truncated Pareto on the negative return (puts).
    Put,
}

impl Approach {
    pub fn tail(self) -> TailApproach {
        match self {
            Approach::Price => TailApproach::PriceTail,
            Approach::Return | Approach::Put => TailApproach::ReturnTail,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Side {
    Call,
    Put,
}

impl From<Side> for OptionSide {
    fn from(s: Side) -> Self {
        match s {
            Side::Call => OptionSide::Call,
            Side::Put => OptionSide::Put,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    Csv,
    Json,
}

impl From<InputFormat> for ChainFormat {
    fn from(f: InputFormat) -> Self {
        match f {
            InputFormat::Csv => ChainFormat::Csv,
            InputFormat::Json => ChainFormat::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Transform {
    Identity,
    SimpleReturn,
    LogReturn,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write to this file instead of standard output.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct ChainArgs {
    /// Option chain, CSV (`strike,side,price`) or JSON.
    #[arg(long, value_name = "PATH")]
    pub chain: PathBuf,
    /// Chain format; inferred from the file extension when omitted.
    #[arg(long, value_enum)]
    pub input_format: Option<InputFormat>,
    /// JSON sidecar holding `spot` and `expiry_years` for a CSV chain.
    #[arg(long, value_name = "PATH")]
    pub meta: Option<PathBuf>,
    /// Spot level; overrides the sidecar.
    #[arg(long)]
    pub spot: Option<f64>,
    /// Time to expiry in years; overrides the sidecar.
    #[arg(long)]
    pub expiry: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AnchorArgs {
    /// Anchor at this percent of spot (e.g. 90).
    #[arg(long, conflicts_with = "anchor_strike")]
    pub anchor_moneyness: Option<f64>,
    /// Anchor at this strike.
    #[arg(long)]
    pub anchor_strike: Option<f64>,
    /// Largest anchor distance from the requested strike, as a fraction of spot.
    #[arg(long, default_value_t = DEFAULT_ANCHOR_TOLERANCE)]
    pub anchor_tolerance: f64,
}

impl AnchorArgs {
    pub fn spec(&self) -> Option<AnchorSpec> {
        match (self.anchor_strike, self.anchor_moneyness) {
            (Some(k), _) => Some(AnchorSpec::Strike(k)),
            (None, Some(m)) => Some(AnchorSpec::Moneyness(m)),
            (None, None) => None,
        }
    }
}

#[derive(Debug, Args)]
pub struct CheckTolArgs {
    /// Relative slack on check margins (scaled by the middle price or slope).
    #[arg(long, default_value_t = CheckTolerance::default().rel)]
    pub check_rel: f64,
    /// Absolute floor of the check slack.
    #[arg(long, default_value_t = CheckTolerance::default().floor)]
    pub check_floor: f64,
}

impl CheckTolArgs {
    pub fn tolerance(&self) -> CheckTolerance {
        CheckTolerance { rel: self.check_rel, floor: self.check_floor }
    }
}

#[derive(Debug, Args)]
pub struct PriceArgs {
    #[arg(long, value_enum)]
    pub approach: Approach,
    #[arg(long)]
    pub alpha: f64,
    /// Karamata constant: a price for `price`, a return for `return` and `put`.
    #[arg(long)]
    pub l: f64,
    #[arg(long)]
    pub spot: Option<f64>,
    /// Strike; repeat or separate with commas for several.
    #[arg(long, required = true, value_delimiter = ',')]
    pub strike: Vec<f64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long, value_enum)]
    pub approach: Approach,
    #[arg(long)]
    pub alpha: f64,
    /// Market price at the anchor strike.
    #[arg(long)]
    pub price: f64,
    #[arg(long)]
    pub strike: f64,
    #[arg(long)]
    pub spot: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub chain: ChainArgs,
    #[command(flatten)]
    pub anchor: AnchorArgs,
    #[arg(long)]
    pub alpha: f64,
    /// Call-side parameterization; puts always use returns.
    #[arg(long, value_enum, default_value = "return")]
    pub approach: Approach,
    /// Curve side (`put-curve` forces put).
    #[arg(long, value_enum, default_value = "call")]
    pub side: Side,
    /// Emit the log-log table instead of the report.
    #[arg(long)]
    pub loglog: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct IvolArgs {
    #[arg(long)]
    pub price: f64,
    #[arg(long)]
    pub spot: f64,
    #[arg(long)]
    pub strike: f64,
    #[arg(long)]
    pub expiry: f64,
    #[arg(long, value_enum, default_value = "call")]
    pub side: Side,
    /// Absolute price accuracy required of the inversion.
    #[arg(long, default_value_t = ImpliedVolConfig::default().price_tol)]
    pub ivol_tol: f64,
    #[arg(long, default_value_t = ImpliedVolConfig::default().sigma_min)]
    pub sigma_min: f64,
    #[arg(long, default_value_t = ImpliedVolConfig::default().sigma_max)]
    pub sigma_max: f64,
    #[arg(long, default_value_t = ImpliedVolConfig::default().max_iterations)]
    pub max_iterations: usize,
}

#[derive(Debug, Args)]
pub struct CheckArbArgs {
    #[command(flatten)]
    pub chain: ChainArgs,
    #[command(flatten)]
    pub anchor: AnchorArgs,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value = "return")]
    pub approach: Approach,
    #[arg(long, value_enum, default_value = "call")]
    pub side: Side,
    /// Market smile slope dσ/dK at the anchor; adds the junction check against the market leg.
    #[arg(long, allow_hyphen_values = true)]
    pub skew_slope: Option<f64>,
    #[command(flatten)]
    pub tol: CheckTolArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct AlphaBoundArgs {
    #[arg(long)]
    pub strike: f64,
    #[arg(long)]
    pub spot: f64,
    /// Karamata constant in return units.
    #[arg(long)]
    pub l: f64,
    #[arg(long)]
    pub expiry: f64,
    #[arg(long)]
    pub sigma: f64,
    /// Smile slope dσ/dK at the strike.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub skew_slope: f64,
}

#[derive(Debug, Args)]
pub struct FitAlphaArgs {
    #[command(flatten)]
    pub chain: ChainArgs,
    #[command(flatten)]
    pub anchor: AnchorArgs,
    #[arg(long, value_enum, default_value = "call")]
    pub side: Side,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ZipfArgs {
    #[arg(long)]
    pub alpha: f64,
    /// Karamata constant of the price-tail model.
    #[arg(long)]
    pub l: f64,
    #[arg(long, value_enum, default_value = "identity")]
    pub transform: Transform,
    /// Required by the return transforms.
    #[arg(long)]
    pub spot: Option<f64>,
    /// Grid points in the transformed variable; repeat or separate with commas.
    #[arg(long, required = true, value_delimiter = ',')]
    pub x: Vec<f64>,
    #[command(flatten)]
    pub out: OutputArgs,
}
