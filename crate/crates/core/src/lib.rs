//! Relative pricing of tail options when the underlying (or its simple
//! return) follows a strong Pareto law beyond a Karamata constant.
//!
//! A single market-priced anchor option and a tail index are enough to
//! price every further out-of-the-money strike. The crate covers:
//!
//! - [`tail_model`]: closed-form Pareto call and put prices, calibration of
//!   the Karamata constant, relative-pricing ratios and a Zipf diagnostic.
//! - [`black_scholes`]: zero-rate Black-Scholes valuation, implied
//!   volatility and strike derivatives including the skew term.
//! - [`arbitrage`]: Breeden-Litzenberger density, butterfly and call-spread
//!   slope checks, and the closed-form lower bound on the tail index.
//! - [`surface`]: chain ingestion, anchor selection, curve generation,
//!   log-log export and tail-index fitting against market quotes.

// Negated comparisons reject NaN inputs; reference constants keep their published digits.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod arbitrage;
pub mod black_scholes;
pub mod error;
pub mod quadrature;
pub mod special;
pub mod surface;
pub mod tail_model;

pub use black_scholes::{BsInputs, OptionSide};
pub use error::{Result, TailError};
pub use tail_model::{PriceTailModel, PutReturnModel, ReturnTailModel, TailIndex};
