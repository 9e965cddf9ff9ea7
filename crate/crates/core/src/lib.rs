//! Per-hour structural vector autoregressions for hourly electricity markets.
//!
//! The crate fits one four-variable SVAR per delivery hour (RES generation,
//! load, day-ahead price, intraday price), simulates next-day joint
//! distributions by resampling the recovered structural shocks, and
//! backtests day-ahead/intraday split strategies for a small renewable
//! producer.
//!
//! Module map:
//!
//! - [`market_data`]: CSV ingestion, the dense day × 24 panel, and the
//!   decision-time information set.
//! - [`econometrics`]: least squares, Cholesky identification, ADF test.
//! - [`svar`]: per-hour model fitting, point forecasts, shock bootstrap.
//! - [`strategies`]: revenue distributions over the split share `g` and the
//!   five trading rules.
//! - [`evaluation`]: realized revenue, accuracy and risk aggregates,
//!   Diebold–Mariano tests.
//! - [`backtest`]: the rolling-window driver and report artifacts.
//! - [`synthgen`]: synthetic panels from a known ground-truth SVAR.

pub mod backtest;
pub mod econometrics;
pub mod evaluation;
pub mod market_data;
pub mod seed;
pub mod strategies;
pub mod svar;
pub mod synthgen;

pub use backtest::{run_backtest, BacktestConfig, BacktestReport};
pub use market_data::{HourlyPanel, InformationSet};
pub use strategies::Strategy;
pub use svar::{HourModel, VarSpec};
