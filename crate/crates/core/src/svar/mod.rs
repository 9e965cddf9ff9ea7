//! Per-hour structural VAR: estimation, point forecasts and the structural
//! shock bootstrap.
//!
//! Endogenous ordering is (RES, load, DA, ID). With a lower-triangular `B`
//! this ordering is the identification: the first (weather) shock moves all
//! four variables, the last (intraday) shock moves only the intraday price.

mod bootstrap;
mod export;
mod model;

pub use bootstrap::generation_mwh;
pub use bootstrap::{simulate_scenarios, ScenarioSet, MIN_DRAWS};
pub use export::{FitWindowRecord, HourModelRecord};
pub use model::{fit_hour_model, point_forecast, ExogMatrix, HourDesign, HourModel, MIN_FIT_DAYS};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::econometrics::EconError;
use crate::market_data::{MarketDataError, MAX_LAG};

pub const N_ENDOG: usize = 4;
pub const ENDOG_NAMES: [&str; N_ENDOG] = ["RES", "L", "DA", "ID"];

#[derive(Debug, Error)]
pub enum SvarError {
    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("hour {0} outside 1..=24")]
    InvalidHour(u8),

    #[error("estimation window has {days} usable days, need at least {min}")]
    WindowTooShort { days: usize, min: usize },

    #[error("information set disagrees with the model's lag-1 mask for hour {hour}")]
    InformationSetMismatch { hour: u8 },

    #[error("{n} bootstrap draws requested, need at least {min}")]
    TooFewDraws { n: usize, min: usize },

    #[error("model has no shock history to resample")]
    EmptyShockHistory,

    #[error("invalid model record: {0}")]
    InvalidRecord(String),

    #[error(transparent)]
    Data(#[from] MarketDataError),

    #[error(transparent)]
    Econ(#[from] EconError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Lag set and utility size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawVarSpec", into = "RawVarSpec")]
pub struct VarSpec {
    lags: Vec<usize>,
    rho: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVarSpec {
    #[serde(default = "default_lags")]
    lags: Vec<usize>,
    #[serde(default = "default_rho")]
    rho: f64,
}

fn default_lags() -> Vec<usize> {
    vec![1, 2, 7]
}

fn default_rho() -> f64 {
    0.005
}

impl TryFrom<RawVarSpec> for VarSpec {
    type Error = SvarError;

    fn try_from(raw: RawVarSpec) -> Result<Self, Self::Error> {
        Self::new(raw.lags, raw.rho)
    }
}

impl From<VarSpec> for RawVarSpec {
    fn from(s: VarSpec) -> Self {
        Self { lags: s.lags, rho: s.rho }
    }
}

impl Default for VarSpec {
    fn default() -> Self {
        Self { lags: default_lags(), rho: default_rho() }
    }
}

impl VarSpec {
    /// Lags must lie in 1..=7 with 7 present; `0 < rho <= 0.01`.
    pub fn new(mut lags: Vec<usize>, rho: f64) -> Result<Self, SvarError> {
        lags.sort_unstable();
        lags.dedup();
        if lags.is_empty() || lags[0] == 0 || *lags.last().unwrap() != MAX_LAG {
            return Err(SvarError::InvalidSpec(format!("lags {lags:?} must be a subset of 1..=7 containing 7")));
        }
        if !(rho > 0.0 && rho <= 0.01) {
            return Err(SvarError::InvalidSpec(format!("rho {rho} outside (0, 0.01]")));
        }
        Ok(Self { lags, rho })
    }

    pub fn lags(&self) -> &[usize] {
        &self.lags
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}
