//! Hourly market panel: ingestion, validation, descriptive statistics and the
//! decision-time information set used to build regressor rows.

mod info;
mod io;
mod panel;
mod regressors;
mod stats;

pub use info::{InformationSet, LagVector};
pub use io::{load_panel, read_panel, write_panel, ColumnMapping, DstPolicy, LoadedPanel, MAX_GAP_HOURS};
pub use panel::{HourlyObservation, HourlyPanel, Series, HOURS};
pub use regressors::{build_regressor_row, RegressorRow, EXOG_NAMES, MAX_LAG, N_EXOG};
pub use stats::{descriptive_stats, DescriptiveStats, VariableStats, MIN_STATS_DAYS};

use chrono::NaiveDate;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MarketDataError {
    #[error("missing column '{0}'")]
    MissingColumn(String),

    #[error("line {line}: cannot parse timestamp '{value}'")]
    UnparseableTimestamp { line: u64, value: String },

    #[error("line {line}: cannot parse value '{value}' in column '{column}'")]
    UnparseableValue { line: u64, column: String, value: String },

    #[error("duplicate timestamp {date} hour {hour}")]
    DuplicateTimestamp { date: NaiveDate, hour: u8 },

    #[error("gap of {len} consecutive missing hours in '{column}' starting {date} hour {hour}")]
    GapTooLarge { column: String, date: NaiveDate, hour: u8, len: usize },

    #[error("invalid value {value} for '{column}' at {date} hour {hour}")]
    InvalidValue { column: String, date: NaiveDate, hour: u8, value: f64 },

    #[error("panel has {days} days, need at least {min}")]
    PanelTooShort { days: usize, min: usize },

    #[error("day {day} needs {needed} preceding days of history")]
    InsufficientHistory { day: usize, needed: usize },

    #[error("hour {0} outside 1..=24")]
    InvalidHour(u8),

    #[error("day index {day} outside panel of {days} days")]
    DayOutOfRange { day: usize, days: usize },

    #[error("invalid information set: {0}")]
    InvalidInformationSet(String),

    #[error("malformed panel: {0}")]
    Malformed(String),

    #[error("empty panel")]
    Empty,

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
