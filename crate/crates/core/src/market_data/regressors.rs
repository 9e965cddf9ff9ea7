use super::info::{InformationSet, LagVector};
use super::panel::{HourlyPanel, Series, HOURS};
use super::MarketDataError;

/// Exogenous regressors per row: 7 weekday dummies, two TSO forecasts and
/// three transforms of the previous day's DA prices.
pub const N_EXOG: usize = 12;

/// Deepest lag a row may reference, in days.
pub const MAX_LAG: usize = 7;

pub const EXOG_NAMES: [&str; N_EXOG] = [
    "mon",
    "tue",
    "wed",
    "thu",
    "fri",
    "sat",
    "sun",
    "res_forecast",
    "load_forecast",
    "da_min_prev",
    "da_max_prev",
    "da_prev_24",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RegressorRow {
    pub x: [f64; N_EXOG],
    /// (lag in days, masked lagged vector), in the order the lags were given.
    pub y_lags: Vec<(usize, LagVector)>,
    pub id_lag1_excluded: bool,
}

impl RegressorRow {
    pub fn lag(&self, p: usize) -> Option<&LagVector> {
        self.y_lags.iter().find(|(q, _)| *q == p).map(|(_, v)| v)
    }
}

/// Regressors for day `day`, hour `hour`.
///
/// Reads only the day-`day` TSO forecasts and calendar, and values of days
/// `day − 7 ..= day − 1`.
pub fn build_regressor_row(
    panel: &HourlyPanel,
    day: usize,
    hour: u8,
    info: &InformationSet,
    lags: &[usize],
) -> Result<RegressorRow, MarketDataError> {
    if !(1..=HOURS as u8).contains(&hour) {
        return Err(MarketDataError::InvalidHour(hour));
    }
    if day >= panel.n_days() {
        return Err(MarketDataError::DayOutOfRange { day, days: panel.n_days() });
    }
    if day < MAX_LAG {
        return Err(MarketDataError::InsufficientHistory { day, needed: MAX_LAG });
    }

    let mut x = [0.0; N_EXOG];
    x[panel.day_of_week(day) as usize - 1] = 1.0;
    x[7] = panel.value(Series::ResForecast, day, hour);
    x[8] = panel.value(Series::LoadForecast, day, hour);
    let prev_da = panel.day_slice(Series::Da, day - 1);
    x[9] = prev_da.iter().cloned().fold(f64::INFINITY, f64::min);
    x[10] = prev_da.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    x[11] = prev_da[HOURS - 1];

    let mut y_lags = Vec::with_capacity(lags.len());
    for &p in lags {
        if p == 0 || p > MAX_LAG {
            return Err(MarketDataError::InsufficientHistory { day, needed: p });
        }
        let d = day - p;
        let raw = LagVector {
            values: Series::ENDOGENOUS.map(|s| panel.value(s, d, hour)),
            res_forecast: panel.value(Series::ResForecast, d, hour),
            load_forecast: panel.value(Series::LoadForecast, d, hour),
            id_available: true,
        };
        let v = if p == 1 { info.mask_lag1(hour, raw) } else { raw };
        y_lags.push((p, v));
    }

    Ok(RegressorRow { x, y_lags, id_lag1_excluded: info.id_lag1_excluded(hour) })
}
