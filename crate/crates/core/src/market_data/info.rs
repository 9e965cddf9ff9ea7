use serde::{Deserialize, Serialize};

use super::panel::HOURS;
use super::MarketDataError;

/// What is observable at the moment the day-ahead order is placed.
///
/// For day `t − 1` only the actuals of `known_actual_hours` are published at
/// decision time. For the other hours the lag-1 load and RES values come
/// from the TSO forecasts and the lag-1 intraday price is dropped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawInformationSet", into = "RawInformationSet")]
pub struct InformationSet {
    decision_hour: u8,
    known: [bool; HOURS],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInformationSet {
    #[serde(default = "default_decision_hour")]
    decision_hour: u8,
    #[serde(default = "default_known_hours")]
    known_actual_hours: Vec<u8>,
}

fn default_decision_hour() -> u8 {
    12
}

fn default_known_hours() -> Vec<u8> {
    (1..=10).collect()
}

impl TryFrom<RawInformationSet> for InformationSet {
    type Error = MarketDataError;

    fn try_from(raw: RawInformationSet) -> Result<Self, Self::Error> {
        Self::new(raw.decision_hour, raw.known_actual_hours)
    }
}

impl From<InformationSet> for RawInformationSet {
    fn from(info: InformationSet) -> Self {
        Self { decision_hour: info.decision_hour, known_actual_hours: info.known_actual_hours() }
    }
}

impl Default for InformationSet {
    /// Order at 12:00, actuals of day `t − 1` known for hours 1..=10.
    fn default() -> Self {
        Self::new(default_decision_hour(), default_known_hours()).expect("valid default")
    }
}

impl InformationSet {
    pub fn new(decision_hour: u8, known_actual_hours: impl IntoIterator<Item = u8>) -> Result<Self, MarketDataError> {
        if !(1..=HOURS as u8).contains(&decision_hour) {
            return Err(MarketDataError::InvalidInformationSet(format!("decision hour {decision_hour}")));
        }
        let mut known = [false; HOURS];
        for h in known_actual_hours {
            if !(1..=HOURS as u8).contains(&h) {
                return Err(MarketDataError::InvalidInformationSet(format!("hour {h} outside 1..=24")));
            }
            known[h as usize - 1] = true;
        }
        Ok(Self { decision_hour, known })
    }

    /// Every actual of day `t − 1` observable; no masking at all.
    pub fn full() -> Self {
        Self::new(default_decision_hour(), 1..=HOURS as u8).expect("valid")
    }

    pub fn decision_hour(&self) -> u8 {
        self.decision_hour
    }

    pub fn is_known(&self, hour: u8) -> bool {
        self.known[hour as usize - 1]
    }

    pub fn id_lag1_excluded(&self, hour: u8) -> bool {
        !self.is_known(hour)
    }

    pub fn known_actual_hours(&self) -> Vec<u8> {
        (1..=HOURS as u8).filter(|&h| self.is_known(h)).collect()
    }

    pub fn id_lag1_excluded_hours(&self) -> Vec<u8> {
        (1..=HOURS as u8).filter(|&h| !self.is_known(h)).collect()
    }

    /// Applies the decision-time mask to the lag-1 vector of `hour`.
    pub fn mask_lag1(&self, hour: u8, lag: LagVector) -> LagVector {
        if self.is_known(hour) {
            return lag;
        }
        let mut out = lag;
        out.values[0] = lag.res_forecast;
        out.values[1] = lag.load_forecast;
        out.values[3] = 0.0;
        out.id_available = false;
        out
    }
}

/// Endogenous values of one lagged day plus the TSO forecasts that replace
/// them when the actuals are not yet observable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagVector {
    /// RES, load, DA, ID
    pub values: [f64; 4],
    pub res_forecast: f64,
    pub load_forecast: f64,
    pub id_available: bool,
}
