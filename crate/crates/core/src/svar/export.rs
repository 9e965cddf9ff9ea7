//! JSON audit record of a fitted hour model.
//!
//! ```json
//! {
//!   "hour": 18,
//!   "lags": [1, 2, 7],
//!   "rho": 0.005,
//!   "endogenous": ["RES", "L", "DA", "ID"],
//!   "exogenous": ["mon", ..., "da_prev_24"],
//!   "exog_coeffs": [[...12 values...], ...4 rows...],
//!   "lag_coeffs": {"1": [[...4...], ...4 rows...], "2": ..., "7": ...},
//!   "b": [[...4...], ...4 rows...],
//!   "sigma": [[...4...], ...4 rows...],
//!   "fit_window": {"first_date": "2016-01-08", "last_date": "2017-12-31", "n_obs": 724},
//!   "id_lag1_excluded": true,
//!   "da_prev_24_dropped": false,
//!   "shocks": [[u1, u2, u3, u4], ...]
//! }
//! ```
//!
//! Matrices are row-major, rows indexed by equation (RES, L, DA, ID).

use std::collections::BTreeMap;

use chrono::NaiveDate;
use nalgebra::{DMatrix, Matrix4};
use serde::{Deserialize, Serialize};

use super::model::ExogMatrix;
use super::{HourModel, SvarError, VarSpec, ENDOG_NAMES, N_ENDOG};
use crate::econometrics::TriangularFactor;
use crate::market_data::{EXOG_NAMES, N_EXOG};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitWindowRecord {
    pub first_date: NaiveDate,
    pub last_date: NaiveDate,
    pub n_obs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HourModelRecord {
    pub hour: u8,
    pub lags: Vec<usize>,
    pub rho: f64,
    pub endogenous: Vec<String>,
    pub exogenous: Vec<String>,
    pub exog_coeffs: Vec<Vec<f64>>,
    pub lag_coeffs: BTreeMap<String, Vec<Vec<f64>>>,
    pub b: Vec<Vec<f64>>,
    pub sigma: Vec<Vec<f64>>,
    pub fit_window: FitWindowRecord,
    pub id_lag1_excluded: bool,
    pub da_prev_24_dropped: bool,
    pub shocks: Vec<[f64; N_ENDOG]>,
}

fn rows4(m: &Matrix4<f64>) -> Vec<Vec<f64>> {
    (0..N_ENDOG).map(|i| (0..N_ENDOG).map(|j| m[(i, j)]).collect()).collect()
}

fn parse_rows(rows: &[Vec<f64>], ncols: usize, what: &str) -> Result<Vec<f64>, SvarError> {
    if rows.len() != N_ENDOG || rows.iter().any(|r| r.len() != ncols) {
        return Err(SvarError::InvalidRecord(format!("{what} must be {N_ENDOG}x{ncols}")));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    if flat.iter().any(|v| !v.is_finite()) {
        return Err(SvarError::InvalidRecord(format!("{what} has non-finite entries")));
    }
    Ok(flat)
}

impl From<&HourModel> for HourModelRecord {
    fn from(m: &HourModel) -> Self {
        let a0 = m.exog_coeffs();
        let (first_date, last_date) = m.fit_window();
        Self {
            hour: m.hour(),
            lags: m.spec().lags().to_vec(),
            rho: m.spec().rho(),
            endogenous: ENDOG_NAMES.iter().map(|s| s.to_string()).collect(),
            exogenous: EXOG_NAMES.iter().map(|s| s.to_string()).collect(),
            exog_coeffs: (0..N_ENDOG).map(|i| (0..N_EXOG).map(|j| a0[(i, j)]).collect()).collect(),
            lag_coeffs: m.lag_coeffs().iter().map(|(p, a)| (p.to_string(), rows4(a))).collect(),
            b: rows4(&m.b()),
            sigma: rows4(m.sigma()),
            fit_window: FitWindowRecord { first_date, last_date, n_obs: m.n_obs() },
            id_lag1_excluded: m.id_lag1_excluded(),
            da_prev_24_dropped: m.da_prev_24_dropped(),
            shocks: m.shocks().to_vec(),
        }
    }
}

impl HourModelRecord {
    pub fn to_json(&self) -> Result<String, SvarError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self, SvarError> {
        Ok(serde_json::from_str(s)?)
    }

    /// Rebuilds the model; `sigma` is recomputed from `b`.
    pub fn to_model(&self) -> Result<HourModel, SvarError> {
        if self.endogenous != ENDOG_NAMES || self.exogenous != EXOG_NAMES {
            return Err(SvarError::InvalidRecord("variable names do not match this build".into()));
        }
        let spec = VarSpec::new(self.lags.clone(), self.rho)?;
        let a0 = ExogMatrix::from_row_slice(&parse_rows(&self.exog_coeffs, N_EXOG, "exog_coeffs")?);
        let mut lag_coeffs = BTreeMap::new();
        for (key, rows) in &self.lag_coeffs {
            let p: usize =
                key.parse().map_err(|_| SvarError::InvalidRecord(format!("lag key {key:?} is not an integer")))?;
            lag_coeffs.insert(p, Matrix4::from_row_slice(&parse_rows(rows, N_ENDOG, "lag_coeffs")?));
        }
        let b = TriangularFactor::from_lower(DMatrix::from_row_slice(
            N_ENDOG,
            N_ENDOG,
            &parse_rows(&self.b, N_ENDOG, "b")?,
        ))?;
        if self.shocks.len() != self.fit_window.n_obs {
            return Err(SvarError::InvalidRecord("shock history length differs from n_obs".into()));
        }
        HourModel::from_parts(
            self.hour,
            spec,
            a0,
            lag_coeffs,
            b,
            self.shocks.clone(),
            (self.fit_window.first_date, self.fit_window.last_date),
            self.id_lag1_excluded,
        )
    }
}
