use nalgebra::DMatrix;

use super::{ols_multivariate, EconError};

/// Asymptotic 5% critical value of the Dickey–Fuller t-ratio, constant only.
pub const ADF_CRITICAL_5PCT: f64 = -2.86;

/// Weekly augmentation for daily series.
pub const DEFAULT_ADF_LAG: usize = 7;

const MIN_LEN: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdfResult {
    /// t-ratio on `y_{t-1}`.
    pub statistic: f64,
    pub reject_at_5pct: bool,
    pub lags: usize,
    pub n_obs: usize,
}

/// Augmented Dickey–Fuller test with intercept and a fixed number of lagged
/// differences: `Δy_t = α + β·y_{t-1} + Σ_{i=1..k} γ_i·Δy_{t-i} + e_t`.
pub fn adf_test(series: &[f64], max_lag: usize) -> Result<AdfResult, EconError> {
    let n = series.len();
    if n < MIN_LEN.max(max_lag + 10) {
        return Err(EconError::SeriesTooShort { len: n, min: MIN_LEN.max(max_lag + 10) });
    }
    let first = series[0];
    if series.iter().all(|&v| v == first) {
        return Err(EconError::ConstantSeries);
    }

    let diff: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
    // diff[i] = y[i+1] - y[i]; the regression for Δy_t needs Δy_{t-k}
    let rows: Vec<usize> = (max_lag..diff.len()).collect();
    let m = 2 + max_lag;
    let x = DMatrix::from_fn(rows.len(), m, |r, c| {
        let i = rows[r];
        match c {
            0 => 1.0,
            1 => series[i],
            _ => diff[i - (c - 1)],
        }
    });
    let y = DMatrix::from_fn(rows.len(), 1, |r, _| diff[rows[r]]);
    let fit = ols_multivariate(&y, &x, true)?;
    let se = fit.standard_errors()[(0, 1)];
    let statistic = fit.coefficients[(0, 1)] / se;
    Ok(AdfResult { statistic, reject_at_5pct: statistic < ADF_CRITICAL_5PCT, lags: max_lag, n_obs: rows.len() })
}
