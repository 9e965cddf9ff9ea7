//! Synthetic hourly panels from a known per-hour SVAR.
//!
//! TSO forecasts follow an exogenous AR(1) around hour and weekday levels.
//! Actuals and prices then follow the per-hour VAR driven by those published
//! forecasts, with `ε = B·u`, so the forecast columns are valid regressors
//! and the true coefficients are recoverable. Days are simulated in order
//! because the previous day's DA minimum, maximum and hour-24 price enter
//! every hour's regressors.

use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use nalgebra::{DMatrix, Matrix4, SMatrix, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market_data::{HourlyPanel, MarketDataError, HOURS, MAX_LAG, N_EXOG};
use crate::seed::splitmix64;
use crate::svar::N_ENDOG;

pub const MIN_SYNTH_DAYS: usize = 100;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("{n} days requested, need at least {min}")]
    TooFewDays { n: usize, min: usize },

    #[error("ground truth for hour {hour} is not stable (spectral radius {radius:.4})")]
    UnstableTruth { hour: u8, radius: f64 },

    #[error("invalid ground truth: {0}")]
    InvalidTruth(String),

    #[error(transparent)]
    Data(#[from] MarketDataError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// True parameters of one delivery hour. Rows are equations (RES, L, DA, ID).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourTruth {
    pub exog: [[f64; N_EXOG]; N_ENDOG],
    pub lags: BTreeMap<usize, [[f64; N_ENDOG]; N_ENDOG]>,
    pub b: [[f64; N_ENDOG]; N_ENDOG],
}

impl HourTruth {
    pub fn exog_matrix(&self) -> SMatrix<f64, N_ENDOG, N_EXOG> {
        SMatrix::from_fn(|i, j| self.exog[i][j])
    }

    pub fn lag_matrix(&self, p: usize) -> Matrix4<f64> {
        self.lags.get(&p).map_or_else(Matrix4::zeros, |a| Matrix4::from_fn(|i, j| a[i][j]))
    }

    pub fn b_matrix(&self) -> Matrix4<f64> {
        Matrix4::from_fn(|i, j| self.b[i][j])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShockDistribution {
    Gaussian,
    /// Each coordinate is drawn independently from its column of `shocks`.
    Empirical {
        shocks: Vec<[f64; N_ENDOG]>,
    },
}

/// Published TSO forecasts: `level + deviation`, where the deviation is a
/// Gaussian AR(1) per hour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastProcess {
    /// GWh/h, by hour 1..=24.
    pub res_level: [f64; HOURS],
    pub load_level: [f64; HOURS],
    /// Multiplier on the load level, Monday first.
    pub weekday_profile: [f64; 7],
    pub persistence: f64,
    pub res_noise_std: f64,
    pub load_noise_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub hours: Vec<HourTruth>,
    pub shocks: ShockDistribution,
    pub forecasts: ForecastProcess,
    /// Simulated days discarded before the first emitted day.
    pub burn_in: usize,
}

const MON_TO_SUN_OFFSET: [f64; 7] = [1.0, 1.5, 1.5, 1.5, 1.0, -2.5, -4.0];
const LOAD_WEEKDAY_PROFILE: [f64; 7] = [1.03, 1.04, 1.04, 1.04, 1.02, 0.94, 0.89];
const DA_TARGET: f64 = 36.11;
const ID_TARGET: f64 = 36.24;

fn solar_shape(hour: u8) -> f64 {
    (std::f64::consts::PI * (hour as f64 - 6.0) / 14.0).sin().max(0.0)
}

fn demand_shape(hour: u8) -> f64 {
    (std::f64::consts::PI * (hour as f64 - 5.0) / 18.0).sin().max(0.0)
}

/// Price-equation parameters shared by the constructors.
struct PriceBlock {
    res_fc: [f64; 2],
    load_fc: [f64; 2],
    prev_day: [f64; 2],
    // (lag, [DA-on-DA, DA-on-ID, ID-on-DA, ID-on-ID])
    lags: Vec<(usize, [f64; 4])>,
}

impl PriceBlock {
    fn market() -> Self {
        Self {
            res_fc: [-0.8, -0.85],
            load_fc: [0.9, 0.9],
            prev_day: [0.05, 0.05],
            lags: vec![(1, [0.2, 0.05, 0.15, 0.1]), (2, [0.05, 0.0, 0.0, 0.03]), (7, [0.1, 0.0, 0.1, 0.0])],
        }
    }

    fn spread() -> Self {
        // identical price equations and no intraday feedback
        Self {
            res_fc: [-0.8, -0.8],
            load_fc: [0.9, 0.9],
            prev_day: [0.05, 0.05],
            lags: vec![(1, [0.2, 0.0, 0.2, 0.0]), (2, [0.05, 0.0, 0.05, 0.0]), (7, [0.1, 0.0, 0.1, 0.0])],
        }
    }
}

fn build_hours(forecasts: &ForecastProcess, prices: &PriceBlock, b: [[f64; 4]; 4]) -> Vec<HourTruth> {
    (1..=HOURS as u8)
        .map(|hour| {
            let mut exog = [[0.0; N_EXOG]; N_ENDOG];
            exog[0][7] = 1.0;
            exog[1][8] = 1.0;
            let mut lags: BTreeMap<usize, [[f64; 4]; 4]> = [1, 2, 7].iter().map(|&p| (p, [[0.0; 4]; 4])).collect();
            for (p, [dd, di, id_d, ii]) in &prices.lags {
                let a = lags.get_mut(p).expect("lag");
                a[2][2] = *dd;
                a[2][3] = *di;
                a[3][2] = *id_d;
                a[3][3] = *ii;
            }
            for (row, k) in [(2usize, 0usize), (3, 1)] {
                exog[row][7] = prices.res_fc[k];
                exog[row][8] = prices.load_fc[k];
                exog[row][9] = prices.prev_day[k];
                exog[row][10] = prices.prev_day[k];
                if hour == 24 {
                    // the previous hour-24 price is the lag-1 DA regressor here
                    lags.get_mut(&1).expect("lag 1")[row][2] += prices.prev_day[k];
                } else {
                    exog[row][11] = prices.prev_day[k];
                }
            }
            // weekday intercepts chosen so the stationary means hit the targets,
            // treating the previous-day min and max as straddling the mean
            let h = hour as usize - 1;
            let drive =
                |k: usize| prices.res_fc[k] * forecasts.res_level[h] + prices.load_fc[k] * forecasts.load_level[h];
            let persistence = |row: usize, col: usize| -> f64 {
                lags.values().map(|a| a[row][col]).sum::<f64>()
                    + if col == 2 { exog[row][9] + exog[row][10] + exog[row][11] } else { 0.0 }
            };
            let m = nalgebra::Matrix2::new(
                1.0 - persistence(2, 2),
                -persistence(2, 3),
                -persistence(3, 2),
                1.0 - persistence(3, 3),
            );
            let target = nalgebra::Vector2::new(DA_TARGET, ID_TARGET);
            let alpha = m * target - nalgebra::Vector2::new(drive(0), drive(1));
            for (row, a) in [(2usize, alpha[0]), (3, alpha[1])] {
                for (w, off) in MON_TO_SUN_OFFSET.iter().enumerate() {
                    exog[row][w] = a + off;
                }
            }
            HourTruth { exog, lags, b }
        })
        .collect()
}

impl Default for GroundTruth {
    /// Magnitudes of a large European market: RES around 16.4 GWh/h, load
    /// around 62 GWh/h, prices around 36 EUR/MWh with a standard deviation
    /// near 14.
    fn default() -> Self {
        let forecasts = ForecastProcess {
            res_level: std::array::from_fn(|h| 13.05 + 9.0 * solar_shape(h as u8 + 1)),
            load_level: std::array::from_fn(|h| 53.4 + 18.0 * demand_shape(h as u8 + 1)),
            weekday_profile: LOAD_WEEKDAY_PROFILE,
            persistence: 0.7,
            res_noise_std: 4.3,
            load_noise_std: 2.5,
        };
        let b = [[2.0, 0.0, 0.0, 0.0], [-0.3, 1.5, 0.0, 0.0], [-1.5, 0.8, 9.0, 0.0], [-2.5, 1.0, 7.0, 5.0]];
        let hours = build_hours(&forecasts, &PriceBlock::market(), b);
        Self { hours, shocks: ShockDistribution::Gaussian, forecasts, burn_in: 200 }
    }
}

impl GroundTruth {
    /// Unit-scale structural factor and calm forecasts; generation never
    /// hits the zero floor, so the panel follows the linear model exactly.
    pub fn unit_scale() -> Self {
        let mut t = Self::default();
        t.forecasts.res_noise_std = 1.5;
        t.forecasts.load_noise_std = 1.5;
        let b = [[1.0, 0.0, 0.0, 0.0], [0.3, 1.0, 0.0, 0.0], [-0.4, 0.2, 1.0, 0.0], [-0.5, 0.3, 0.6, 1.0]];
        t.hours = build_hours(&t.forecasts, &PriceBlock::market(), b);
        t
    }

    /// Intraday price equal to the day-ahead price plus an independent
    /// zero-mean shock of standard deviation `spread_std`.
    pub fn spread_market(spread_std: f64) -> Self {
        let mut t = Self::default();
        let b = [[2.0, 0.0, 0.0, 0.0], [-0.3, 1.5, 0.0, 0.0], [-1.5, 0.8, 9.0, 0.0], [-1.5, 0.8, 9.0, spread_std]];
        t.hours = build_hours(&t.forecasts, &PriceBlock::spread(), b);
        t
    }

    pub fn to_json(&self) -> Result<String, SynthError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self, SynthError> {
        let t: Self = serde_json::from_str(s)?;
        t.validate()?;
        Ok(t)
    }

    /// Checks shapes, the factor's triangular form and stability.
    ///
    /// Stability uses the per-hour companion matrix of the lags with the
    /// absolute previous-day DA coefficients added to the lag-1 DA column,
    /// a conservative bound on the cross-hour feedback.
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidTruth(m));
        if self.hours.len() != HOURS {
            return bad(format!("need 24 hours, got {}", self.hours.len()));
        }
        let f = &self.forecasts;
        if !(0.0..1.0).contains(&f.persistence) || f.res_noise_std < 0.0 || f.load_noise_std < 0.0 {
            return bad("forecast persistence must be in [0, 1) and noise std non-negative".into());
        }
        if f.weekday_profile.iter().any(|w| *w <= 0.0) || f.load_level.iter().any(|l| *l <= 0.0) {
            return bad("load levels and weekday profile must be positive".into());
        }
        if let ShockDistribution::Empirical { shocks } = &self.shocks {
            if shocks.is_empty() || shocks.iter().flatten().any(|v| !v.is_finite()) {
                return bad("empirical shocks must be non-empty and finite".into());
            }
        }
        for (i, h) in self.hours.iter().enumerate() {
            let hour = i as u8 + 1;
            let b = h.b_matrix();
            for r in 0..N_ENDOG {
                if b[(r, r)] <= 0.0 || (r + 1..N_ENDOG).any(|c| b[(r, c)] != 0.0) {
                    return bad(format!("hour {hour}: B must be lower triangular with positive diagonal"));
                }
            }
            if h.lags.keys().any(|p| *p == 0 || *p > MAX_LAG) {
                return bad(format!("hour {hour}: lags must lie in 1..=7"));
            }
            let all = h.exog.iter().flatten().chain(h.lags.values().flatten().flatten()).chain(h.b.iter().flatten());
            if all.clone().any(|v| !v.is_finite()) {
                return bad(format!("hour {hour}: non-finite parameter"));
            }
            let radius = self.spectral_radius(h);
            if radius >= 1.0 {
                return Err(SynthError::UnstableTruth { hour, radius });
            }
        }
        Ok(())
    }

    fn spectral_radius(&self, h: &HourTruth) -> f64 {
        let k = N_ENDOG;
        let mut comp = DMatrix::<f64>::zeros(k * MAX_LAG, k * MAX_LAG);
        for p in 1..=MAX_LAG {
            let mut a = h.lag_matrix(p);
            if p == 1 {
                for r in 0..k {
                    a[(r, 2)] += h.exog[r][9].abs() + h.exog[r][10].abs() + h.exog[r][11].abs();
                }
            }
            comp.view_mut((0, (p - 1) * k), (k, k)).copy_from(&a);
        }
        for i in k..k * MAX_LAG {
            comp[(i, i - k)] = 1.0;
        }
        comp.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

fn hour_seed(seed: u64, hour: usize) -> u64 {
    splitmix64(splitmix64(seed) ^ hour as u64)
}

/// Simulates `n_days` days starting at `start_date`.
pub fn generate_panel(
    truth: &GroundTruth,
    n_days: usize,
    seed: u64,
    start_date: NaiveDate,
) -> Result<HourlyPanel, SynthError> {
    if n_days < MIN_SYNTH_DAYS {
        return Err(SynthError::TooFewDays { n: n_days, min: MIN_SYNTH_DAYS });
    }
    truth.validate()?;
    let fp = &truth.forecasts;
    let total = truth.burn_in + n_days;
    let first_weekday =
        (start_date.weekday().num_days_from_monday() as i64 - truth.burn_in as i64).rem_euclid(7) as usize;

    let a0: Vec<_> = truth.hours.iter().map(HourTruth::exog_matrix).collect();
    let lags: Vec<Vec<(usize, Matrix4<f64>)>> =
        truth.hours.iter().map(|h| h.lags.keys().map(|&p| (p, h.lag_matrix(p))).collect()).collect();
    let bs: Vec<_> = truth.hours.iter().map(HourTruth::b_matrix).collect();
    let mut rngs: Vec<ChaCha8Rng> = (0..HOURS).map(|h| ChaCha8Rng::seed_from_u64(hour_seed(seed, h + 1))).collect();

    // [day][hour] state; the first MAX_LAG rows are a flat pre-sample
    let start_y: Vec<Vector4<f64>> =
        (0..HOURS).map(|h| Vector4::new(fp.res_level[h], fp.load_level[h], DA_TARGET, ID_TARGET)).collect();
    let mut y: Vec<Vec<Vector4<f64>>> = vec![start_y; MAX_LAG];
    let mut res_fc_out: Vec<[f64; HOURS]> = Vec::with_capacity(total);
    let mut load_fc_out: Vec<[f64; HOURS]> = Vec::with_capacity(total);
    let mut dev = [[0.0f64; 2]; HOURS];

    for d in 0..total {
        let weekday = (first_weekday + d) % 7;
        let t = d + MAX_LAG;
        let prev = &y[t - 1];
        let prev_min = prev.iter().map(|v| v[2]).fold(f64::INFINITY, f64::min);
        let prev_max = prev.iter().map(|v| v[2]).fold(f64::NEG_INFINITY, f64::max);
        let prev_24 = prev[HOURS - 1][2];
        let mut today = Vec::with_capacity(HOURS);
        let mut res_fc_day = [0.0; HOURS];
        let mut load_fc_day = [0.0; HOURS];
        for h in 0..HOURS {
            let rng = &mut rngs[h];
            let e_res: f64 = StandardNormal.sample(rng);
            let e_load: f64 = StandardNormal.sample(rng);
            dev[h][0] = fp.persistence * dev[h][0] + fp.res_noise_std * e_res;
            dev[h][1] = fp.persistence * dev[h][1] + fp.load_noise_std * e_load;
            let res_fc = (fp.res_level[h] + dev[h][0]).max(0.0);
            let load_fc = (fp.load_level[h] * fp.weekday_profile[weekday] + dev[h][1]).max(1.0);

            let mut x = SMatrix::<f64, N_EXOG, 1>::zeros();
            x[weekday] = 1.0;
            x[7] = res_fc;
            x[8] = load_fc;
            x[9] = prev_min;
            x[10] = prev_max;
            x[11] = prev_24;

            let u = draw_shock(&truth.shocks, rng);
            let mut v = a0[h] * x + bs[h] * u;
            for (p, a) in &lags[h] {
                v += a * y[t - p][h];
            }
            v[0] = v[0].max(0.0);
            v[1] = v[1].max(1.0);
            today.push(v);
            res_fc_day[h] = res_fc;
            load_fc_day[h] = load_fc;
        }
        y.push(today);
        res_fc_out.push(res_fc_day);
        load_fc_out.push(load_fc_day);
    }

    let skip = truth.burn_in;
    Ok(HourlyPanel::from_fn(start_date, n_days, |day, hour| {
        let h = hour as usize - 1;
        let v = y[MAX_LAG + skip + day][h];
        [v[0], v[1], v[2], v[3], load_fc_out[skip + day][h], res_fc_out[skip + day][h]]
    })?)
}

fn draw_shock(dist: &ShockDistribution, rng: &mut ChaCha8Rng) -> Vector4<f64> {
    match dist {
        ShockDistribution::Gaussian => Vector4::from_fn(|_, _| StandardNormal.sample(rng)),
        ShockDistribution::Empirical { shocks } => {
            Vector4::from_fn(|k, _| shocks[rng.random_range(0..shocks.len())][k])
        }
    }
}
