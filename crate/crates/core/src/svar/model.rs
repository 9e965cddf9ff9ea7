use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use chrono::NaiveDate;
use nalgebra::{DMatrix, Matrix4, SMatrix, Vector4};

use super::{SvarError, VarSpec, N_ENDOG};
use crate::econometrics::{cholesky_lower, ols_multivariate, structural_shocks, TriangularFactor};
use crate::market_data::{
    build_regressor_row, HourlyPanel, InformationSet, MarketDataError, RegressorRow, Series, MAX_LAG, N_EXOG,
};

/// Minimum number of usable rows in an estimation window.
pub const MIN_FIT_DAYS: usize = 200;

/// Exogenous column of the previous day's hour-24 DA price. At hour 24 it
/// duplicates the lag-1 DA regressor and is dropped.
const DA_PREV_24: usize = 11;

pub type ExogMatrix = SMatrix<f64, N_ENDOG, N_EXOG>;

/// Fitted SVAR for a single delivery hour.
#[derive(Debug, Clone)]
pub struct HourModel {
    pub(super) hour: u8,
    pub(super) spec: VarSpec,
    pub(super) exog_coeffs: ExogMatrix,
    pub(super) lag_coeffs: BTreeMap<usize, Matrix4<f64>>,
    pub(super) b: TriangularFactor,
    pub(super) sigma: Matrix4<f64>,
    /// Recovered structural shocks, one row per estimation day.
    pub(super) shocks: Vec<[f64; N_ENDOG]>,
    pub(super) fit_window: (NaiveDate, NaiveDate),
    pub(super) id_lag1_excluded: bool,
    pub(super) da_prev_24_dropped: bool,
    pub(super) std_errors: Option<(ExogMatrix, BTreeMap<usize, Matrix4<f64>>)>,
}

impl HourModel {
    pub fn hour(&self) -> u8 {
        self.hour
    }

    pub fn spec(&self) -> &VarSpec {
        &self.spec
    }

    /// A₀, 4 × 12.
    pub fn exog_coeffs(&self) -> &ExogMatrix {
        &self.exog_coeffs
    }

    /// Aₚ for each configured lag.
    pub fn lag_coeffs(&self) -> &BTreeMap<usize, Matrix4<f64>> {
        &self.lag_coeffs
    }

    pub fn factor(&self) -> &TriangularFactor {
        &self.b
    }

    pub fn b(&self) -> Matrix4<f64> {
        Matrix4::from_fn(|i, j| self.b.matrix()[(i, j)])
    }

    pub fn sigma(&self) -> &Matrix4<f64> {
        &self.sigma
    }

    pub fn shocks(&self) -> &[[f64; N_ENDOG]] {
        &self.shocks
    }

    /// First and last estimation day.
    pub fn fit_window(&self) -> (NaiveDate, NaiveDate) {
        self.fit_window
    }

    pub fn n_obs(&self) -> usize {
        self.shocks.len()
    }

    pub fn id_lag1_excluded(&self) -> bool {
        self.id_lag1_excluded
    }

    pub fn da_prev_24_dropped(&self) -> bool {
        self.da_prev_24_dropped
    }

    /// OLS standard errors in the shapes of A₀ and Aₚ; dropped regressors
    /// report zero. `None` for models rebuilt from a record.
    pub fn std_errors(&self) -> Option<&(ExogMatrix, BTreeMap<usize, Matrix4<f64>>)> {
        self.std_errors.as_ref()
    }

    /// Reduced-form residual of estimation row `row`, `ε = B·u`.
    pub fn residual(&self, row: usize) -> Vector4<f64> {
        self.b() * Vector4::from(self.shocks[row])
    }

    /// A model assembled from explicit parameters, e.g. for scenario studies.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        hour: u8,
        spec: VarSpec,
        exog_coeffs: ExogMatrix,
        lag_coeffs: BTreeMap<usize, Matrix4<f64>>,
        b: TriangularFactor,
        shocks: Vec<[f64; N_ENDOG]>,
        fit_window: (NaiveDate, NaiveDate),
        id_lag1_excluded: bool,
    ) -> Result<Self, SvarError> {
        if !(1..=24).contains(&hour) {
            return Err(SvarError::InvalidHour(hour));
        }
        if b.dim() != N_ENDOG {
            return Err(SvarError::InvalidRecord(format!("B must be 4x4, got {}", b.dim())));
        }
        if spec.lags().iter().any(|p| !lag_coeffs.contains_key(p)) || lag_coeffs.len() != spec.lags().len() {
            return Err(SvarError::InvalidRecord("lag matrices do not match the lag set".into()));
        }
        if id_lag1_excluded && lag_coeffs.get(&1).is_some_and(|a| a.column(3).iter().any(|&v| v != 0.0)) {
            return Err(SvarError::InvalidRecord("lag-1 ID column must be zero when excluded".into()));
        }
        let bm = Matrix4::from_fn(|i, j| b.matrix()[(i, j)]);
        let da_prev_24_dropped = hour == 24 && spec.lags().contains(&1);
        Ok(Self {
            hour,
            spec,
            exog_coeffs,
            lag_coeffs,
            sigma: bm * bm.transpose(),
            b,
            shocks,
            fit_window,
            id_lag1_excluded,
            da_prev_24_dropped,
            std_errors: None,
        })
    }

    pub(super) fn forecast_from_row(&self, row: &RegressorRow) -> Vector4<f64> {
        let x = SMatrix::<f64, N_EXOG, 1>::from_column_slice(&row.x);
        let mut y = self.exog_coeffs * x;
        for (p, lag) in &row.y_lags {
            y += self.lag_coeffs[p] * Vector4::from(lag.values);
        }
        y
    }
}

/// Which regressors enter the design matrix for an hour.
#[derive(Debug, Clone)]
struct Layout {
    exog: Vec<usize>,
    lagged: Vec<(usize, usize)>,
}

impl Layout {
    fn new(spec: &VarSpec, hour: u8, id_lag1_excluded: bool) -> Self {
        let drop_da24 = hour == 24 && spec.lags().contains(&1);
        let exog = (0..N_EXOG).filter(|&c| !(drop_da24 && c == DA_PREV_24)).collect();
        let mut lagged = Vec::new();
        for &p in spec.lags() {
            for v in 0..N_ENDOG {
                if !(p == 1 && v == 3 && id_lag1_excluded) {
                    lagged.push((p, v));
                }
            }
        }
        Self { exog, lagged }
    }

    fn width(&self) -> usize {
        self.exog.len() + self.lagged.len()
    }

    fn fill(&self, row: &RegressorRow, out: &mut [f64]) {
        let mut k = 0;
        for &c in &self.exog {
            out[k] = row.x[c];
            k += 1;
        }
        for &(p, v) in &self.lagged {
            out[k] = row.lag(p).expect("lag present").values[v];
            k += 1;
        }
    }
}

/// Stacked regressors and targets of one hour for every panel day with
/// enough history. Windows are fitted from slices of this design.
#[derive(Debug, Clone)]
pub struct HourDesign {
    hour: u8,
    spec: VarSpec,
    layout: Layout,
    id_lag1_excluded: bool,
    start_date: NaiveDate,
    x: DMatrix<f64>,
    y: DMatrix<f64>,
}

impl HourDesign {
    pub fn build(panel: &HourlyPanel, hour: u8, spec: &VarSpec, info: &InformationSet) -> Result<Self, SvarError> {
        if !(1..=24).contains(&hour) {
            return Err(SvarError::InvalidHour(hour));
        }
        let excluded = info.id_lag1_excluded(hour);
        let layout = Layout::new(spec, hour, excluded);
        let n = panel.n_days().saturating_sub(MAX_LAG);
        let m = layout.width();
        let mut x = DMatrix::<f64>::zeros(n, m);
        let mut y = DMatrix::<f64>::zeros(n, N_ENDOG);
        let mut buf = vec![0.0; m];
        for r in 0..n {
            let day = r + MAX_LAG;
            let row = build_regressor_row(panel, day, hour, info, spec.lags())?;
            layout.fill(&row, &mut buf);
            for (c, v) in buf.iter().enumerate() {
                x[(r, c)] = *v;
            }
            for (c, s) in Series::ENDOGENOUS.iter().enumerate() {
                y[(r, c)] = panel.value(*s, day, hour);
            }
        }
        Ok(Self { hour, spec: spec.clone(), layout, id_lag1_excluded: excluded, start_date: panel.start_date(), x, y })
    }

    pub fn hour(&self) -> u8 {
        self.hour
    }

    /// Fits on the panel days of `window`; days without 7 days of history
    /// are trimmed from its front.
    pub fn fit(&self, window: RangeInclusive<usize>) -> Result<HourModel, SvarError> {
        let last = *window.end();
        let available = self.x.nrows() + MAX_LAG;
        if last >= available {
            return Err(SvarError::Data(MarketDataError::DayOutOfRange { day: last, days: available }));
        }
        let first = (*window.start()).max(MAX_LAG);
        let n = if last >= first { last - first + 1 } else { 0 };
        if n < MIN_FIT_DAYS {
            return Err(SvarError::WindowTooShort { days: n, min: MIN_FIT_DAYS });
        }
        let x = self.x.rows(first - MAX_LAG, n).into_owned();
        let y = self.y.rows(first - MAX_LAG, n).into_owned();

        let fit = ols_multivariate(&y, &x, true)?;
        let factor = cholesky_lower(&fit.sigma)?;
        let u = structural_shocks(&fit, &factor)?;
        let se = fit.standard_errors();
        let (exog_coeffs, lag_coeffs) = self.unpack(&fit.coefficients);
        let date = |d: usize| self.start_date + chrono::Days::new(d as u64);

        Ok(HourModel {
            hour: self.hour,
            spec: self.spec.clone(),
            exog_coeffs,
            lag_coeffs,
            sigma: Matrix4::from_fn(|i, j| fit.sigma[(i, j)]),
            b: factor,
            shocks: (0..n).map(|r| [u[(r, 0)], u[(r, 1)], u[(r, 2)], u[(r, 3)]]).collect(),
            fit_window: (date(first), date(last)),
            id_lag1_excluded: self.id_lag1_excluded,
            da_prev_24_dropped: self.layout.exog.len() < N_EXOG,
            std_errors: Some(self.unpack(&se)),
        })
    }

    /// Scatters an (equations × regressors) matrix back into A₀ and Aₚ.
    fn unpack(&self, coef: &DMatrix<f64>) -> (ExogMatrix, BTreeMap<usize, Matrix4<f64>>) {
        let mut a0 = ExogMatrix::zeros();
        let mut lags: BTreeMap<usize, Matrix4<f64>> = self.spec.lags().iter().map(|&p| (p, Matrix4::zeros())).collect();
        for eq in 0..N_ENDOG {
            let mut k = 0;
            for &c in &self.layout.exog {
                a0[(eq, c)] = coef[(eq, k)];
                k += 1;
            }
            for &(p, v) in &self.layout.lagged {
                lags.get_mut(&p).expect("lag")[(eq, v)] = coef[(eq, k)];
                k += 1;
            }
        }
        (a0, lags)
    }
}

/// Estimates the SVAR for `hour` on the days of `window` (panel indices).
///
/// Days without 7 days of history are trimmed from the front of the window.
/// When the information set masks the hour, the lag-1 ID regressor is left
/// out and its coefficients are exactly zero.
pub fn fit_hour_model(
    panel: &HourlyPanel,
    hour: u8,
    window: RangeInclusive<usize>,
    spec: &VarSpec,
    info: &InformationSet,
) -> Result<HourModel, SvarError> {
    if *window.end() >= panel.n_days() {
        return Err(SvarError::Data(MarketDataError::DayOutOfRange { day: *window.end(), days: panel.n_days() }));
    }
    // build only the rows the window needs
    let sub = panel.head(*window.end() + 1);
    HourDesign::build(&sub, hour, spec, info)?.fit(window)
}

/// `Ŷ = Â₀x_t + Σₚ Âₚ Y_{t−p}` with the decision-time masked lags.
pub fn point_forecast(
    model: &HourModel,
    panel: &HourlyPanel,
    day: usize,
    info: &InformationSet,
) -> Result<[f64; N_ENDOG], SvarError> {
    if info.id_lag1_excluded(model.hour) != model.id_lag1_excluded {
        return Err(SvarError::InformationSetMismatch { hour: model.hour });
    }
    let row = build_regressor_row(panel, day, model.hour, info, model.spec.lags())?;
    Ok(model.forecast_from_row(&row).into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    /// Noisy but well-conditioned panel; not generated from any VAR.
    fn noisy_panel(n_days: usize, seed: u64) -> HourlyPanel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start = NaiveDate::from_ymd_opt(2016, 1, 4).unwrap();
        HourlyPanel::from_fn(start, n_days, |_, h| {
            let mut z = || -> f64 { StandardNormal.sample(&mut rng) };
            let res_fc = 15.0 + 3.0 * z();
            let load_fc = 60.0 + 4.0 * z() + h as f64 * 0.1;
            [(res_fc + z()).max(0.0), load_fc + z(), 35.0 + 8.0 * z(), 36.0 + 9.0 * z(), load_fc, res_fc.max(0.0)]
        })
        .unwrap()
    }

    #[test]
    fn masked_hour_has_zero_id_lag1_column() {
        let p = noisy_panel(400, 3);
        let m = fit_hour_model(&p, 18, 0..=399, &VarSpec::default(), &InformationSet::default()).unwrap();
        assert!(m.id_lag1_excluded());
        assert!(m.lag_coeffs()[&1].column(3).iter().all(|&v| v == 0.0));
        let known = fit_hour_model(&p, 4, 0..=399, &VarSpec::default(), &InformationSet::default()).unwrap();
        assert!(known.lag_coeffs()[&1].column(3).iter().any(|&v| v != 0.0));
    }

    #[test]
    fn hour_24_drops_duplicate_da_column() {
        let p = noisy_panel(400, 4);
        let m = fit_hour_model(&p, 24, 0..=399, &VarSpec::default(), &InformationSet::full()).unwrap();
        assert!(m.da_prev_24_dropped());
        assert!(m.exog_coeffs().column(11).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn short_window_rejected() {
        let p = noisy_panel(300, 5);
        let err = fit_hour_model(&p, 5, 0..=205, &VarSpec::default(), &InformationSet::default()).unwrap_err();
        // 7 days trimmed for lag history: 199 usable
        assert!(matches!(err, SvarError::WindowTooShort { days: 199, .. }));
    }

    #[test]
    fn in_sample_forecast_plus_residual_reproduces_data() {
        let p = noisy_panel(320, 6);
        let info = InformationSet::default();
        for hour in [3, 18, 24] {
            let m = fit_hour_model(&p, hour, 10..=319, &VarSpec::default(), &info).unwrap();
            for (row, day) in (10..=319).enumerate().step_by(37) {
                let f = point_forecast(&m, &p, day, &info).unwrap();
                let e = m.residual(row);
                for (k, s) in Series::ENDOGENOUS.iter().enumerate() {
                    let y = p.value(*s, day, hour);
                    assert!((f[k] + e[k] - y).abs() <= 1e-10 * y.abs().max(1.0), "hour {hour} day {day}");
                }
            }
        }
    }

    #[test]
    fn structural_factor_matches_sigma() {
        let p = noisy_panel(300, 8);
        let m = fit_hour_model(&p, 9, 0..=299, &VarSpec::default(), &InformationSet::default()).unwrap();
        let b = m.b();
        assert!(((b * b.transpose()) - m.sigma()).norm() <= 1e-10 * m.sigma().norm());
        assert!(b[(0, 1)] == 0.0 && b[(2, 3)] == 0.0);
    }

    #[test]
    fn mismatched_information_set_rejected() {
        let p = noisy_panel(300, 9);
        let m = fit_hour_model(&p, 18, 0..=280, &VarSpec::default(), &InformationSet::default()).unwrap();
        assert!(matches!(
            point_forecast(&m, &p, 290, &InformationSet::full()),
            Err(SvarError::InformationSetMismatch { hour: 18 })
        ));
    }

    #[test]
    fn selector_forecasts() {
        let p = noisy_panel(30, 10);
        let spec = VarSpec::default();
        let lags: BTreeMap<_, _> = spec.lags().iter().map(|&q| (q, Matrix4::zeros())).collect();
        let factor = TriangularFactor::from_lower(DMatrix::identity(4, 4)).unwrap();
        let d = p.date(0);
        let zero = HourModel::from_parts(
            5,
            spec.clone(),
            ExogMatrix::zeros(),
            lags.clone(),
            factor.clone(),
            vec![],
            (d, d),
            false,
        )
        .unwrap();
        let info = InformationSet::default();
        assert_eq!(point_forecast(&zero, &p, 20, &info).unwrap(), [0.0; 4]);

        let mut a0 = ExogMatrix::zeros();
        a0.set_column(0, &Vector4::new(1.0, 2.0, 3.0, 4.0));
        let only_a0 = HourModel::from_parts(5, spec, a0, lags, factor, vec![], (d, d), false).unwrap();
        let monday = (7..30).find(|&t| p.day_of_week(t) == 1).unwrap();
        assert_eq!(point_forecast(&only_a0, &p, monday, &info).unwrap(), [1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn design_slices_match_direct_fit() {
        let p = noisy_panel(400, 12);
        let info = InformationSet::default();
        let design = HourDesign::build(&p, 15, &VarSpec::default(), &info).unwrap();
        let a = design.fit(100..=350).unwrap();
        let b = fit_hour_model(&p, 15, 100..=350, &VarSpec::default(), &info).unwrap();
        assert_eq!(a.exog_coeffs(), b.exog_coeffs());
        assert_eq!(a.shocks(), b.shocks());
        assert_eq!(a.fit_window(), (p.date(100), p.date(350)));
    }
}
