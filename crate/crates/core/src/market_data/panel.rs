use chrono::{Datelike, Duration, NaiveDate};

use super::MarketDataError;

pub const HOURS: usize = 24;

/// The six stored series. The first four are the endogenous block in model
/// order (RES, load, DA, ID).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Series {
    Res,
    Load,
    Da,
    Id,
    LoadForecast,
    ResForecast,
}

impl Series {
    pub const ALL: [Series; 6] =
        [Series::Res, Series::Load, Series::Da, Series::Id, Series::LoadForecast, Series::ResForecast];

    pub const ENDOGENOUS: [Series; 4] = [Series::Res, Series::Load, Series::Da, Series::Id];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Series::Res => "res_actual",
            Series::Load => "load_actual",
            Series::Da => "da_price",
            Series::Id => "id3_price",
            Series::LoadForecast => "load_forecast",
            Series::ResForecast => "res_forecast",
        }
    }
}

/// One (date, hour) cell. Prices in EUR/MWh, volumes in GWh/h.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HourlyObservation {
    pub date: NaiveDate,
    /// 1..=24, hour 1 is 00:00–01:00.
    pub hour: u8,
    pub da_price: f64,
    pub id3_price: f64,
    pub load_actual: f64,
    pub res_actual: f64,
    pub load_forecast: f64,
    pub res_forecast: f64,
}

impl HourlyObservation {
    pub fn get(&self, s: Series) -> f64 {
        match s {
            Series::Res => self.res_actual,
            Series::Load => self.load_actual,
            Series::Da => self.da_price,
            Series::Id => self.id3_price,
            Series::LoadForecast => self.load_forecast,
            Series::ResForecast => self.res_forecast,
        }
    }
}

/// Dense day × 24 grid, immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlyPanel {
    start_date: NaiveDate,
    n_days: usize,
    // one day-major vector per Series, length n_days * 24
    data: [Vec<f64>; 6],
}

impl HourlyPanel {
    /// Builds a panel from per-series day-major columns and validates it.
    pub fn from_columns(start_date: NaiveDate, columns: [Vec<f64>; 6]) -> Result<Self, MarketDataError> {
        let len = columns[0].len();
        if len == 0 {
            return Err(MarketDataError::Empty);
        }
        if columns.iter().any(|c| c.len() != len) || !len.is_multiple_of(HOURS) {
            return Err(MarketDataError::Malformed("columns must share a length that is a multiple of 24".into()));
        }
        let panel = Self { start_date, n_days: len / HOURS, data: columns };
        panel.validate()?;
        Ok(panel)
    }

    /// Builds a panel cell by cell; `f(day_index, hour)` with hour in 1..=24.
    pub fn from_fn<F>(start_date: NaiveDate, n_days: usize, mut f: F) -> Result<Self, MarketDataError>
    where
        F: FnMut(usize, u8) -> [f64; 6],
    {
        let mut columns: [Vec<f64>; 6] = Default::default();
        for c in columns.iter_mut() {
            c.reserve(n_days * HOURS);
        }
        for day in 0..n_days {
            for hour in 1..=HOURS as u8 {
                let v = f(day, hour);
                for (c, x) in columns.iter_mut().zip(v) {
                    c.push(x);
                }
            }
        }
        Self::from_columns(start_date, columns)
    }

    fn validate(&self) -> Result<(), MarketDataError> {
        for s in Series::ALL {
            for (i, &v) in self.data[s.index()].iter().enumerate() {
                let ok = v.is_finite()
                    && match s {
                        Series::Load => v > 0.0,
                        Series::Res | Series::LoadForecast | Series::ResForecast => v >= 0.0,
                        Series::Da | Series::Id => true,
                    };
                if !ok {
                    return Err(MarketDataError::InvalidValue {
                        column: s.name().into(),
                        date: self.date(i / HOURS),
                        hour: (i % HOURS + 1) as u8,
                        value: v,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn n_days(&self) -> usize {
        self.n_days
    }

    pub fn start_date(&self) -> NaiveDate {
        self.start_date
    }

    pub fn end_date(&self) -> NaiveDate {
        self.date(self.n_days - 1)
    }

    pub fn date(&self, day: usize) -> NaiveDate {
        self.start_date + Duration::days(day as i64)
    }

    pub fn day_index(&self, date: NaiveDate) -> Option<usize> {
        let d = (date - self.start_date).num_days();
        (d >= 0 && (d as usize) < self.n_days).then_some(d as usize)
    }

    /// ISO weekday, Monday = 1 … Sunday = 7.
    pub fn day_of_week(&self, day: usize) -> u8 {
        self.date(day).weekday().number_from_monday() as u8
    }

    /// Value of `s` at `(day, hour)`; hour in 1..=24. Panics when out of range.
    #[inline]
    pub fn value(&self, s: Series, day: usize, hour: u8) -> f64 {
        self.data[s.index()][day * HOURS + hour as usize - 1]
    }

    /// The 24 hourly values of `s` on `day`.
    pub fn day_slice(&self, s: Series, day: usize) -> &[f64] {
        &self.data[s.index()][day * HOURS..(day + 1) * HOURS]
    }

    /// Daily series of one hour across the panel.
    pub fn hour_series(&self, s: Series, hour: u8) -> Vec<f64> {
        (0..self.n_days).map(|d| self.value(s, d, hour)).collect()
    }

    pub fn column(&self, s: Series) -> &[f64] {
        &self.data[s.index()]
    }

    pub fn observation(&self, day: usize, hour: u8) -> HourlyObservation {
        HourlyObservation {
            date: self.date(day),
            hour,
            da_price: self.value(Series::Da, day, hour),
            id3_price: self.value(Series::Id, day, hour),
            load_actual: self.value(Series::Load, day, hour),
            res_actual: self.value(Series::Res, day, hour),
            load_forecast: self.value(Series::LoadForecast, day, hour),
            res_forecast: self.value(Series::ResForecast, day, hour),
        }
    }

    /// Copy of the panel with every cell passed through `f(day, hour, obs)`.
    pub fn map_cells<F>(&self, mut f: F) -> Result<Self, MarketDataError>
    where
        F: FnMut(usize, u8, HourlyObservation) -> HourlyObservation,
    {
        Self::from_fn(self.start_date, self.n_days, |day, hour| {
            let o = f(day, hour, self.observation(day, hour));
            Series::ALL.map(|s| o.get(s))
        })
    }

    /// The first `n_days` days (all of them if the panel is shorter).
    pub fn head(&self, n_days: usize) -> Self {
        let n = n_days.min(self.n_days);
        Self {
            start_date: self.start_date,
            n_days: n,
            data: std::array::from_fn(|i| self.data[i][..n * HOURS].to_vec()),
        }
    }
}
