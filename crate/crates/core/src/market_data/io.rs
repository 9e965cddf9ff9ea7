use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, Timelike, Weekday};
use serde::{Deserialize, Serialize};

use super::panel::{HourlyPanel, Series, HOURS};
use super::MarketDataError;

/// Longest run of consecutive missing hours that is interpolated.
pub const MAX_GAP_HOURS: usize = 24;

/// How daylight-saving days in local market time are mapped onto 24 hours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DstPolicy {
    /// Timestamps already form 24 hours per day (UTC or pre-cleaned data).
    None,
    /// EU rule: on the last Sunday of March a missing hour 3 is copied from
    /// hour 2; on the last Sunday of October two hour-3 records are averaged.
    #[default]
    Eu,
}

/// Column names in the input CSV and the timestamp layout.
///
/// Timestamps are hour-beginning local times, so `00:00` is hour 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnMapping {
    pub timestamp: String,
    /// chrono format string
    pub timestamp_format: String,
    pub da_price: String,
    pub id3_price: String,
    pub load_actual: String,
    pub res_actual: String,
    pub load_forecast: String,
    pub res_forecast: String,
    pub dst: DstPolicy,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        Self {
            timestamp: "timestamp".into(),
            timestamp_format: "%Y-%m-%d %H:%M".into(),
            da_price: Series::Da.name().into(),
            id3_price: Series::Id.name().into(),
            load_actual: Series::Load.name().into(),
            res_actual: Series::Res.name().into(),
            load_forecast: Series::LoadForecast.name().into(),
            res_forecast: Series::ResForecast.name().into(),
            dst: DstPolicy::Eu,
        }
    }
}

impl ColumnMapping {
    fn column_for(&self, s: Series) -> &str {
        match s {
            Series::Res => &self.res_actual,
            Series::Load => &self.load_actual,
            Series::Da => &self.da_price,
            Series::Id => &self.id3_price,
            Series::LoadForecast => &self.load_forecast,
            Series::ResForecast => &self.res_forecast,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadedPanel {
    pub panel: HourlyPanel,
    /// (day, hour) cells where at least one series was interpolated.
    pub imputed_cells: usize,
    /// Cells filled or averaged by the DST policy.
    pub dst_adjusted_cells: usize,
}

pub fn load_panel(path: impl AsRef<Path>, mapping: &ColumnMapping) -> Result<LoadedPanel, MarketDataError> {
    read_panel(File::open(path)?, mapping)
}

type Row = [Option<f64>; 6];

pub fn read_panel<R: Read>(reader: R, mapping: &ColumnMapping) -> Result<LoadedPanel, MarketDataError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| MarketDataError::MissingColumn(name.to_string()))
    };
    let ts_col = find(&mapping.timestamp)?;
    let mut value_cols = [0usize; 6];
    for s in Series::ALL {
        value_cols[s.index()] = find(mapping.column_for(s))?;
    }

    let mut cells: BTreeMap<(NaiveDate, u8), Vec<Row>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let raw_ts = rec.get(ts_col).unwrap_or("");
        let ts = NaiveDateTime::parse_from_str(raw_ts, &mapping.timestamp_format)
            .ok()
            .filter(|t| t.minute() == 0 && t.second() == 0)
            .ok_or_else(|| MarketDataError::UnparseableTimestamp { line, value: raw_ts.to_string() })?;
        let mut row: Row = [None; 6];
        for s in Series::ALL {
            let raw = rec.get(value_cols[s.index()]).unwrap_or("");
            row[s.index()] = parse_value(raw).map_err(|_| MarketDataError::UnparseableValue {
                line,
                column: mapping.column_for(s).to_string(),
                value: raw.to_string(),
            })?;
        }
        cells.entry((ts.date(), ts.hour() as u8 + 1)).or_default().push(row);
    }

    let first = cells.keys().next().ok_or(MarketDataError::Empty)?.0;
    let last = cells.keys().next_back().ok_or(MarketDataError::Empty)?.0;
    let n_days = (last - first).num_days() as usize + 1;
    let mut grid: Vec<Row> = vec![[None; 6]; n_days * HOURS];
    let mut dst_adjusted = 0;

    for (&(date, hour), rows) in &cells {
        let idx = (date - first).num_days() as usize * HOURS + hour as usize - 1;
        grid[idx] = match rows.as_slice() {
            [one] => *one,
            [a, b] if mapping.dst == DstPolicy::Eu && hour == 3 && is_autumn_switch(date) => {
                dst_adjusted += 1;
                std::array::from_fn(|i| match (a[i], b[i]) {
                    (Some(x), Some(y)) => Some(0.5 * (x + y)),
                    (x, y) => x.or(y),
                })
            }
            _ => return Err(MarketDataError::DuplicateTimestamp { date, hour }),
        };
    }

    if mapping.dst == DstPolicy::Eu {
        for day in 0..n_days {
            let date = first + Duration::days(day as i64);
            if is_spring_switch(date) && !cells.contains_key(&(date, 3)) {
                if let Some(prev) = cells.get(&(date, 2)) {
                    grid[day * HOURS + 2] = prev[0];
                    dst_adjusted += 1;
                }
            }
        }
    }

    let mut imputed = vec![false; grid.len()];
    let mut columns: [Vec<f64>; 6] = Default::default();
    for s in Series::ALL {
        let raw: Vec<Option<f64>> = grid.iter().map(|r| r[s.index()]).collect();
        columns[s.index()] = interpolate(&raw, &mut imputed).map_err(|(start, len)| MarketDataError::GapTooLarge {
            column: mapping.column_for(s).to_string(),
            date: first + Duration::days((start / HOURS) as i64),
            hour: (start % HOURS + 1) as u8,
            len,
        })?;
    }

    let panel = HourlyPanel::from_columns(first, columns)?;
    Ok(LoadedPanel { panel, imputed_cells: imputed.iter().filter(|&&b| b).count(), dst_adjusted_cells: dst_adjusted })
}

fn parse_value(raw: &str) -> Result<Option<f64>, std::num::ParseFloatError> {
    if raw.is_empty() || raw.eq_ignore_ascii_case("na") || raw.eq_ignore_ascii_case("null") {
        return Ok(None);
    }
    let v: f64 = raw.parse()?;
    Ok(v.is_finite().then_some(v))
}

/// Linear interpolation across runs of `None` no longer than
/// [`MAX_GAP_HOURS`]. Runs touching either end take the nearest value.
/// On failure returns (start index, run length).
fn interpolate(raw: &[Option<f64>], imputed: &mut [bool]) -> Result<Vec<f64>, (usize, usize)> {
    let n = raw.len();
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        if let Some(v) = raw[i] {
            out[i] = v;
            i += 1;
            continue;
        }
        let start = i;
        while i < n && raw[i].is_none() {
            i += 1;
        }
        let len = i - start;
        if len > MAX_GAP_HOURS {
            return Err((start, len));
        }
        let left = start.checked_sub(1).and_then(|j| raw[j]);
        let right = if i < n { raw[i] } else { None };
        for (k, slot) in out[start..i].iter_mut().enumerate() {
            *slot = match (left, right) {
                (Some(a), Some(b)) => a + (b - a) * (k + 1) as f64 / (len + 1) as f64,
                (Some(a), None) => a,
                (None, Some(b)) => b,
                (None, None) => return Err((start, len)),
            };
        }
        imputed[start..i].iter_mut().for_each(|f| *f = true);
    }
    Ok(out)
}

fn last_sunday(year: i32, month: u32) -> NaiveDate {
    let mut d = NaiveDate::from_ymd_opt(year, month, 31).expect("March and October have 31 days");
    while d.weekday() != Weekday::Sun {
        d = d.pred_opt().expect("valid date");
    }
    d
}

fn is_spring_switch(date: NaiveDate) -> bool {
    date.month() == 3 && date == last_sunday(date.year(), 3)
}

fn is_autumn_switch(date: NaiveDate) -> bool {
    date.month() == 10 && date == last_sunday(date.year(), 10)
}

/// Writes the panel as CSV with one row per (date, hour), 24 rows per day.
pub fn write_panel<W: Write>(panel: &HourlyPanel, writer: W, mapping: &ColumnMapping) -> Result<(), MarketDataError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![mapping.timestamp.as_str()];
    header.extend(Series::ALL.iter().map(|&s| mapping.column_for(s)));
    w.write_record(&header)?;
    let mut record: Vec<String> = Vec::with_capacity(7);
    for day in 0..panel.n_days() {
        let date = panel.date(day);
        for hour in 1..=HOURS as u8 {
            record.clear();
            let ts = date.and_hms_opt(hour as u32 - 1, 0, 0).expect("valid hour");
            record.push(ts.format(&mapping.timestamp_format).to_string());
            for s in Series::ALL {
                record.push(format!("{}", panel.value(s, day, hour)));
            }
            w.write_record(&record)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_for(days: &[NaiveDate], skip: &[(NaiveDate, u32)], extra: &[(NaiveDate, u32, f64)]) -> String {
        let mut s = String::from("timestamp,da_price,id3_price,load_actual,res_actual,load_forecast,res_forecast\n");
        for &d in days {
            for h in 0..24u32 {
                if skip.contains(&(d, h)) {
                    continue;
                }
                let v = h as f64;
                s += &format!("{} {:02}:00,{},{},{},{},{},{}\n", d, h, 30.0 + v, 31.0 + v, 50.0 + v, 10.0, 49.0, 9.0);
                for &(ed, eh, ev) in extra {
                    if ed == d && eh == h {
                        s += &format!("{} {:02}:00,{},{},{},{},{},{}\n", d, h, ev, ev, 50.0, 10.0, 49.0, 9.0);
                    }
                }
            }
        }
        s
    }

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    #[test]
    fn dense_file_loads_without_imputation() {
        let days: Vec<_> = (0..3).map(|i| date(2018, 1, 1) + Duration::days(i)).collect();
        let lp = read_panel(csv_for(&days, &[], &[]).as_bytes(), &ColumnMapping::default()).unwrap();
        assert_eq!(lp.panel.n_days(), 3);
        assert_eq!(lp.imputed_cells, 0);
        assert_eq!(lp.panel.value(Series::Da, 1, 5), 34.0);
    }

    #[test]
    fn single_missing_hour_is_interpolated() {
        let days: Vec<_> = (0..3).map(|i| date(2018, 1, 1) + Duration::days(i)).collect();
        let lp = read_panel(csv_for(&days, &[(days[1], 5)], &[]).as_bytes(), &ColumnMapping::default()).unwrap();
        assert_eq!(lp.imputed_cells, 1);
        // neighbours are 34 and 36
        assert_eq!(lp.panel.value(Series::Da, 1, 6), 35.0);
    }

    #[test]
    fn long_gap_is_an_error() {
        let days: Vec<_> = (0..4).map(|i| date(2018, 1, 1) + Duration::days(i)).collect();
        let skip: Vec<_> = (0..24).map(|h| (days[1], h)).chain([(days[2], 0)]).collect();
        let err = read_panel(csv_for(&days, &skip, &[]).as_bytes(), &ColumnMapping::default()).unwrap_err();
        assert!(matches!(err, MarketDataError::GapTooLarge { len: 25, .. }), "{err}");
    }

    #[test]
    fn missing_column_is_named() {
        let text = "timestamp,da_price,load_actual,res_actual,load_forecast,res_forecast\n2018-01-01 00:00,1,1,1,1,1\n";
        match read_panel(text.as_bytes(), &ColumnMapping::default()) {
            Err(MarketDataError::MissingColumn(c)) => assert_eq!(c, "id3_price"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_timestamp_and_duplicates() {
        let text =
            "timestamp,da_price,id3_price,load_actual,res_actual,load_forecast,res_forecast\nyesterday,1,1,1,1,1,1\n";
        assert!(matches!(
            read_panel(text.as_bytes(), &ColumnMapping::default()),
            Err(MarketDataError::UnparseableTimestamp { .. })
        ));
        let days = [date(2018, 1, 1)];
        let dup = csv_for(&days, &[], &[(days[0], 7, 99.0)]);
        assert!(matches!(
            read_panel(dup.as_bytes(), &ColumnMapping::default()),
            Err(MarketDataError::DuplicateTimestamp { hour: 8, .. })
        ));
    }

    #[test]
    fn eu_dst_days() {
        // 2018-03-25 and 2018-10-28 are the switch Sundays
        let spring = date(2018, 3, 25);
        let autumn = date(2018, 10, 28);
        assert!(is_spring_switch(spring) && is_autumn_switch(autumn));
        assert!(!is_spring_switch(date(2018, 3, 18)));

        let text = csv_for(&[spring], &[(spring, 2)], &[]);
        let lp = read_panel(text.as_bytes(), &ColumnMapping::default()).unwrap();
        assert_eq!(lp.imputed_cells, 0);
        assert_eq!(lp.dst_adjusted_cells, 1);
        assert_eq!(lp.panel.value(Series::Da, 0, 3), lp.panel.value(Series::Da, 0, 2));

        let text = csv_for(&[autumn], &[], &[(autumn, 2, 40.0)]);
        let lp = read_panel(text.as_bytes(), &ColumnMapping::default()).unwrap();
        assert_eq!(lp.dst_adjusted_cells, 1);
        assert_eq!(lp.panel.value(Series::Da, 0, 3), 0.5 * (32.0 + 40.0));

        let strict = ColumnMapping { dst: DstPolicy::None, ..ColumnMapping::default() };
        assert!(read_panel(text.as_bytes(), &strict).is_err());
    }

    #[test]
    fn write_then_read_is_bit_exact() {
        let start = date(2019, 2, 1);
        let panel = HourlyPanel::from_fn(start, 3, |d, h| {
            let x = (d * 24 + h as usize) as f64;
            [x.sqrt(), 40.0 + 1.0 / x, -x / 7.0, x.ln_1p() * 3.3, 41.0 + x * 1e-7, 0.1 * x]
        })
        .unwrap();
        let mut buf = Vec::new();
        write_panel(&panel, &mut buf, &ColumnMapping::default()).unwrap();
        let back = read_panel(buf.as_slice(), &ColumnMapping::default()).unwrap();
        assert_eq!(back.panel, panel);
    }
}
