use serde::Serialize;

use super::panel::{HourlyPanel, Series, HOURS};
use super::MarketDataError;
use crate::econometrics::{adf_test, EconError};

pub const MIN_STATS_DAYS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VariableStats {
    /// Mean of the 24 per-hour means.
    pub mean: f64,
    /// Mean of the 24 per-hour sample standard deviations.
    pub mean_hourly_std: f64,
    /// Hours (0..=24) whose daily series rejects a unit root at 5%.
    pub adf_reject_count: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DescriptiveStats {
    pub res: VariableStats,
    pub load: VariableStats,
    pub da: VariableStats,
    pub id: VariableStats,
}

/// Per-hour summary statistics averaged over the day. Constant hours count
/// as non-rejections.
pub fn descriptive_stats(panel: &HourlyPanel, adf_lag: usize) -> Result<DescriptiveStats, MarketDataError> {
    if panel.n_days() < MIN_STATS_DAYS {
        return Err(MarketDataError::PanelTooShort { days: panel.n_days(), min: MIN_STATS_DAYS });
    }
    let one = |s: Series| -> Result<VariableStats, MarketDataError> {
        let mut mean = 0.0;
        let mut std = 0.0;
        let mut rejects = 0u8;
        for hour in 1..=HOURS as u8 {
            let xs = panel.hour_series(s, hour);
            let n = xs.len() as f64;
            let m = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
            mean += m;
            std += var.sqrt();
            match adf_test(&xs, adf_lag) {
                Ok(r) if r.reject_at_5pct => rejects += 1,
                Ok(_) | Err(EconError::ConstantSeries) | Err(EconError::RankDeficient { .. }) => {}
                Err(e) => {
                    return Err(MarketDataError::Malformed(format!("ADF failed for {} hour {hour}: {e}", s.name())))
                }
            }
        }
        Ok(VariableStats { mean: mean / HOURS as f64, mean_hourly_std: std / HOURS as f64, adf_reject_count: rejects })
    };
    Ok(DescriptiveStats {
        res: one(Series::Res)?,
        load: one(Series::Load)?,
        da: one(Series::Da)?,
        id: one(Series::Id)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn constant_panel() {
        let start = NaiveDate::from_ymd_opt(2016, 1, 1).unwrap();
        let p = HourlyPanel::from_fn(start, 120, |_, _| [7.0, 50.0, 30.0, 31.0, 50.0, 7.0]).unwrap();
        let s = descriptive_stats(&p, 7).unwrap();
        assert_eq!(s.res, VariableStats { mean: 7.0, mean_hourly_std: 0.0, adf_reject_count: 0 });
        assert_eq!(s.da.mean, 30.0);
    }

    #[test]
    fn too_short() {
        let start = NaiveDate::from_ymd_opt(2016, 1, 1).unwrap();
        let p = HourlyPanel::from_fn(start, 99, |_, _| [7.0, 50.0, 30.0, 31.0, 50.0, 7.0]).unwrap();
        assert!(matches!(descriptive_stats(&p, 7), Err(MarketDataError::PanelTooShort { .. })));
    }

    #[test]
    fn stationary_ar1_hours_mostly_reject() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1000;
        let mut series = vec![vec![0.0; n]; HOURS];
        for s in series.iter_mut() {
            for t in 1..n {
                let e: f64 = StandardNormal.sample(&mut rng);
                s[t] = 0.5 * s[t - 1] + e;
            }
        }
        let start = NaiveDate::from_ymd_opt(2016, 1, 1).unwrap();
        let p = HourlyPanel::from_fn(start, n, |d, h| {
            let v = series[h as usize - 1][d];
            [10.0, 50.0, 30.0 + v, 31.0 + v, 50.0, 10.0]
        })
        .unwrap();
        let s = descriptive_stats(&p, 7).unwrap();
        assert!(s.da.adf_reject_count >= 22, "{}", s.da.adf_reject_count);
        assert!((s.da.mean - 30.0).abs() < 0.3);
    }
}
