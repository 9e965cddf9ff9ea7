use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::BacktestError;
use crate::market_data::{HourlyPanel, InformationSet, MAX_LAG};
use crate::strategies::{GGrid, Strategy, DEFAULT_VAR_TAU};
use crate::svar::{VarSpec, MIN_DRAWS, MIN_FIT_DAYS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BacktestConfig {
    /// Length of the trailing estimation window, in days.
    pub calibration_days: usize,
    pub evaluation_days: usize,
    /// First evaluation day; defaults to the last `evaluation_days` days.
    pub evaluation_start: Option<NaiveDate>,
    pub strategies: Vec<Strategy>,
    /// Bootstrap draws per (day, hour) cell.
    pub n_draws: usize,
    pub master_seed: u64,
    /// Refit every k evaluation days; models are reused in between.
    pub refit_every: usize,
    /// Abort when more than this share of cells needs a fallback model.
    pub max_failure_share: f64,
    /// Worker threads; `None` uses all cores.
    pub threads: Option<usize>,
    pub g_grid: GGrid,
    /// Quantile levels computed for every scenario fan.
    pub taus: Vec<f64>,
    /// Quantile level maximized by the VaR strategy.
    pub var_tau: f64,
    pub var_spec: VarSpec,
    pub info_set: InformationSet,
    /// Bartlett truncation for Diebold–Mariano; `None` is `⌊T^{1/3}⌋`.
    pub dm_bandwidth: Option<usize>,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            calibration_days: 731,
            evaluation_days: 730,
            evaluation_start: None,
            strategies: Strategy::ALL.to_vec(),
            n_draws: 1000,
            master_seed: 20_190_101,
            refit_every: 1,
            max_failure_share: 0.01,
            threads: None,
            g_grid: GGrid::default(),
            taus: vec![DEFAULT_VAR_TAU],
            var_tau: DEFAULT_VAR_TAU,
            var_spec: VarSpec::default(),
            info_set: InformationSet::default(),
            dm_bandwidth: None,
        }
    }
}

/// Evaluation days as panel indices, `start..start + n_days`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvaluationRange {
    pub start: usize,
    pub n_days: usize,
}

impl EvaluationRange {
    pub fn days(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.n_days
    }
}

impl BacktestConfig {
    /// Checks the configuration on its own.
    pub fn validate(&self) -> Result<(), BacktestError> {
        let bad = |m: String| Err(BacktestError::Config(m));
        if self.calibration_days < MIN_FIT_DAYS {
            return bad(format!("calibration_days {} below {MIN_FIT_DAYS}", self.calibration_days));
        }
        if self.evaluation_days == 0 {
            return bad("evaluation_days must be positive".into());
        }
        if self.strategies.is_empty() {
            return bad("no strategies selected".into());
        }
        let mut seen = self.strategies.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.strategies.len() {
            return bad("strategies listed more than once".into());
        }
        if self.n_draws < MIN_DRAWS {
            return bad(format!("n_draws {} below {MIN_DRAWS}", self.n_draws));
        }
        if self.refit_every == 0 {
            return bad("refit_every must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.max_failure_share) {
            return bad("max_failure_share must lie in [0, 1]".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        if self.taus.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
            return bad("taus must lie in (0, 1)".into());
        }
        if self.strategies.contains(&Strategy::MaxVar) && !self.taus.iter().any(|t| (t - self.var_tau).abs() <= 1e-12) {
            return bad(format!("var_tau {} missing from taus", self.var_tau));
        }
        Ok(())
    }

    /// Resolves the evaluation days against a panel.
    pub fn evaluation_range(&self, panel: &HourlyPanel) -> Result<EvaluationRange, BacktestError> {
        self.validate()?;
        let n = panel.n_days();
        let start = match self.evaluation_start {
            Some(date) => panel
                .day_index(date)
                .ok_or_else(|| BacktestError::Config(format!("evaluation_start {date} outside the panel")))?,
            None => n.checked_sub(self.evaluation_days).ok_or_else(|| {
                BacktestError::Config(format!(
                    "panel has {n} days, fewer than evaluation_days {}",
                    self.evaluation_days
                ))
            })?,
        };
        if start + self.evaluation_days > n {
            return Err(BacktestError::Config(format!(
                "evaluation span of {} days from day {start} exceeds the {n}-day panel",
                self.evaluation_days
            )));
        }
        if start < self.calibration_days {
            return Err(BacktestError::Config(format!(
                "evaluation starts on day {start}, before a full {}-day calibration window",
                self.calibration_days
            )));
        }
        let usable = start - (start - self.calibration_days).max(MAX_LAG);
        if usable < MIN_FIT_DAYS {
            return Err(BacktestError::Config(format!(
                "first calibration window has {usable} days with lag history, need {MIN_FIT_DAYS}"
            )));
        }
        Ok(EvaluationRange { start, n_days: self.evaluation_days })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn panel(n: usize) -> HourlyPanel {
        let start = NaiveDate::from_ymd_opt(2015, 1, 1).unwrap();
        HourlyPanel::from_fn(start, n, |_, _| [1.0, 50.0, 30.0, 30.0, 50.0, 1.0]).unwrap()
    }

    #[test]
    fn default_protocol_on_four_years() {
        let r = BacktestConfig::default().evaluation_range(&panel(1461)).unwrap();
        assert_eq!(r, EvaluationRange { start: 731, n_days: 730 });
        assert!(BacktestConfig::default().evaluation_range(&panel(1460)).is_err());
    }

    #[test]
    fn explicit_start() {
        let p = panel(400);
        let cfg = BacktestConfig {
            calibration_days: 250,
            evaluation_days: 100,
            evaluation_start: Some(p.date(260)),
            ..Default::default()
        };
        assert_eq!(cfg.evaluation_range(&p).unwrap(), EvaluationRange { start: 260, n_days: 100 });
        let late = BacktestConfig { evaluation_start: Some(p.date(350)), ..cfg.clone() };
        assert!(late.evaluation_range(&p).is_err());
        let early = BacktestConfig { evaluation_start: Some(p.date(240)), ..cfg };
        assert!(early.evaluation_range(&p).is_err());
    }

    #[test]
    fn invalid_settings() {
        let base = BacktestConfig::default();
        for cfg in [
            BacktestConfig { calibration_days: 150, ..base.clone() },
            BacktestConfig { n_draws: 10, ..base.clone() },
            BacktestConfig { strategies: vec![], ..base.clone() },
            BacktestConfig { strategies: vec![Strategy::Da, Strategy::Da], ..base.clone() },
            BacktestConfig { taus: vec![0.01], ..base.clone() },
            BacktestConfig { refit_every: 0, ..base.clone() },
            BacktestConfig { threads: Some(0), ..base.clone() },
        ] {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
        // the VaR level only matters when the VaR strategy runs
        let no_var = BacktestConfig { taus: vec![0.01], strategies: vec![Strategy::Da], ..base };
        assert!(no_var.validate().is_ok());
    }

    #[test]
    fn serde_defaults_fill_missing_fields() {
        let cfg: BacktestConfig = serde_json::from_str(r#"{"n_draws": 500, "strategies": ["da", "sharpe"]}"#).unwrap();
        assert_eq!(cfg.n_draws, 500);
        assert_eq!(cfg.strategies, vec![Strategy::Da, Strategy::MaxSharpe]);
        assert_eq!(cfg.calibration_days, 731);
        assert!(serde_json::from_str::<BacktestConfig>(r#"{"n_drawz": 5}"#).is_err());
    }
}
