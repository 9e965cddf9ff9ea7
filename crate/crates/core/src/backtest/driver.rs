use std::time::Instant;

use chrono::NaiveDate;
use log::{debug, info, warn};
use rayon::prelude::*;

use super::config::{BacktestConfig, EvaluationRange};
use super::{BacktestError, BacktestReport, CellError, DecisionRecord, RunMetadata};
use crate::evaluation::realized_revenue;
use crate::market_data::{HourlyPanel, HOURS};
use crate::seed::cell_seed;
use crate::strategies::{
    choose_g, revenue_distribution, RevenueDistribution, Strategy, StrategyDecision, StrategyError,
};
use crate::svar::{point_forecast, simulate_scenarios, HourDesign, HourModel, ScenarioSet, N_ENDOG};

/// Everything computed for one (day, hour) cell, handed to an observer.
#[derive(Debug)]
pub struct CellTrace<'a> {
    pub date: NaiveDate,
    /// Panel index of the delivery day.
    pub day: usize,
    pub hour: u8,
    pub model: &'a HourModel,
    pub y_point: [f64; N_ENDOG],
    pub scenario: &'a ScenarioSet,
    pub distribution: &'a RevenueDistribution,
    /// In the order of the configured strategies.
    pub decisions: &'a [StrategyDecision],
}

pub fn run_backtest(panel: &HourlyPanel, config: &BacktestConfig) -> Result<BacktestReport, BacktestError> {
    run_backtest_with_observer(panel, config, |_| {})
}

/// Like [`run_backtest`], calling `observer` once per (day, hour) cell. The
/// call order across hours is unspecified.
pub fn run_backtest_with_observer<F>(
    panel: &HourlyPanel,
    config: &BacktestConfig,
    observer: F,
) -> Result<BacktestReport, BacktestError>
where
    F: Fn(&CellTrace<'_>) + Sync,
{
    let started = Instant::now();
    let range = config.evaluation_range(panel)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = config.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| BacktestError::ThreadPool(e.to_string()))?;
    let threads = pool.current_num_threads();
    info!(
        "backtest: {} evaluation days from {}, {} draws, {} threads",
        range.n_days,
        panel.date(range.start),
        config.n_draws,
        threads
    );

    let hours: Vec<Vec<DecisionRecord>> = pool.install(|| {
        (1..=HOURS as u8)
            .into_par_iter()
            .map(|hour| run_hour(panel, config, range, hour, &observer))
            .collect::<Result<_, _>>()
    })?;

    let records: Vec<DecisionRecord> = hours.into_iter().flatten().collect();
    let mut report = BacktestReport::from_decisions(records, &config.strategies, config.dm_bandwidth)?;
    let total = range.n_days * HOURS;
    if report.failed_cells.len() as f64 > config.max_failure_share * total as f64 {
        return Err(BacktestError::Aborted { failed: report.failed_cells.len(), total });
    }
    report.run = RunMetadata { runtime_seconds: started.elapsed().as_secs_f64(), threads };
    info!("backtest finished in {:.1}s", report.run.runtime_seconds);
    Ok(report)
}

fn run_hour<F>(
    panel: &HourlyPanel,
    config: &BacktestConfig,
    range: EvaluationRange,
    hour: u8,
    observer: &F,
) -> Result<Vec<DecisionRecord>, BacktestError>
where
    F: Fn(&CellTrace<'_>) + Sync,
{
    let cell_err = |day: usize, source: CellError| BacktestError::CellFailed { date: panel.date(day), hour, source };
    let design = HourDesign::build(panel, hour, &config.var_spec, &config.info_set)
        .map_err(|e| cell_err(range.start, e.into()))?;
    let rho = config.var_spec.rho();
    let mut out = Vec::with_capacity(range.n_days * config.strategies.len());
    let mut model: Option<HourModel> = None;
    let mut decisions = Vec::with_capacity(config.strategies.len());

    for (k, day) in range.days().enumerate() {
        let mut reused = false;
        if k % config.refit_every == 0 {
            match design.fit(day - config.calibration_days..=day - 1) {
                Ok(m) => model = Some(m),
                Err(e) if model.is_some() => {
                    warn!("{} hour {hour}: refit failed ({e}), reusing previous model", panel.date(day));
                    reused = true;
                }
                Err(e) => return Err(cell_err(day, e.into())),
            }
        }
        let m = model.as_ref().expect("fitted above");
        let date = panel.date(day);
        let y_point = point_forecast(m, panel, day, &config.info_set).map_err(|e| cell_err(day, e.into()))?;
        let scenario = simulate_scenarios(m, y_point, config.n_draws, cell_seed(config.master_seed, date, hour))
            .map_err(|e| cell_err(day, e.into()))?;
        let dist =
            revenue_distribution(&scenario, &config.g_grid, &config.taus).map_err(|e| cell_err(day, e.into()))?;

        decisions.clear();
        for &s in &config.strategies {
            let d = match choose_g(&dist, s, config.var_tau) {
                Err(StrategyError::UndefinedObjective) if s == Strategy::MaxSharpe => {
                    debug!("{date} hour {hour}: no dispersion, Sharpe falls back to mean revenue");
                    let p =
                        choose_g(&dist, Strategy::MaxProfit, config.var_tau).map_err(|e| cell_err(day, e.into()))?;
                    StrategyDecision { strategy: s, ..p }
                }
                r => r.map_err(|e| cell_err(day, e.into()))?,
            };
            decisions.push(d);
        }
        for d in &decisions {
            let realized = realized_revenue(panel, d, day, hour, rho).map_err(|e| cell_err(day, e.into()))?;
            out.push(DecisionRecord {
                date,
                hour,
                strategy: d.strategy,
                g_star: d.g_star,
                predicted_revenue: d.predicted_revenue,
                realized_revenue: realized,
                sharpe: d.sharpe,
                var5: d.var5,
                model_reused: reused,
            });
        }
        observer(&CellTrace {
            date,
            day,
            hour,
            model: m,
            y_point,
            scenario: &scenario,
            distribution: &dist,
            decisions: &decisions,
        });
    }
    Ok(out)
}
