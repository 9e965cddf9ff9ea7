//! Realized revenues, accuracy and risk aggregates, and Diebold–Mariano
//! comparisons between strategies.

mod dm;

pub use dm::{dm_from_differential, dm_test, pvalue_matrix, DmResult, LossKind, PValueCell, PValueMatrix, MIN_DM_DAYS};

use chrono::NaiveDate;
use serde::Serialize;
use thiserror::Error;

use crate::market_data::{HourlyPanel, Series, HOURS};
use crate::strategies::{empirical_quantile, Strategy, StrategyDecision};
use crate::svar::generation_mwh;

#[derive(Debug, Error, PartialEq)]
pub enum EvaluationError {
    #[error("no usable actuals for {date} hour {hour}")]
    MissingActuals { date: NaiveDate, hour: u8 },

    #[error("incomplete evaluation grid: {0}")]
    IncompleteGrid(String),

    #[error("benchmark {metric} is zero; relative change undefined")]
    ZeroBenchmark { metric: &'static str },

    #[error("Diebold-Mariano test needs at least {min} days, got {n}")]
    TooFewDays { n: usize, min: usize },

    #[error("loss grids differ in length: {a} vs {b} days")]
    LengthMismatch { a: usize, b: usize },

    #[error("loss differential is {}", if *identical { "identically zero" } else { "constant" })]
    DegenerateDifferential { identical: bool },

    #[error("need at least two strategies, got {0}")]
    TooFewStrategies(usize),
}

/// Revenue at realized prices and generation:
/// `g·Ĝ·DA + (G − g·Ĝ)·ID`, with `Ĝ` fixed at decision time.
pub fn realized_revenue(
    panel: &HourlyPanel,
    decision: &StrategyDecision,
    day: usize,
    hour: u8,
    rho: f64,
) -> Result<f64, EvaluationError> {
    if day >= panel.n_days() || !(1..=HOURS as u8).contains(&hour) {
        let date = panel.start_date() + chrono::Days::new(day as u64);
        return Err(EvaluationError::MissingActuals { date, hour });
    }
    let res = panel.value(Series::Res, day, hour);
    let da = panel.value(Series::Da, day, hour);
    let id = panel.value(Series::Id, day, hour);
    if !(res.is_finite() && da.is_finite() && id.is_finite()) {
        return Err(EvaluationError::MissingActuals { date: panel.date(day), hour });
    }
    let offered = decision.g_star * decision.g_hat;
    Ok(offered * da + (generation_mwh(rho, res) - offered) * id)
}

/// One evaluated (day, hour, strategy) cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellOutcome {
    pub date: NaiveDate,
    pub hour: u8,
    pub strategy: Strategy,
    pub g_star: f64,
    pub realized_revenue: f64,
    pub predicted_revenue: f64,
}

impl CellOutcome {
    /// Revenue forecast error, realized minus predicted.
    pub fn error(&self) -> f64 {
        self.realized_revenue - self.predicted_revenue
    }
}

/// Aggregates for one strategy over a complete days × 24 grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyOutcome {
    pub strategy: Strategy,
    pub n_days: usize,
    pub mean_revenue: f64,
    pub rmse: f64,
    pub mae: f64,
    pub var_1pct: f64,
    pub var_5pct: f64,
    #[serde(skip)]
    pub dates: Vec<NaiveDate>,
    #[serde(skip)]
    pub realized: Vec<[f64; HOURS]>,
    #[serde(skip)]
    pub predicted: Vec<[f64; HOURS]>,
    #[serde(skip)]
    pub g_star: Vec<[f64; HOURS]>,
}

impl StrategyOutcome {
    pub fn errors(&self) -> Vec<[f64; HOURS]> {
        self.realized.iter().zip(&self.predicted).map(|(r, p)| std::array::from_fn(|h| r[h] - p[h])).collect()
    }
}

/// Mean over hours of the per-hour `tau`-quantile across days.
fn hourly_var(grid: &[[f64; HOURS]], tau: f64) -> f64 {
    let mut buf = vec![0.0; grid.len()];
    let mut total = 0.0;
    for h in 0..HOURS {
        for (slot, row) in buf.iter_mut().zip(grid) {
            *slot = row[h];
        }
        total += empirical_quantile(&mut buf, tau);
    }
    total / HOURS as f64
}

/// Aggregates the cells of a single strategy. Every listed date must carry
/// all 24 hours exactly once.
pub fn aggregate_outcome(cells: &[CellOutcome]) -> Result<StrategyOutcome, EvaluationError> {
    let first = cells.first().ok_or_else(|| EvaluationError::IncompleteGrid("no cells".into()))?;
    let strategy = first.strategy;
    if cells.iter().any(|c| c.strategy != strategy) {
        return Err(EvaluationError::IncompleteGrid("cells mix several strategies".into()));
    }
    let mut sorted: Vec<&CellOutcome> = cells.iter().collect();
    sorted.sort_by_key(|c| (c.date, c.hour));
    let mut dates = Vec::new();
    let mut realized = Vec::new();
    let mut predicted = Vec::new();
    let mut g_star = Vec::new();
    for chunk in sorted.chunks(HOURS) {
        let date = chunk[0].date;
        let complete =
            chunk.len() == HOURS && chunk.iter().enumerate().all(|(i, c)| c.date == date && c.hour as usize == i + 1);
        if !complete {
            return Err(EvaluationError::IncompleteGrid(format!("{date} does not have hours 1..=24 exactly once")));
        }
        dates.push(date);
        realized.push(std::array::from_fn(|h| chunk[h].realized_revenue));
        predicted.push(std::array::from_fn(|h| chunk[h].predicted_revenue));
        g_star.push(std::array::from_fn(|h| chunk[h].g_star));
    }
    if dates.windows(2).any(|w| w[0] == w[1]) {
        return Err(EvaluationError::IncompleteGrid("duplicate date".into()));
    }

    let n = sorted.len() as f64;
    let mean_revenue = sorted.iter().map(|c| c.realized_revenue).sum::<f64>() / n;
    let rmse = (sorted.iter().map(|c| c.error().powi(2)).sum::<f64>() / n).sqrt();
    let mae = sorted.iter().map(|c| c.error().abs()).sum::<f64>() / n;
    Ok(StrategyOutcome {
        strategy,
        n_days: dates.len(),
        mean_revenue,
        rmse,
        mae,
        var_1pct: hourly_var(&realized, 0.01),
        var_5pct: hourly_var(&realized, 0.05),
        dates,
        realized,
        predicted,
        g_star,
    })
}

/// Percentage changes `100·(x − x_bench)/|x_bench|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelativeOutcome {
    pub mean_revenue: f64,
    pub rmse: f64,
    pub mae: f64,
    pub var_1pct: f64,
    pub var_5pct: f64,
}

pub fn relative_to_benchmark(
    outcome: &StrategyOutcome,
    benchmark: &StrategyOutcome,
) -> Result<RelativeOutcome, EvaluationError> {
    let pct = |x: f64, b: f64, metric: &'static str| {
        if b == 0.0 {
            Err(EvaluationError::ZeroBenchmark { metric })
        } else {
            Ok(100.0 * (x - b) / b.abs())
        }
    };
    Ok(RelativeOutcome {
        mean_revenue: pct(outcome.mean_revenue, benchmark.mean_revenue, "mean_revenue")?,
        rmse: pct(outcome.rmse, benchmark.rmse, "rmse")?,
        mae: pct(outcome.mae, benchmark.mae, "mae")?,
        var_1pct: pct(outcome.var_1pct, benchmark.var_1pct, "var_1pct")?,
        var_5pct: pct(outcome.var_5pct, benchmark.var_5pct, "var_5pct")?,
    })
}
