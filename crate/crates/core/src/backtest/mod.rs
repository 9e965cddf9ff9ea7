//! Rolling-window backtest: per-hour refits, scenario fans, strategy
//! decisions, realized revenues and the report artifacts.

mod config;
mod driver;
mod report;

pub use config::{BacktestConfig, EvaluationRange};
pub use driver::{run_backtest, run_backtest_with_observer, CellTrace};
pub use report::{config_hash, write_manifest, write_report, Manifest, REPORT_FILES};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation::{
    aggregate_outcome, pvalue_matrix, relative_to_benchmark, CellOutcome, EvaluationError, LossKind, PValueMatrix,
    RelativeOutcome, StrategyOutcome, MIN_DM_DAYS,
};
use crate::market_data::HOURS;
use crate::strategies::{Strategy, StrategyError};
use crate::svar::SvarError;

#[derive(Debug, Error)]
pub enum CellError {
    #[error(transparent)]
    Svar(#[from] SvarError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Evaluation(#[from] EvaluationError),
}

#[derive(Debug, Error)]
pub enum BacktestError {
    #[error("invalid backtest configuration: {0}")]
    Config(String),

    #[error("{date} hour {hour}: {source}")]
    CellFailed {
        date: NaiveDate,
        hour: u8,
        #[source]
        source: CellError,
    },

    #[error("aborted: {failed} of {total} cells needed a fallback model")]
    Aborted { failed: usize, total: usize },

    #[error("cannot start worker pool: {0}")]
    ThreadPool(String),

    #[error("empty decision log")]
    EmptyLog,

    #[error("decision log mixes strategies")]
    MixedLog,

    #[error(transparent)]
    Evaluation(#[from] EvaluationError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// One strategy's choice for one (day, hour) and its outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub date: NaiveDate,
    pub hour: u8,
    pub strategy: Strategy,
    pub g_star: f64,
    pub predicted_revenue: f64,
    pub realized_revenue: f64,
    pub sharpe: Option<f64>,
    pub var5: Option<f64>,
    /// The refit for this cell failed and the previous model was used.
    pub model_reused: bool,
}

/// How a strategy splits generation between the markets, in percent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GDistribution {
    pub strategy: Strategy,
    pub mean_g: f64,
    pub share_g0: f64,
    pub share_interior: f64,
    pub share_g1: f64,
    /// Mean g per delivery hour 1..=24, in percent.
    pub hourly_means: [f64; HOURS],
}

/// Summary of a single strategy's decision log.
pub fn g_distribution(log: &[DecisionRecord]) -> Result<GDistribution, BacktestError> {
    let strategy = log.first().ok_or(BacktestError::EmptyLog)?.strategy;
    if log.iter().any(|d| d.strategy != strategy) {
        return Err(BacktestError::MixedLog);
    }
    let n = log.len() as f64;
    let count = |f: &dyn Fn(f64) -> bool| 100.0 * log.iter().filter(|d| f(d.g_star)).count() as f64 / n;
    let mut sums = [0.0; HOURS];
    let mut counts = [0usize; HOURS];
    for d in log {
        sums[d.hour as usize - 1] += d.g_star;
        counts[d.hour as usize - 1] += 1;
    }
    Ok(GDistribution {
        strategy,
        mean_g: 100.0 * log.iter().map(|d| d.g_star).sum::<f64>() / n,
        share_g0: count(&|g| g == 0.0),
        share_interior: count(&|g| g > 0.0 && g < 1.0),
        share_g1: count(&|g| g == 1.0),
        hourly_means: std::array::from_fn(
            |h| if counts[h] == 0 { f64::NAN } else { 100.0 * sums[h] / counts[h] as f64 },
        ),
    })
}

pub const G_HISTOGRAM_BINS: usize = 10;

/// Counts of g in ten equal bins over [0, 1]; the last bin is closed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GHistogram {
    pub strategy: Strategy,
    pub counts: [usize; G_HISTOGRAM_BINS],
}

pub fn g_histogram(log: &[DecisionRecord]) -> Result<GHistogram, BacktestError> {
    let strategy = log.first().ok_or(BacktestError::EmptyLog)?.strategy;
    let mut counts = [0; G_HISTOGRAM_BINS];
    for d in log {
        if d.strategy != strategy {
            return Err(BacktestError::MixedLog);
        }
        let bin = ((d.g_star * G_HISTOGRAM_BINS as f64).floor() as usize).min(G_HISTOGRAM_BINS - 1);
        counts[bin] += 1;
    }
    Ok(GHistogram { strategy, counts })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct RunMetadata {
    pub runtime_seconds: f64,
    pub threads: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FailedCell {
    pub date: NaiveDate,
    pub hour: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BacktestReport {
    pub evaluation_start: NaiveDate,
    pub evaluation_end: NaiveDate,
    pub n_days: usize,
    pub strategies: Vec<Strategy>,
    /// Sorted by (date, hour, strategy).
    #[serde(skip)]
    pub decisions: Vec<DecisionRecord>,
    pub outcomes: Vec<StrategyOutcome>,
    /// Percentage changes against the DA strategy; `None` when DA was not run
    /// or a benchmark metric is zero.
    pub relative_to_da: Vec<Option<RelativeOutcome>>,
    pub pvalues: Vec<PValueMatrix>,
    pub g_distributions: Vec<GDistribution>,
    pub g_histograms: Vec<GHistogram>,
    /// Refits that failed; the previous model was used instead.
    pub failed_cells: Vec<FailedCell>,
    /// Cells where the Sharpe strategy fell back to the profit choice.
    pub sharpe_fallbacks: usize,
    #[serde(skip)]
    pub run: RunMetadata,
}

impl BacktestReport {
    /// Aggregates a decision log. Strategies keep the order given; p-value
    /// matrices need two strategies and enough days, and are empty otherwise.
    pub fn from_decisions(
        mut decisions: Vec<DecisionRecord>,
        strategies: &[Strategy],
        dm_bandwidth: Option<usize>,
    ) -> Result<Self, BacktestError> {
        if decisions.is_empty() || strategies.is_empty() {
            return Err(BacktestError::EmptyLog);
        }
        decisions.sort_by_key(|r| (r.date, r.hour, r.strategy));
        let mut outcomes = Vec::with_capacity(strategies.len());
        let mut g_distributions = Vec::with_capacity(strategies.len());
        let mut g_histograms = Vec::with_capacity(strategies.len());
        for &s in strategies {
            let log: Vec<DecisionRecord> = decisions.iter().filter(|d| d.strategy == s).copied().collect();
            let cells: Vec<CellOutcome> = log
                .iter()
                .map(|d| CellOutcome {
                    date: d.date,
                    hour: d.hour,
                    strategy: s,
                    g_star: d.g_star,
                    realized_revenue: d.realized_revenue,
                    predicted_revenue: d.predicted_revenue,
                })
                .collect();
            outcomes.push(aggregate_outcome(&cells)?);
            g_distributions.push(g_distribution(&log)?);
            g_histograms.push(g_histogram(&log)?);
        }
        let n_days = outcomes[0].n_days;
        if outcomes.iter().any(|o| o.n_days != n_days) || decisions.len() != n_days * HOURS * strategies.len() {
            return Err(EvaluationError::IncompleteGrid("strategies cover different cells".into()).into());
        }

        let benchmark = outcomes.iter().find(|o| o.strategy == Strategy::Da);
        let relative_to_da =
            outcomes.iter().map(|o| benchmark.and_then(|b| relative_to_benchmark(o, b).ok())).collect();
        let pvalues = if outcomes.len() >= 2 && n_days >= MIN_DM_DAYS {
            LossKind::ALL.iter().map(|&k| pvalue_matrix(&outcomes, k, dm_bandwidth)).collect::<Result<_, _>>()?
        } else {
            Vec::new()
        };

        let mut failed_cells: Vec<FailedCell> =
            decisions.iter().filter(|d| d.model_reused).map(|d| FailedCell { date: d.date, hour: d.hour }).collect();
        failed_cells.dedup();
        // a Sharpe decision without a ratio is one that fell back
        let sharpe_fallbacks =
            decisions.iter().filter(|d| d.strategy == Strategy::MaxSharpe && d.sharpe.is_none()).count();

        Ok(Self {
            evaluation_start: outcomes[0].dates[0],
            evaluation_end: outcomes[0].dates[n_days - 1],
            n_days,
            strategies: strategies.to_vec(),
            decisions,
            outcomes,
            relative_to_da,
            pvalues,
            g_distributions,
            g_histograms,
            failed_cells,
            sharpe_fallbacks,
            run: RunMetadata::default(),
        })
    }

    pub fn outcome(&self, s: Strategy) -> Option<&StrategyOutcome> {
        self.outcomes.iter().find(|o| o.strategy == s)
    }

    pub fn g_distribution(&self, s: Strategy) -> Option<&GDistribution> {
        self.g_distributions.iter().find(|g| g.strategy == s)
    }

    pub fn decisions_for(&self, s: Strategy) -> impl Iterator<Item = &DecisionRecord> {
        self.decisions.iter().filter(move |d| d.strategy == s)
    }
}
