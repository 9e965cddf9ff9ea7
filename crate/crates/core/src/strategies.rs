//! Revenue distributions over the DA share `g` and the five trading rules.
//!
//! Offering `g·Ĝ` on the day-ahead market and settling the rest of the
//! realized generation intraday yields, per draw,
//! `π(g) = G̃·ID + g·Ĝ·(DA − ID)`, which is affine in `g`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::svar::ScenarioSet;

#[derive(Debug, Error, PartialEq)]
pub enum StrategyError {
    #[error("share g = {0} outside [0, 1]")]
    GOutOfRange(f64),

    #[error("empty g grid")]
    EmptyGrid,

    #[error("invalid g grid: {0}")]
    InvalidGrid(String),

    #[error("quantile level {0} outside (0, 1)")]
    InvalidTau(f64),

    #[error("Sharpe ratio undefined at every grid point (zero revenue dispersion)")]
    UndefinedObjective,

    #[error("quantile level {0} was not computed for this distribution")]
    TauNotAvailable(f64),

    #[error("unknown strategy {0:?}; expected one of da, id, profit, sharpe, var")]
    UnknownStrategy(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Strategy {
    /// Everything on the day-ahead market.
    Da,
    /// Everything intraday.
    Id,
    MaxProfit,
    MaxSharpe,
    /// Maximize the lower revenue quantile.
    MaxVar,
}

impl Strategy {
    pub const ALL: [Strategy; 5] =
        [Strategy::Da, Strategy::Id, Strategy::MaxProfit, Strategy::MaxSharpe, Strategy::MaxVar];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Da => "da",
            Strategy::Id => "id",
            Strategy::MaxProfit => "profit",
            Strategy::MaxSharpe => "sharpe",
            Strategy::MaxVar => "var",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| StrategyError::UnknownStrategy(s.to_string()))
    }
}

impl TryFrom<String> for Strategy {
    type Error = StrategyError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Strategy> for String {
    fn from(s: Strategy) -> Self {
        s.name().to_string()
    }
}

/// Sorted, deduplicated candidate shares in [0, 1], always containing both
/// endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct GGrid(Vec<f64>);

impl GGrid {
    pub fn new(mut values: Vec<f64>) -> Result<Self, StrategyError> {
        if values.is_empty() {
            return Err(StrategyError::EmptyGrid);
        }
        if let Some(&g) = values.iter().find(|g| !(0.0..=1.0).contains(*g)) {
            return Err(StrategyError::GOutOfRange(g));
        }
        values.sort_by(f64::total_cmp);
        values.dedup();
        if values[0] != 0.0 || *values.last().unwrap() != 1.0 {
            return Err(StrategyError::InvalidGrid("grid must contain 0 and 1".into()));
        }
        Ok(Self(values))
    }

    /// `n` equally spaced points from 0 to 1.
    pub fn uniform(n: usize) -> Result<Self, StrategyError> {
        if n < 2 {
            return Err(StrategyError::InvalidGrid(format!("need at least 2 points, got {n}")));
        }
        let last = (n - 1) as f64;
        Self::new((0..n).map(|i| i as f64 / last).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for GGrid {
    fn default() -> Self {
        Self::uniform(101).expect("valid grid")
    }
}

impl TryFrom<Vec<f64>> for GGrid {
    type Error = StrategyError;
    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<GGrid> for Vec<f64> {
    fn from(g: GGrid) -> Self {
        g.0
    }
}

/// Type-7 sample quantile: linear interpolation between adjacent order
/// statistics at position `(n − 1)·tau`. Reorders `values`.
pub fn empirical_quantile(values: &mut [f64], tau: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of an empty sample");
    let h = (values.len() - 1) as f64 * tau;
    let k = h.floor() as usize;
    let frac = h - k as f64;
    let (_, lo, right) = values.select_nth_unstable_by(k, f64::total_cmp);
    let lo = *lo;
    if frac == 0.0 || right.is_empty() {
        return lo;
    }
    let hi = right.iter().copied().fold(f64::INFINITY, f64::min);
    lo + frac * (hi - lo)
}

fn check_tau(tau: f64) -> Result<(), StrategyError> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(StrategyError::InvalidTau(tau))
    }
}

/// Per-draw revenue at share `g`.
pub fn revenue_draws(scen: &ScenarioSet, g: f64) -> Result<Vec<f64>, StrategyError> {
    if !(0.0..=1.0).contains(&g) {
        return Err(StrategyError::GOutOfRange(g));
    }
    let offered = g * scen.g_hat;
    Ok(scen.y_draws.iter().zip(&scen.g_draws).map(|(y, gen)| offered * y[2] + (gen - offered) * y[3]).collect())
}

/// Revenue of every draw at every grid point, `[draw][grid index]`.
pub fn revenue_matrix(scen: &ScenarioSet, grid: &GGrid) -> Vec<Vec<f64>> {
    let (a, c) = decompose(scen);
    a.iter().zip(&c).map(|(a, c)| grid.values().iter().map(|g| a + g * c).collect()).collect()
}

/// `π_b(g) = a_b + g·c_b` with `a_b = G̃_b·ID_b` and `c_b = Ĝ·(DA_b − ID_b)`.
fn decompose(scen: &ScenarioSet) -> (Vec<f64>, Vec<f64>) {
    scen.y_draws.iter().zip(&scen.g_draws).map(|(y, gen)| (gen * y[3], scen.g_hat * (y[2] - y[3]))).unzip()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RevenueDistribution {
    pub g_grid: GGrid,
    pub mean: Vec<f64>,
    /// Population standard deviation across draws.
    pub std: Vec<f64>,
    /// `mean / std`; `None` where the draws have no dispersion.
    pub sharpe: Vec<Option<f64>>,
    /// (tau, quantile per grid point), in the order requested.
    pub var_tau: Vec<(f64, Vec<f64>)>,
    pub g_hat: f64,
}

impl RevenueDistribution {
    pub fn var_at(&self, tau: f64) -> Option<&[f64]> {
        self.var_tau.iter().find(|(t, _)| (t - tau).abs() <= 1e-12).map(|(_, v)| v.as_slice())
    }

    fn index_of(&self, g: f64) -> usize {
        self.g_grid.values().iter().position(|&x| x == g).expect("g on grid")
    }
}

/// Mean, dispersion, Sharpe ratio and lower quantiles of revenue across
/// draws for every candidate share.
pub fn revenue_distribution(
    scen: &ScenarioSet,
    grid: &GGrid,
    taus: &[f64],
) -> Result<RevenueDistribution, StrategyError> {
    if grid.is_empty() {
        return Err(StrategyError::EmptyGrid);
    }
    for &t in taus {
        check_tau(t)?;
    }
    let (a, c) = decompose(scen);
    let n = a.len() as f64;
    let a_mean = a.iter().sum::<f64>() / n;
    let c_mean = c.iter().sum::<f64>() / n;

    let mut mean = Vec::with_capacity(grid.len());
    let mut std = Vec::with_capacity(grid.len());
    let mut sharpe = Vec::with_capacity(grid.len());
    let mut quantiles: Vec<Vec<f64>> = vec![Vec::with_capacity(grid.len()); taus.len()];
    let mut buf = vec![0.0; a.len()];
    for &g in grid.values() {
        let m = a_mean + g * c_mean;
        let mut ss = 0.0;
        let mut scale = 0.0f64;
        for ((slot, a), c) in buf.iter_mut().zip(&a).zip(&c) {
            let v = a + g * c;
            *slot = v;
            ss += (v - m) * (v - m);
            scale = scale.max(v.abs());
        }
        let s = (ss / n).sqrt();
        mean.push(m);
        std.push(s);
        // rounding in the mean leaves ~1e-16 relative dispersion on constant draws
        sharpe.push(if s > 1e-12 * scale { Some(m / s) } else { None });
        for (q, &tau) in quantiles.iter_mut().zip(taus) {
            q.push(empirical_quantile(&mut buf, tau));
        }
    }
    Ok(RevenueDistribution {
        g_grid: grid.clone(),
        mean,
        std,
        sharpe,
        var_tau: taus.iter().copied().zip(quantiles).collect(),
        g_hat: scen.g_hat,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrategyDecision {
    pub strategy: Strategy,
    pub g_star: f64,
    /// Expected utility generation (MWh) at decision time.
    pub g_hat: f64,
    /// Mean simulated revenue at `g_star`.
    pub predicted_revenue: f64,
    pub sharpe: Option<f64>,
    pub var5: Option<f64>,
}

/// First index of the maximum; `None` entries are skipped.
fn argmax<I: IntoIterator<Item = Option<f64>>>(values: I) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        if let Some(v) = v {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
    }
    best.map(|(i, _)| i)
}

pub const DEFAULT_VAR_TAU: f64 = 0.05;

/// Picks `g` for one strategy. Ties go to the smallest share.
pub fn choose_g(dist: &RevenueDistribution, strategy: Strategy, tau: f64) -> Result<StrategyDecision, StrategyError> {
    if dist.g_grid.is_empty() {
        return Err(StrategyError::EmptyGrid);
    }
    let idx = match strategy {
        Strategy::Da => dist.index_of(1.0),
        Strategy::Id => dist.index_of(0.0),
        Strategy::MaxProfit => argmax(dist.mean.iter().map(|&m| Some(m))).expect("non-empty"),
        Strategy::MaxSharpe => argmax(dist.sharpe.iter().copied()).ok_or(StrategyError::UndefinedObjective)?,
        Strategy::MaxVar => {
            let q = dist.var_at(tau).ok_or(StrategyError::TauNotAvailable(tau))?;
            argmax(q.iter().map(|&v| Some(v))).expect("non-empty")
        }
    };
    Ok(StrategyDecision {
        strategy,
        g_star: dist.g_grid.values()[idx],
        g_hat: dist.g_hat,
        predicted_revenue: dist.mean[idx],
        sharpe: dist.sharpe[idx],
        var5: dist.var_at(DEFAULT_VAR_TAU).map(|q| q[idx]),
    })
}
