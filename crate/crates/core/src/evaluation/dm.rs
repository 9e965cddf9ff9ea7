use serde::{Serialize, Serializer};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{EvaluationError, StrategyOutcome};
use crate::market_data::HOURS;
use crate::strategies::Strategy;

pub const MIN_DM_DAYS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// `π(i) − π(j)`; positive favours i.
    Revenue,
    /// `u(i)² − u(j)²`; positive means i is less accurate.
    SquaredError,
    /// `|u(i)| − |u(j)|`.
    AbsoluteError,
}

impl LossKind {
    pub const ALL: [LossKind; 3] = [LossKind::Revenue, LossKind::SquaredError, LossKind::AbsoluteError];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Revenue => "revenue",
            LossKind::SquaredError => "squared_error",
            LossKind::AbsoluteError => "absolute_error",
        }
    }

    fn differential(self, a: f64, b: f64) -> f64 {
        match self {
            LossKind::Revenue => a - b,
            LossKind::SquaredError => a * a - b * b,
            LossKind::AbsoluteError => a.abs() - b.abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DmResult {
    pub statistic: f64,
    /// Upper-tail probability `1 − Φ(statistic)`.
    pub p_value: f64,
    pub loss_kind: LossKind,
    pub n_days: usize,
    pub bandwidth: usize,
}

/// Default Bartlett truncation lag, `⌊T^{1/3}⌋`.
pub fn default_bandwidth(n: usize) -> usize {
    let mut l = (n as f64).cbrt().floor() as usize;
    // guard against cbrt rounding just below an exact cube
    while (l + 1).pow(3) <= n {
        l += 1;
    }
    l
}

/// Bartlett-kernel long-run variance of `d` with truncation `bandwidth`.
fn long_run_variance(d: &[f64], mean: f64, bandwidth: usize) -> f64 {
    let n = d.len();
    let autocov = |k: usize| (k..n).map(|t| (d[t] - mean) * (d[t - k] - mean)).sum::<f64>() / n as f64;
    let mut lrv = autocov(0);
    for k in 1..=bandwidth.min(n - 1) {
        lrv += 2.0 * (1.0 - k as f64 / (bandwidth as f64 + 1.0)) * autocov(k);
    }
    lrv
}

/// DM statistic of a daily loss differential series.
pub fn dm_from_differential(d: &[f64], kind: LossKind, bandwidth: Option<usize>) -> Result<DmResult, EvaluationError> {
    let n = d.len();
    if n < MIN_DM_DAYS {
        return Err(EvaluationError::TooFewDays { n, min: MIN_DM_DAYS });
    }
    if d.iter().all(|&x| x == 0.0) {
        return Err(EvaluationError::DegenerateDifferential { identical: true });
    }
    let mean = d.iter().sum::<f64>() / n as f64;
    let spread = d.iter().map(|x| (x - mean).abs()).fold(0.0, f64::max);
    if spread <= 1e-12 * mean.abs().max(f64::MIN_POSITIVE) {
        return Err(EvaluationError::DegenerateDifferential { identical: false });
    }
    let bandwidth = bandwidth.unwrap_or_else(|| default_bandwidth(n));
    let lrv = long_run_variance(d, mean, bandwidth);
    if lrv <= 0.0 {
        return Err(EvaluationError::DegenerateDifferential { identical: false });
    }
    let statistic = mean / (lrv / n as f64).sqrt();
    let p_value = Normal::standard().sf(statistic);
    Ok(DmResult { statistic, p_value, loss_kind: kind, n_days: n, bandwidth })
}

/// Tests whether `a` exceeds `b` on the daily mean of the hourly
/// differentials. For error kinds the inputs are forecast errors.
pub fn dm_test(
    a: &[[f64; HOURS]],
    b: &[[f64; HOURS]],
    kind: LossKind,
    bandwidth: Option<usize>,
) -> Result<DmResult, EvaluationError> {
    if a.len() != b.len() {
        return Err(EvaluationError::LengthMismatch { a: a.len(), b: b.len() });
    }
    let d: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(&x, &y)| kind.differential(x, y)).sum::<f64>() / HOURS as f64)
        .collect();
    dm_from_differential(&d, kind, bandwidth)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PValueCell {
    Diagonal,
    Value(f64),
    Identical,
    Degenerate,
}

impl Serialize for PValueCell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            PValueCell::Diagonal => s.serialize_none(),
            PValueCell::Value(p) => s.serialize_f64(*p),
            PValueCell::Identical => s.serialize_str("identical"),
            PValueCell::Degenerate => s.serialize_str("degenerate"),
        }
    }
}

/// Entry `(i, j)`: one-sided p-value for "strategy i beats strategy j".
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PValueMatrix {
    pub loss_kind: LossKind,
    pub strategies: Vec<Strategy>,
    pub p_values: Vec<Vec<PValueCell>>,
}

impl PValueMatrix {
    pub fn get(&self, i: Strategy, j: Strategy) -> Option<PValueCell> {
        let a = self.strategies.iter().position(|&s| s == i)?;
        let b = self.strategies.iter().position(|&s| s == j)?;
        Some(self.p_values[a][b])
    }
}

pub fn pvalue_matrix(
    outcomes: &[StrategyOutcome],
    kind: LossKind,
    bandwidth: Option<usize>,
) -> Result<PValueMatrix, EvaluationError> {
    if outcomes.len() < 2 {
        return Err(EvaluationError::TooFewStrategies(outcomes.len()));
    }
    let grids: Vec<Vec<[f64; HOURS]>> =
        outcomes.iter().map(|o| if kind == LossKind::Revenue { o.realized.clone() } else { o.errors() }).collect();
    let k = outcomes.len();
    let mut p_values = vec![vec![PValueCell::Diagonal; k]; k];
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            // lower loss wins, so the loss kinds test j against i
            let (a, b) = if kind == LossKind::Revenue { (&grids[i], &grids[j]) } else { (&grids[j], &grids[i]) };
            p_values[i][j] = match dm_test(a, b, kind, bandwidth) {
                Ok(r) => PValueCell::Value(r.p_value),
                Err(EvaluationError::DegenerateDifferential { identical: true }) => PValueCell::Identical,
                Err(EvaluationError::DegenerateDifferential { identical: false }) => PValueCell::Degenerate,
                Err(e) => return Err(e),
            };
        }
    }
    Ok(PValueMatrix { loss_kind: kind, strategies: outcomes.iter().map(|o| o.strategy).collect(), p_values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn z(rng: &mut ChaCha8Rng) -> f64 {
        StandardNormal.sample(rng)
    }

    fn normal_series(rng: &mut ChaCha8Rng, n: usize, mu: f64) -> Vec<f64> {
        (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                mu + z
            })
            .collect()
    }

    #[test]
    fn bandwidth_rule() {
        assert_eq!(default_bandwidth(730), 9);
        assert_eq!(default_bandwidth(729), 9);
        assert_eq!(default_bandwidth(728), 8);
        assert_eq!(default_bandwidth(30), 3);
    }

    #[test]
    fn zero_bandwidth_is_plain_t_statistic() {
        let d: Vec<f64> = (0..40).map(|i| ((i * 7) % 11) as f64 - 4.0).collect();
        let n = d.len() as f64;
        let m = d.iter().sum::<f64>() / n;
        let v = d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
        let r = dm_from_differential(&d, LossKind::Revenue, Some(0)).unwrap();
        assert!((r.statistic - m / (v / n).sqrt()).abs() < 1e-12);
        assert!((r.p_value - (1.0 - Normal::standard().cdf(r.statistic))).abs() < 1e-12);
    }

    #[test]
    fn bartlett_weights_by_hand() {
        // alternating 2, 0: mean 1, deviations ±1
        let d: Vec<f64> = (0..30).map(|t| if t % 2 == 0 { 2.0 } else { 0.0 }).collect();
        // γ0 = 1, γ1 = −29/30, γ2 = 28/30
        let r = dm_from_differential(&d, LossKind::Revenue, Some(2)).unwrap();
        let lrv: f64 = 1.0 + 2.0 * (2.0 / 3.0) * (-29.0 / 30.0) + 2.0 * (1.0 / 3.0) * (28.0 / 30.0);
        assert!((r.statistic - 1.0 / (lrv / 30.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn degenerate_and_short_inputs() {
        let a = vec![[3.0; HOURS]; 40];
        assert_eq!(
            dm_test(&a, &a, LossKind::Revenue, None),
            Err(EvaluationError::DegenerateDifferential { identical: true })
        );
        let b = vec![[1.0; HOURS]; 40];
        assert_eq!(
            dm_test(&a, &b, LossKind::Revenue, None),
            Err(EvaluationError::DegenerateDifferential { identical: false })
        );
        assert!(matches!(
            dm_test(&a[..29], &b[..29], LossKind::Revenue, None),
            Err(EvaluationError::TooFewDays { .. })
        ));
        assert!(matches!(dm_test(&a, &b[..30], LossKind::Revenue, None), Err(EvaluationError::LengthMismatch { .. })));
    }

    #[test]
    fn antisymmetry_and_offset_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a: Vec<[f64; HOURS]> = (0..100).map(|_| std::array::from_fn(|_| z(&mut rng))).collect();
        let b: Vec<[f64; HOURS]> = (0..100).map(|_| std::array::from_fn(|_| z(&mut rng))).collect();
        let ab = dm_test(&a, &b, LossKind::Revenue, None).unwrap();
        let ba = dm_test(&b, &a, LossKind::Revenue, None).unwrap();
        assert_eq!(ab.statistic, -ba.statistic);
        assert!((ab.p_value + ba.p_value - 1.0).abs() < 1e-12);
        // 0.5 keeps the shifted differences bit-identical on this scale
        let shift = |g: &[[f64; HOURS]]| g.iter().map(|r| r.map(|x| x + 0.5)).collect::<Vec<_>>();
        let shifted = dm_test(&shift(&a), &shift(&b), LossKind::Revenue, None).unwrap();
        assert!((shifted.statistic - ab.statistic).abs() < 1e-9);
    }

    #[test]
    fn size_at_ten_percent() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let reps = 10_000;
        let rejections = (0..reps)
            .filter(|_| {
                let d = normal_series(&mut rng, 730, 0.0);
                dm_from_differential(&d, LossKind::Revenue, None).unwrap().p_value < 0.10
            })
            .count();
        let rate = rejections as f64 / reps as f64;
        assert!((0.085..=0.115).contains(&rate), "rejection rate {rate}");
    }

    #[test]
    fn power_grows_with_effect_size() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut rates = Vec::new();
        for mu in [0.0, 0.05, 0.1, 0.2, 0.4] {
            let hits = (0..400)
                .filter(|_| {
                    let d = normal_series(&mut rng, 730, mu);
                    dm_from_differential(&d, LossKind::Revenue, None).unwrap().p_value < 0.05
                })
                .count();
            rates.push(hits as f64 / 400.0);
        }
        assert!(rates.windows(2).all(|w| w[1] >= w[0] - 0.03), "{rates:?}");
        assert!(rates[4] >= 0.99, "{rates:?}");
    }

    fn outcome(strategy: Strategy, realized: Vec<[f64; HOURS]>, predicted: Vec<[f64; HOURS]>) -> StrategyOutcome {
        StrategyOutcome {
            strategy,
            n_days: realized.len(),
            mean_revenue: 0.0,
            rmse: 0.0,
            mae: 0.0,
            var_1pct: 0.0,
            var_5pct: 0.0,
            dates: vec![],
            g_star: vec![],
            realized,
            predicted,
        }
    }

    #[test]
    fn matrix_shape_and_orientation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let base: Vec<[f64; HOURS]> =
            (0..200).map(|_| std::array::from_fn(|_| 1000.0 + 100.0 * z(&mut rng))).collect::<Vec<_>>();
        let zero = vec![[0.0; HOURS]; 200];
        let noise = |rng: &mut ChaCha8Rng, s: f64| -> Vec<[f64; HOURS]> {
            (0..200).map(|_| std::array::from_fn(|_| s * z(rng))).collect()
        };
        // strong dominates weak by 50 per hour plus noise
        let strong: Vec<[f64; HOURS]> =
            base.iter().zip(noise(&mut rng, 5.0)).map(|(b, n)| std::array::from_fn(|h| b[h] + 50.0 + n[h])).collect();
        let outs = vec![
            outcome(Strategy::Da, base.clone(), base.clone()),
            outcome(Strategy::Id, base.clone(), base.clone()),
            outcome(Strategy::MaxProfit, strong, zero.clone()),
            outcome(
                Strategy::MaxSharpe,
                base.iter().zip(noise(&mut rng, 30.0)).map(|(b, n)| std::array::from_fn(|h| b[h] + n[h])).collect(),
                zero.clone(),
            ),
            outcome(Strategy::MaxVar, noise(&mut rng, 500.0), zero),
        ];
        let m = pvalue_matrix(&outs, LossKind::Revenue, None).unwrap();
        assert_eq!(m.p_values.len(), 5);
        let populated = m.p_values.iter().flatten().filter(|c| **c != PValueCell::Diagonal).count();
        assert_eq!(populated, 20);
        assert_eq!(m.get(Strategy::Da, Strategy::Id), Some(PValueCell::Identical));
        let PValueCell::Value(p) = m.get(Strategy::MaxProfit, Strategy::Da).unwrap() else { panic!() };
        assert!(p < 1e-6);
        let PValueCell::Value(q) = m.get(Strategy::Da, Strategy::MaxProfit).unwrap() else { panic!() };
        assert!(q > 1.0 - 1e-6);

        // errors: Da and Id have zero error, MaxProfit has error ≈ realized
        let e = pvalue_matrix(&outs, LossKind::SquaredError, None).unwrap();
        let PValueCell::Value(p) = e.get(Strategy::Da, Strategy::MaxProfit).unwrap() else { panic!() };
        assert!(p < 1e-6, "accurate strategy should beat the inaccurate one");
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.contains("\"identical\"") && json.contains("null"));
    }
}
