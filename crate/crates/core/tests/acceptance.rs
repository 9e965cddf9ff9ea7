//! Acceptance gate. Run with `cargo test -p res-svar --test acceptance`;
//! prints one PASS/FAIL line per criterion and exits non-zero on failure.

use std::path::Path;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use nalgebra::{DMatrix, Matrix4, Vector4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use res_svar::backtest::{
    run_backtest, run_backtest_with_observer, write_report, BacktestConfig, BacktestReport, DecisionRecord,
    REPORT_FILES,
};
use res_svar::econometrics::{cholesky_lower, ols_multivariate};
use res_svar::evaluation::{dm_from_differential, LossKind};
use res_svar::market_data::HOURS;
use res_svar::strategies::Strategy;
use res_svar::svar::{fit_hour_model, point_forecast, simulate_scenarios, VarSpec};
use res_svar::synthgen::{generate_panel, GroundTruth};
use res_svar::{HourlyPanel, InformationSet};

type Outcome = Result<String, String>;
type DayTrace = (Vec<(u8, [f64; 4])>, Vec<DecisionRecord>);

fn start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2015, 1, 1).unwrap()
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| normal(rng))
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn factorization_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let clock = Instant::now();
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let a = random_matrix(&mut rng, 4, 4);
        let sigma = &a * a.transpose() + DMatrix::identity(4, 4) * 1e-3;
        let b = cholesky_lower(&sigma).map_err(|e| e.to_string())?;
        let b = b.matrix();
        worst = worst.max((b * b.transpose() - &sigma).norm() / sigma.norm());
    }
    let t = clock.elapsed();
    check(worst <= 1e-10 && t < Duration::from_secs(1), format!("max rel err {worst:.2e}, {t:.2?}"))
}

fn ols_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut coef_err, mut orth): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let x = random_matrix(&mut rng, 200, 12);
        let c = random_matrix(&mut rng, 12, 4);
        let y = &x * &c + random_matrix(&mut rng, 200, 4);
        let fit = ols_multivariate(&y, &x, true).map_err(|e| e.to_string())?;
        // normal equations solved by LU
        let xtx = x.transpose() * &x;
        let oracle = xtx.lu().solve(&(x.transpose() * &y)).ok_or("singular oracle")?;
        coef_err = coef_err.max((fit.coefficients.transpose() - oracle).amax());
        orth = orth.max((x.transpose() * &fit.residuals).amax());
    }
    check(coef_err <= 1e-8 && orth <= 1e-8, format!("max coef diff {coef_err:.2e}, max |X'e| {orth:.2e}"))
}

fn parameter_recovery() -> Outcome {
    let clock = Instant::now();
    let truth = GroundTruth::unit_scale();
    let n = 5000;
    let panel = generate_panel(&truth, n, 5, start()).map_err(|e| e.to_string())?;
    let spec = VarSpec::default();
    let info = InformationSet::full();
    let (mut inside, mut total) = (0usize, 0usize);
    let mut worst_b: f64 = 0.0;
    for hour in 1..=HOURS as u8 {
        let m = fit_hour_model(&panel, hour, 0..=n - 1, &spec, &info).map_err(|e| e.to_string())?;
        let h = &truth.hours[hour as usize - 1];
        let (se_a0, se_lags) = m.std_errors().ok_or("no standard errors")?;
        let mut tally = |est: f64, tru: f64, se: f64| {
            // dropped regressors have no standard error and a zero truth
            if se > 0.0 {
                total += 1;
                inside += usize::from((est - tru).abs() <= 3.0 * se);
            }
        };
        let a0 = h.exog_matrix();
        for (i, e) in m.exog_coeffs().iter().enumerate() {
            tally(*e, a0[i], se_a0[i]);
        }
        for p in spec.lags() {
            let a = h.lag_matrix(*p);
            for (i, e) in m.lag_coeffs()[p].iter().enumerate() {
                tally(*e, a[i], se_lags[p][i]);
            }
        }
        worst_b = worst_b.max((m.b() - h.b_matrix()).norm());
    }
    let share = inside as f64 / total as f64;
    let t = clock.elapsed();
    check(
        share >= 0.95 && worst_b <= 0.1 && t < Duration::from_secs(120),
        format!("{:.2}% of {total} coefficients within 3 SE, max ||B-B0||_F {worst_b:.4}, {t:.1?}", 100.0 * share),
    )
}

fn bootstrap_consistency() -> Outcome {
    let panel = generate_panel(&GroundTruth::default(), 1000, 8, start()).map_err(|e| e.to_string())?;
    let info = InformationSet::default();
    let mut worst_cov: f64 = 0.0;
    let mut worst_corr: f64 = 0.0;
    for hour in [4u8, 15] {
        let m = fit_hour_model(&panel, hour, 0..=998, &VarSpec::default(), &info).map_err(|e| e.to_string())?;
        let y_point = point_forecast(&m, &panel, 999, &info).map_err(|e| e.to_string())?;
        let s = simulate_scenarios(&m, y_point, 10_000, 99).map_err(|e| e.to_string())?;
        let n = s.n_draws() as f64;
        let dev: Vec<Vector4<f64>> = s.y_draws.iter().map(|y| Vector4::from(*y) - Vector4::from(y_point)).collect();
        let mean = dev.iter().sum::<Vector4<f64>>() / n;
        let cov = dev.iter().map(|d| (d - mean) * (d - mean).transpose()).sum::<Matrix4<f64>>() / n;
        worst_cov = worst_cov.max((cov - m.sigma()).norm() / m.sigma().norm());

        let b_inv = m.b().try_inverse().ok_or("singular B")?;
        let u: Vec<Vector4<f64>> = dev.iter().map(|d| b_inv * d).collect();
        let um = u.iter().sum::<Vector4<f64>>() / n;
        let uc = u.iter().map(|x| (x - um) * (x - um).transpose()).sum::<Matrix4<f64>>() / n;
        let sd = uc.diagonal().map(f64::sqrt);
        let corr = Matrix4::from_fn(|i, j| uc[(i, j)] / (sd[i] * sd[j]));
        worst_corr = worst_corr.max((corr - Matrix4::identity()).amax());
    }
    check(
        worst_cov <= 0.10 && worst_corr <= 0.05,
        format!("cov rel Frobenius {worst_cov:.4}, max |corr - I| {worst_corr:.4}"),
    )
}

fn dm_size() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(730);
    let reps = 10_000;
    let mut rejections = 0;
    for _ in 0..reps {
        let d: Vec<f64> = (0..730).map(|_| normal(&mut rng)).collect();
        let p = dm_from_differential(&d, LossKind::Revenue, None).map_err(|e| e.to_string())?.p_value;
        // two-sided at 10%
        rejections += usize::from(!(0.05..=0.95).contains(&p));
    }
    let rate = rejections as f64 / reps as f64;
    check((0.085..=0.115).contains(&rate), format!("rejection rate {:.2}%", 100.0 * rate))
}

fn risk_ordering() -> Outcome {
    let panel = generate_panel(&GroundTruth::spread_market(8.0), 1461, 17, start()).map_err(|e| e.to_string())?;
    let cfg = BacktestConfig {
        strategies: vec![Strategy::Id, Strategy::MaxProfit, Strategy::MaxSharpe],
        ..Default::default()
    };
    let r = run_backtest(&panel, &cfg).map_err(|e| e.to_string())?;
    let g = |s| r.g_distribution(s).map(|d| d.mean_g).unwrap_or(f64::NAN);
    let rmse = |s| r.outcome(s).map(|o| o.rmse).unwrap_or(f64::NAN);
    let (gs, gp) = (g(Strategy::MaxSharpe), g(Strategy::MaxProfit));
    let (rs, ri) = (rmse(Strategy::MaxSharpe), rmse(Strategy::Id));
    check(gs > gp && rs < ri, format!("mean g sharpe {gs:.2}% vs profit {gp:.2}%, RMSE sharpe {rs:.1} vs id {ri:.1}"))
}

fn payloads(r: &BacktestReport, dir: &Path) -> Result<Vec<Vec<u8>>, String> {
    write_report(r, dir).map_err(|e| e.to_string())?;
    REPORT_FILES.iter().map(|f| std::fs::read(dir.join(f)).map_err(|e| e.to_string())).collect()
}

/// Criteria 5, 8 and 10 share the full default run.
struct FullRun {
    elapsed: Duration,
    report: BacktestReport,
    max_affine_err: f64,
    cells_seen: usize,
}

fn full_run(panel: &HourlyPanel) -> Result<FullRun, String> {
    let worst = Mutex::new((0.0f64, 0usize));
    let clock = Instant::now();
    let report = run_backtest_with_observer(panel, &BacktestConfig::default(), |t| {
        let d = t.distribution;
        let g = d.g_grid.values();
        let (m0, m1) = (d.mean[0], d.mean[g.len() - 1]);
        let err = g.iter().zip(&d.mean).map(|(g, m)| (m - (m0 + g * (m1 - m0))).abs()).fold(0.0, f64::max);
        let mut w = worst.lock().unwrap();
        w.0 = w.0.max(err);
        w.1 += 1;
    })
    .map_err(|e| e.to_string())?;
    let elapsed = clock.elapsed();
    let (max_affine_err, cells_seen) = worst.into_inner().unwrap();
    Ok(FullRun { elapsed, report, max_affine_err, cells_seen })
}

fn affine_boundary(run: &FullRun) -> Outcome {
    let share = run.report.g_distribution(Strategy::MaxProfit).ok_or("no profit strategy")?.share_interior;
    check(
        share == 0.0 && run.max_affine_err <= 1e-9 && run.cells_seen == 730 * HOURS,
        format!(
            "interior share {share}%, max deviation from affine {:.2e} over {} cells",
            run.max_affine_err, run.cells_seen
        ),
    )
}

fn determinism(panel: &HourlyPanel, run: &FullRun) -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = payloads(&run.report, dir.path())?;
    let again = run_backtest(panel, &BacktestConfig::default()).map_err(|e| e.to_string())?;
    let capped =
        run_backtest(panel, &BacktestConfig { threads: Some(3), ..Default::default() }).map_err(|e| e.to_string())?;
    let same_seed = payloads(&again, dir.path())? == first;
    let thread_cap = payloads(&capped, dir.path())? == first;
    check(same_seed && thread_cap, format!("same seed identical: {same_seed}, 3-thread cap identical: {thread_cap}"))
}

fn no_look_ahead(panel: &HourlyPanel) -> Outcome {
    let t = 1100;
    let cfg = BacktestConfig { evaluation_start: Some(panel.date(t)), evaluation_days: 1, ..Default::default() };
    let poisoned = panel
        .map_cells(|day, _, mut o| {
            if day >= t {
                o.da_price = -3000.0;
                o.id3_price = 9000.0;
                o.res_actual = 400.0;
                o.load_actual = 1.0;
                if day > t {
                    o.res_forecast = 0.0;
                    o.load_forecast = 500.0;
                }
            }
            o
        })
        .map_err(|e| e.to_string())?;
    let trace = |p: &HourlyPanel| -> Result<DayTrace, String> {
        let points = Mutex::new(Vec::new());
        let r = run_backtest_with_observer(p, &cfg, |c| points.lock().unwrap().push((c.hour, c.y_point)))
            .map_err(|e| e.to_string())?;
        let mut points = points.into_inner().unwrap();
        points.sort_by_key(|x| x.0);
        Ok((points, r.decisions))
    };
    let (clean_y, clean_d) = trace(panel)?;
    let (dirty_y, dirty_d) = trace(&poisoned)?;
    let same_forecasts = clean_y == dirty_y;
    let same_decisions = clean_d
        .iter()
        .zip(&dirty_d)
        .all(|(a, b)| (a.strategy, a.g_star, a.predicted_revenue) == (b.strategy, b.g_star, b.predicted_revenue));
    let realized_moved = clean_d.iter().zip(&dirty_d).any(|(a, b)| a.realized_revenue != b.realized_revenue);
    check(
        same_forecasts && same_decisions && clean_d.len() == dirty_d.len() && realized_moved,
        format!("forecasts unchanged: {same_forecasts}, decisions unchanged: {same_decisions}, realized revenues moved: {realized_moved}"),
    )
}

fn end_to_end(run: &FullRun) -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    write_report(&run.report, dir.path()).map_err(|e| e.to_string())?;
    let missing: Vec<&str> = REPORT_FILES.iter().copied().filter(|f| !dir.path().join(f).exists()).collect();
    let cells = run.report.decisions.len();
    check(
        run.elapsed < Duration::from_secs(1800) && missing.is_empty() && cells == 730 * HOURS * 5,
        format!(
            "{cells} decisions in {:.1?} on {} threads, missing files {missing:?}",
            run.elapsed, run.report.run.threads
        ),
    )
}

fn main() {
    let mut results: Vec<(u8, &str, Outcome)> = Vec::new();
    let mut record = |n: u8, name: &'static str, f: &dyn Fn() -> Outcome| {
        let r = f();
        let (tag, detail) = match &r {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("{tag} criterion {n:>2} {name}: {detail}");
        results.push((n, name, r));
    };

    record(1, "factorization identity", &factorization_identity);
    record(2, "OLS oracle equivalence", &ols_oracle);
    record(3, "parameter recovery", &parameter_recovery);
    record(4, "bootstrap consistency", &bootstrap_consistency);

    let panel = generate_panel(&GroundTruth::default(), 1461, 1, start()).expect("default synthetic panel");
    let full = full_run(&panel);
    let with_full = |f: &dyn Fn(&FullRun) -> Outcome| -> Outcome { full.as_ref().map_err(Clone::clone).and_then(f) };
    record(5, "affine objective boundary", &|| with_full(&affine_boundary));
    record(6, "DM size", &dm_size);
    record(7, "risk ordering", &risk_ordering);
    record(8, "determinism", &|| with_full(&|r| determinism(&panel, r)));
    record(9, "no look-ahead", &|| no_look_ahead(&panel));
    record(10, "end-to-end run", &|| with_full(&end_to_end));

    let failed = results.iter().filter(|r| r.2.is_err()).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
