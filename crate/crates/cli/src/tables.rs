//! Plain-text summaries for stdout.

use std::fmt::Write;

use res_svar::backtest::BacktestReport;
use res_svar::market_data::{DescriptiveStats, LoadedPanel};

pub fn panel_summary(loaded: &LoadedPanel, stats: &DescriptiveStats) -> String {
    let p = &loaded.panel;
    let mut s = String::new();
    let _ = writeln!(s, "panel: {} days, {} to {}", p.n_days(), p.start_date(), p.end_date());
    let _ = writeln!(s, "imputed cells: {}, DST-adjusted cells: {}", loaded.imputed_cells, loaded.dst_adjusted_cells);
    let _ = writeln!(s);
    let _ = writeln!(s, "{:<10}{:>12}{:>14}{:>14}", "variable", "mean", "hourly std", "ADF rejects");
    for (name, v) in [("RES", stats.res), ("load", stats.load), ("DA", stats.da), ("ID", stats.id)] {
        let _ = writeln!(s, "{name:<10}{:>12.2}{:>14.2}{:>11}/24", v.mean, v.mean_hourly_std, v.adf_reject_count);
    }
    s
}

fn pct(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:+.2}%"))
}

pub fn revenue_table(r: &BacktestReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "evaluation: {} days, {} to {}", r.n_days, r.evaluation_start, r.evaluation_end);
    let _ = writeln!(
        s,
        "{:<9}{:>12}{:>11}{:>11}{:>11}{:>11}{:>11}{:>11}{:>11}",
        "strategy", "mean rev", "vs DA", "RMSE", "vs DA", "MAE", "vs DA", "VaR 1%", "VaR 5%"
    );
    for (o, rel) in r.outcomes.iter().zip(&r.relative_to_da) {
        let _ = writeln!(
            s,
            "{:<9}{:>12.2}{:>11}{:>11.2}{:>11}{:>11.2}{:>11}{:>11.2}{:>11.2}",
            o.strategy.name(),
            o.mean_revenue,
            pct(rel.map(|x| x.mean_revenue)),
            o.rmse,
            pct(rel.map(|x| x.rmse)),
            o.mae,
            pct(rel.map(|x| x.mae)),
            o.var_1pct,
            o.var_5pct,
        );
    }
    s
}

pub fn g_table(r: &BacktestReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<9}{:>10}{:>10}{:>10}{:>10}", "strategy", "mean g%", "g=0", "0<g<1", "g=1");
    for g in &r.g_distributions {
        let _ = writeln!(
            s,
            "{:<9}{:>10.2}{:>10.2}{:>10.2}{:>10.2}",
            g.strategy.name(),
            g.mean_g,
            g.share_g0,
            g.share_interior,
            g.share_g1
        );
    }
    if r.sharpe_fallbacks > 0 {
        let _ = writeln!(s, "sharpe fell back to mean revenue in {} cells", r.sharpe_fallbacks);
    }
    if !r.failed_cells.is_empty() {
        let _ = writeln!(s, "{} cells reused the previous day's model", r.failed_cells.len());
    }
    s
}
