//! On-disk report set. Every payload is a pure function of the report, so
//! reruns with the same inputs give byte-identical files; only
//! `manifest.json` carries wall-clock data.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{BacktestError, BacktestReport, RunMetadata, G_HISTOGRAM_BINS};
use crate::evaluation::PValueCell;

pub const SUMMARY_CSV: &str = "report_summary.csv";
pub const SUMMARY_JSON: &str = "report_summary.json";
pub const DECISIONS_CSV: &str = "report_decisions.csv";
pub const DECISIONS_JSON: &str = "report_decisions.json";
pub const PVALUES_CSV: &str = "report_pvalues.csv";
pub const PVALUES_JSON: &str = "report_pvalues.json";
pub const GSHARE_CSV: &str = "report_gshare.csv";
pub const GHIST_CSV: &str = "report_ghist.csv";
pub const HOURLY_G_CSV: &str = "report_hourly_g.csv";
pub const MANIFEST_JSON: &str = "manifest.json";

/// Deterministic payload files written by [`write_report`].
pub const REPORT_FILES: [&str; 9] = [
    SUMMARY_CSV,
    SUMMARY_JSON,
    DECISIONS_CSV,
    DECISIONS_JSON,
    PVALUES_CSV,
    PVALUES_JSON,
    GSHARE_CSV,
    GHIST_CSV,
    HOURLY_G_CSV,
];

#[derive(Serialize)]
struct SummaryRow {
    strategy: String,
    n_days: usize,
    mean_revenue: f64,
    rmse: f64,
    mae: f64,
    var_1pct: f64,
    var_5pct: f64,
    mean_revenue_vs_da_pct: Option<f64>,
    rmse_vs_da_pct: Option<f64>,
    mae_vs_da_pct: Option<f64>,
    var_1pct_vs_da_pct: Option<f64>,
    var_5pct_vs_da_pct: Option<f64>,
}

#[derive(Serialize)]
struct GShareRow {
    strategy: String,
    mean_g_pct: f64,
    share_g0_pct: f64,
    share_interior_pct: f64,
    share_g1_pct: f64,
}

#[derive(Serialize)]
struct GHistRow {
    strategy: String,
    bin_lower: f64,
    bin_upper: f64,
    count: usize,
}

#[derive(Serialize)]
struct PValueRow {
    loss_kind: &'static str,
    strategy_i: String,
    strategy_j: String,
    p_value: String,
}

fn json_to(path: &Path, value: &impl Serialize) -> Result<(), BacktestError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn csv_to<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<(), BacktestError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the payload files into `dir`, creating it if needed, and returns
/// their paths in [`REPORT_FILES`] order.
pub fn write_report(report: &BacktestReport, dir: &Path) -> Result<Vec<PathBuf>, BacktestError> {
    fs::create_dir_all(dir)?;
    let path = |name: &str| dir.join(name);

    csv_to(
        &path(SUMMARY_CSV),
        report.outcomes.iter().zip(&report.relative_to_da).map(|(o, rel)| SummaryRow {
            strategy: o.strategy.to_string(),
            n_days: o.n_days,
            mean_revenue: o.mean_revenue,
            rmse: o.rmse,
            mae: o.mae,
            var_1pct: o.var_1pct,
            var_5pct: o.var_5pct,
            mean_revenue_vs_da_pct: rel.map(|r| r.mean_revenue),
            rmse_vs_da_pct: rel.map(|r| r.rmse),
            mae_vs_da_pct: rel.map(|r| r.mae),
            var_1pct_vs_da_pct: rel.map(|r| r.var_1pct),
            var_5pct_vs_da_pct: rel.map(|r| r.var_5pct),
        }),
    )?;
    json_to(&path(SUMMARY_JSON), report)?;

    csv_to(&path(DECISIONS_CSV), &report.decisions)?;
    json_to(&path(DECISIONS_JSON), &report.decisions)?;

    csv_to(
        &path(PVALUES_CSV),
        report.pvalues.iter().flat_map(|m| {
            m.strategies.iter().enumerate().flat_map(move |(i, si)| {
                m.strategies.iter().enumerate().filter(move |&(j, _)| i != j).map(move |(j, sj)| PValueRow {
                    loss_kind: m.loss_kind.name(),
                    strategy_i: si.to_string(),
                    strategy_j: sj.to_string(),
                    p_value: match m.p_values[i][j] {
                        PValueCell::Value(p) => p.to_string(),
                        PValueCell::Identical => "identical".into(),
                        PValueCell::Degenerate => "degenerate".into(),
                        PValueCell::Diagonal => String::new(),
                    },
                })
            })
        }),
    )?;
    json_to(&path(PVALUES_JSON), &report.pvalues)?;

    csv_to(
        &path(GSHARE_CSV),
        report.g_distributions.iter().map(|g| GShareRow {
            strategy: g.strategy.to_string(),
            mean_g_pct: g.mean_g,
            share_g0_pct: g.share_g0,
            share_interior_pct: g.share_interior,
            share_g1_pct: g.share_g1,
        }),
    )?;

    let width = 1.0 / G_HISTOGRAM_BINS as f64;
    csv_to(
        &path(GHIST_CSV),
        report.g_histograms.iter().flat_map(|h| {
            h.counts.iter().enumerate().map(move |(b, &count)| GHistRow {
                strategy: h.strategy.to_string(),
                bin_lower: b as f64 * width,
                bin_upper: (b + 1) as f64 * width,
                count,
            })
        }),
    )?;

    // wide layout: one column per strategy
    let mut w = csv::Writer::from_path(path(HOURLY_G_CSV))?;
    let mut header = vec!["hour".to_string()];
    header.extend(report.g_distributions.iter().map(|g| format!("{}_mean_g_pct", g.strategy)));
    w.write_record(&header)?;
    for h in 0..crate::market_data::HOURS {
        let mut row = vec![(h + 1).to_string()];
        row.extend(report.g_distributions.iter().map(|g| g.hourly_means[h].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;

    Ok(REPORT_FILES.iter().map(|f| path(f)).collect())
}

/// SHA-256 of the canonical JSON encoding of a configuration.
pub fn config_hash(config: &impl Serialize) -> Result<String, BacktestError> {
    let bytes = serde_json::to_vec(config)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Run provenance written next to the payloads.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub package: String,
    pub version: String,
    pub config_sha256: String,
    pub master_seed: u64,
    pub created_utc: String,
    pub runtime_seconds: f64,
    pub threads: usize,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn new(config_sha256: String, master_seed: u64, run: RunMetadata) -> Self {
        Self {
            package: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_sha256,
            master_seed,
            created_utc: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            runtime_seconds: run.runtime_seconds,
            threads: run.threads,
            files: REPORT_FILES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

pub fn write_manifest(manifest: &Manifest, dir: &Path) -> Result<PathBuf, BacktestError> {
    fs::create_dir_all(dir)?;
    let p = dir.join(MANIFEST_JSON);
    json_to(&p, manifest)?;
    Ok(p)
}
