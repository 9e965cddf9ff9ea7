mod config;
mod tables;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use log::info;

use config::RunConfig;
use res_svar::backtest::{self, config_hash, write_manifest, write_report, BacktestError, DecisionRecord, Manifest};
use res_svar::market_data::{descriptive_stats, load_panel, write_panel, LoadedPanel};
use res_svar::synthgen::{generate_panel, GroundTruth, SynthError};
use res_svar::{BacktestReport, Strategy};

/// Per-hour SVAR scenario backtests for day-ahead / intraday trading.
#[derive(Parser)]
#[command(name = "res-svar", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load the data and print descriptive statistics.
    Validate(Common),
    /// Run the rolling-window backtest and write the report set.
    Backtest(BacktestArgs),
    /// Write a synthetic panel from a ground-truth model.
    Synth(SynthArgs),
    /// Rebuild the report set from a decision log.
    Report(ReportArgs),
}

#[derive(Args)]
struct Common {
    /// TOML run file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Panel CSV; overrides `data.path`.
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Args)]
struct BacktestArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Comma-separated subset of da,id,profit,sharpe,var.
    #[arg(long, value_delimiter = ',')]
    strategies: Option<Vec<Strategy>>,
    /// Bootstrap draws per cell.
    #[arg(long)]
    draws: Option<usize>,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// TOML run file; only its column mapping is used.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Ground-truth JSON; the built-in model when absent.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, default_value_t = 1461)]
    days: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "2015-01-01")]
    start: NaiveDate,
    /// Panel CSV to write.
    #[arg(long)]
    out: PathBuf,
    /// Also write the ground truth used as JSON.
    #[arg(long)]
    truth_out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// TOML run file; supplies the DM bandwidth and output directory.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Decision log; defaults to `<out>/report_decisions.csv`.
    #[arg(long)]
    decisions: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    strategies: Option<Vec<Strategy>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Exit status categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Config = 1,
    Data = 2,
    Backtest = 3,
}

struct Failure {
    status: Status,
    error: anyhow::Error,
}

trait OrStatus<T> {
    fn or_status(self, status: Status) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> OrStatus<T> for Result<T, E> {
    fn or_status(self, status: Status) -> Result<T, Failure> {
        self.map_err(|e| Failure { status, error: e.into() })
    }
}

fn init_logging(level: &str) {
    let mut b = env_logger::Builder::new();
    b.parse_filters(level);
    if let Ok(env) = std::env::var("RUST_LOG") {
        b.parse_filters(&env);
    }
    let _ = b.try_init();
}

fn load_data(cfg: &RunConfig, over: Option<&Path>) -> Result<LoadedPanel, Failure> {
    let path = over
        .map(Path::to_path_buf)
        .or_else(|| cfg.data.path.clone())
        .ok_or_else(|| anyhow!("no data file: set data.path or pass --data"))
        .or_status(Status::Config)?;
    let loaded = load_panel(&path, &cfg.data.columns)
        .with_context(|| format!("cannot load {}", path.display()))
        .or_status(Status::Data)?;
    info!("loaded {} days from {}", loaded.panel.n_days(), path.display());
    Ok(loaded)
}

fn cmd_validate(args: Common) -> Result<(), Failure> {
    let cfg = RunConfig::load_or_default(args.config.as_deref()).or_status(Status::Config)?;
    init_logging(&cfg.output.log_level);
    cfg.backtest.validate().or_status(Status::Config)?;
    let loaded = load_data(&cfg, args.data.as_deref())?;
    let stats = descriptive_stats(&loaded.panel, cfg.data.adf_lag).or_status(Status::Data)?;
    print!("{}", tables::panel_summary(&loaded, &stats));
    // the window protocol must fit the data, too
    cfg.backtest.evaluation_range(&loaded.panel).or_status(Status::Config)?;
    Ok(())
}

fn print_report(r: &BacktestReport) {
    println!("{}", tables::revenue_table(r));
    print!("{}", tables::g_table(r));
}

fn cmd_backtest(args: BacktestArgs) -> Result<(), Failure> {
    let mut cfg = RunConfig::load_or_default(args.common.config.as_deref()).or_status(Status::Config)?;
    init_logging(&cfg.output.log_level);
    let bt = &mut cfg.backtest;
    if let Some(s) = args.seed {
        bt.master_seed = s;
    }
    if args.threads.is_some() {
        bt.threads = args.threads;
    }
    if let Some(s) = args.strategies {
        bt.strategies = s;
    }
    if let Some(d) = args.draws {
        bt.n_draws = d;
    }
    if let Some(o) = args.out {
        cfg.output.dir = o;
    }
    cfg.backtest.validate().or_status(Status::Config)?;
    let loaded = load_data(&cfg, args.common.data.as_deref())?;

    let report = match backtest::run_backtest(&loaded.panel, &cfg.backtest) {
        Ok(r) => r,
        Err(e @ BacktestError::Config(_)) => return Err(e).or_status(Status::Config),
        Err(e) => return Err(e).or_status(Status::Backtest),
    };
    let dir = &cfg.output.dir;
    write_report(&report, dir)
        .with_context(|| format!("cannot write to {}", dir.display()))
        .or_status(Status::Backtest)?;
    let hash = config_hash(&cfg.backtest).or_status(Status::Backtest)?;
    write_manifest(&Manifest::new(hash, cfg.backtest.master_seed, report.run), dir).or_status(Status::Backtest)?;
    print_report(&report);
    println!("reports written to {}", dir.display());
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<(), Failure> {
    let cfg = RunConfig::load_or_default(args.config.as_deref()).or_status(Status::Config)?;
    init_logging(&cfg.output.log_level);
    let truth = match &args.truth {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()));
            GroundTruth::from_json(&text.or_status(Status::Config)?).or_status(Status::Config)?
        }
        None => GroundTruth::default(),
    };
    let panel = generate_panel(&truth, args.days, args.seed, args.start).map_err(|e| match e {
        SynthError::Data(_) => Failure { status: Status::Data, error: e.into() },
        _ => Failure { status: Status::Config, error: e.into() },
    })?;
    let file = File::create(&args.out).with_context(|| format!("cannot create {}", args.out.display()));
    write_panel(&panel, BufWriter::new(file.or_status(Status::Data)?), &cfg.data.columns).or_status(Status::Data)?;
    if let Some(p) = &args.truth_out {
        let json = truth.to_json().or_status(Status::Config)?;
        std::fs::write(p, json).with_context(|| format!("cannot write {}", p.display())).or_status(Status::Data)?;
    }
    println!(
        "wrote {} days ({} to {}) to {}",
        panel.n_days(),
        panel.start_date(),
        panel.end_date(),
        args.out.display()
    );
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<(), Failure> {
    let cfg = RunConfig::load_or_default(args.config.as_deref()).or_status(Status::Config)?;
    init_logging(&cfg.output.log_level);
    let dir = args.out.unwrap_or(cfg.output.dir);
    let src = args.decisions.unwrap_or_else(|| dir.join("report_decisions.csv"));
    let log: Vec<DecisionRecord> = csv::Reader::from_path(&src)
        .and_then(|mut r| r.deserialize().collect::<Result<_, _>>())
        .with_context(|| format!("cannot read decision log {}", src.display()))
        .or_status(Status::Data)?;
    let strategies = args
        .strategies
        .unwrap_or_else(|| Strategy::ALL.into_iter().filter(|s| log.iter().any(|d| d.strategy == *s)).collect());
    let log: Vec<DecisionRecord> = log.into_iter().filter(|d| strategies.contains(&d.strategy)).collect();
    let report = BacktestReport::from_decisions(log, &strategies, cfg.backtest.dm_bandwidth).or_status(Status::Data)?;
    write_report(&report, &dir)
        .with_context(|| format!("cannot write to {}", dir.display()))
        .or_status(Status::Data)?;
    print_report(&report);
    Ok(())
}

fn main() -> ExitCode {
    // usage errors are configuration errors
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(Status::Config as u8) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Validate(a) => cmd_validate(a),
        Command::Backtest(a) => cmd_backtest(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.status as u8)
        }
    }
}
