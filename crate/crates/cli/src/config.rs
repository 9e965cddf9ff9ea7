use std::path::{Path, PathBuf};

use anyhow::Context;
use res_svar::market_data::ColumnMapping;
use res_svar::BacktestConfig;
use serde::{Deserialize, Serialize};

/// The TOML run file. Every section is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataSection,
    pub backtest: BacktestConfig,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub path: Option<PathBuf>,
    pub columns: ColumnMapping,
    /// Lag order of the unit-root tests in `validate`.
    pub adf_lag: usize,
}

impl Default for DataSection {
    fn default() -> Self {
        Self { path: None, columns: ColumnMapping::default(), adf_lag: 7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub log_level: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), log_level: "info".into() }
    }
}

impl RunConfig {
    /// Parses `path`; relative paths inside resolve against its directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let Some(p) = cfg.data.path.take() {
            cfg.data.path = Some(base.join(p));
        }
        cfg.output.dir = base.join(&cfg.output.dir);
        Ok(cfg)
    }

    pub fn load_or_default(path: Option<&Path>) -> anyhow::Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_paths_follow_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.toml");
        std::fs::write(
            &p,
            r#"
[data]
path = "panel.csv"

[backtest]
n_draws = 250
strategies = ["da", "sharpe"]
evaluation_start = "2018-01-01"

[backtest.var_spec]
lags = [1, 7]

[output]
dir = "reports"
"#,
        )
        .unwrap();
        let cfg = RunConfig::load(&p).unwrap();
        assert_eq!(cfg.data.path.unwrap(), dir.path().join("panel.csv"));
        assert_eq!(cfg.output.dir, dir.path().join("reports"));
        assert_eq!(cfg.backtest.n_draws, 250);
        assert_eq!(cfg.backtest.var_spec.lags(), &[1, 7]);
        assert_eq!(cfg.backtest.calibration_days, 731);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("[backtest]\nn_drawz = 3\n").is_err());
        assert!(toml::from_str::<RunConfig>("[outptu]\n").is_err());
    }
}
