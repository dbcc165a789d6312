use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::StudyConfig;
use super::studies::SweepRow;
use crate::error::{Error, Result};

pub const SWEEP_HEADER: &str = "alpha,lambda1,cd_upper,linf,holder_H,tau_fit";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// `v<crate version>-g<git describe>` when built inside a repository.
pub fn version_string() -> &'static str {
    env!("MIXFRAC_VERSION")
}

/// JSON wrapper carrying the resolved configuration next to the payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub version: String,
    pub config: StudyConfig,
    pub config_text: String,
    pub data: T,
}

impl<T> Envelope<T> {
    pub fn new(config: &StudyConfig, data: T) -> Self {
        Envelope {
            version: version_string().to_string(),
            config: config.clone(),
            config_text: config.to_text(),
            data,
        }
    }
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::NoData);
    }
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.alpha,
            r.lambda1,
            r.cd_upper,
            r.linf,
            r.holder_h,
            r.tau_fit.map_or(String::new(), |t| t.to_string())
        ));
    }
    Ok(out)
}

/// Writes `<stem>.json` (envelope) or `<stem>.csv` plus the config echo
/// `<stem>.config` beside it.
pub fn write_output<T: Serialize>(dir: &Path, stem: &str, format: OutputFormat, cfg: &StudyConfig, data: &T, csv: Option<String>) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    match (format, csv) {
        (OutputFormat::Csv, Some(table)) => {
            let table_path = dir.join(format!("{stem}.csv"));
            let config_path = dir.join(format!("{stem}.config"));
            fs::write(&table_path, table)?;
            fs::write(&config_path, format!("# {}\n{}", version_string(), cfg.to_text()))?;
            Ok(vec![table_path, config_path])
        }
        _ => {
            let path = dir.join(format!("{stem}.json"));
            let env = Envelope::new(cfg, data);
            fs::write(&path, serde_json::to_string_pretty(&env)? + "\n")?;
            Ok(vec![path])
        }
    }
}

/// Sweep table in the requested format; empty input is an error.
pub fn emit_results(rows: &[SweepRow], format: OutputFormat, dir: &Path, cfg: &StudyConfig) -> Result<Vec<PathBuf>> {
    let table = sweep_csv(rows)?;
    write_output(dir, "sweep", format, cfg, &rows, Some(table))
}
