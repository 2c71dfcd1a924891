//! CSV and JSON output of simulation reports.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LossKind, SimulationReport};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::UnknownName(format!("report format {other:?}"))),
        }
    }
}

/// One row per (loss, target), one column per `estimator@rsnr`. Values are
/// written with round-trip precision.
pub fn write_csv<W: Write>(report: &SimulationReport, w: W) -> Result<()> {
    let cfg = &report.config;
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["loss".to_string(), "target".to_string()];
    for est in &cfg.estimators {
        for r in &cfg.rsnr {
            header.push(format!("{}@{}", est.as_str(), r));
        }
    }
    out.write_record(&header)?;
    if !report.cells.is_empty() {
        for kind in [LossKind::L1, LossKind::Rmse] {
            for t in &cfg.targets {
                let mut row = vec![kind.label().to_string(), t.to_string()];
                for est in &cfg.estimators {
                    for &r in &cfg.rsnr {
                        row.push(match report.cell(t.as_str(), r, *est) {
                            Some(c) => c.mean(kind).to_string(),
                            None => String::new(),
                        });
                    }
                }
                out.write_record(&row)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn emit_report(report: &SimulationReport, format: ReportFormat, path: &Path) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    match format {
        ReportFormat::Csv => write_csv(report, file),
        ReportFormat::Json => {
            serde_json::to_writer_pretty(file, report)?;
            Ok(())
        }
    }
}

/// Reads a JSON report back.
pub fn load_report(path: &Path) -> Result<SimulationReport> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    Ok(serde_json::from_reader(file)?)
}
