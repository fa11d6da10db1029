use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use crate::stats::RateFit;
use crate::{Error, Result};

/// Fixed CSV header, one row per measurement.
pub const CSV_COLUMNS: [&str; 7] = ["experiment", "width", "eps", "seed", "time", "metric", "value"];

pub const CSV_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const TIMING_FILE: &str = "timing.json";

/// One measurement. Aggregates over seeds leave `seed` empty; fits leave
/// `width` or `eps` empty along the fitted axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub experiment: &'static str,
    pub width: Option<usize>,
    pub eps: Option<f64>,
    pub seed: Option<u64>,
    pub time: Option<f64>,
    pub metric: String,
    pub value: f64,
}

/// Power-law exponent of a reported quantity along one axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub metric: String,
    /// `width` or `eps`.
    pub axis: String,
    /// Value of the other axis, when one is held fixed.
    pub fixed: Option<f64>,
    pub exponent: f64,
    /// Least-squares fit; absent when only two points exist.
    pub fit: Option<RateFit>,
}

impl FitReport {
    pub(crate) fn records(&self, experiment: &'static str) -> Vec<Record> {
        let (width, eps) = match self.axis.as_str() {
            "eps" => (self.fixed.map(|w| w as usize), None),
            _ => (None, self.fixed),
        };
        let mut out = vec![("exponent", self.exponent)];
        if let Some(f) = &self.fit {
            out.push(("intercept", f.intercept));
            out.push(("r2", f.r2));
        }
        out.into_iter()
            .map(|(name, value)| Record {
                experiment,
                width,
                eps,
                seed: None,
                time: None,
                metric: format!("fit.{}.{}.{name}", self.metric, self.axis),
                value,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Aborted,
}

#[derive(Debug, Clone, Serialize)]
pub struct Derived {
    pub eps: f64,
    pub momentum: f64,
    pub learning_rate: f64,
    pub steps: u64,
    pub noise_scale: f64,
}

/// Contents of `summary.json`. Free of timing so that reruns are byte-identical.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub experiment: &'static str,
    /// `one_pass` for single-sample SHB, `protocol` for minibatches.
    pub mode: &'static str,
    pub status: Status,
    pub error: Option<String>,
    pub config: ExperimentConfig,
    pub derived: Vec<Derived>,
    pub population_risk: String,
    pub rows: usize,
    pub fits: Vec<FitReport>,
}

/// Writes the three report files. NaN or infinite values are refused before
/// anything is written.
pub fn write_reports(dir: &Path, records: &[Record], summary: &Summary, wall_seconds: f64) -> Result<ReportPaths> {
    if let Some(row) = records.iter().position(|r| !r.value.is_finite()) {
        return Err(Error::NonFinite {
            step: 0,
            coordinate: row,
            context: "report row",
        });
    }
    fs::create_dir_all(dir)?;
    let paths = ReportPaths::new(dir);
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(&paths.csv)
        .map_err(csv_error)?;
    w.write_record(CSV_COLUMNS).map_err(csv_error)?;
    for r in records {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;
    write_json(&paths.summary, summary)?;
    write_json(&paths.timing, &serde_json::json!({ "wall_seconds": wall_seconds }))?;
    Ok(paths)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportPaths {
    pub csv: PathBuf,
    pub summary: PathBuf,
    pub timing: PathBuf,
}

impl ReportPaths {
    pub fn new(dir: &Path) -> Self {
        Self {
            csv: dir.join(CSV_FILE),
            summary: dir.join(SUMMARY_FILE),
            timing: dir.join(TIMING_FILE),
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidArgument(format!("csv: {other:?}")),
    }
}
