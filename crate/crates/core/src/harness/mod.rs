//! Configuration, experiment orchestration and report files.
//!
//! [`run`] executes one [`ExperimentConfig`] and writes three files into the
//! output directory:
//!
//! - `results.csv`, long format with columns [`CSV_COLUMNS`];
//! - `summary.json`, the resolved config, derived constants, fits and status;
//! - `timing.json`, the wall time. It is kept apart so that the first two are
//!   byte-identical across reruns of the same config and seed.
//!
//! Population risks are Monte Carlo averages over a pool of `pool_size`
//! samples drawn from the run seed.

mod config;
mod diagnostics;
mod experiments;
mod report;

use std::path::Path;
use std::time::Instant;

pub use crate::stats::{fit_loglog, RateFit};
pub use config::{ChaosSection, DropoutSection, ExperimentConfig, ExperimentKind, ModelKind, PathSection};
pub use diagnostics::{check_assumptions, pachpatte_envelope, Check, CheckStatus, Diagnostics};
pub use experiments::Outcome;
pub use report::{
    write_reports, Derived, FitReport, Record, ReportPaths, Status, Summary, CSV_COLUMNS, CSV_FILE, SUMMARY_FILE,
    TIMING_FILE,
};

use crate::Result;

/// In-memory result of [`execute`].
#[derive(Debug)]
pub struct RunOutput {
    pub summary: Summary,
    pub records: Vec<Record>,
    /// Set when the run aborted; `records` then holds the completed jobs.
    pub error: Option<crate::Error>,
}

/// Runs the experiment without touching the file system.
///
/// Config errors are returned directly; numerical failures come back inside
/// [`RunOutput::error`] together with the partial results.
pub fn execute(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let kind = config.kind()?;
    let outcome = experiments::execute(config, kind);
    let derived = config
        .eps_list()
        .into_iter()
        .map(|eps| {
            let h = crate::dynamics::Hyper { eps, ..config.hyper };
            Derived {
                eps,
                momentum: h.momentum(),
                learning_rate: h.learning_rate(),
                steps: h.steps(),
                noise_scale: h.noise_scale(),
            }
        })
        .collect();
    let summary = Summary {
        experiment: kind.name(),
        mode: if config.uses_protocol_mode() {
            "protocol"
        } else {
            "one_pass"
        },
        status: if outcome.error.is_some() {
            Status::Aborted
        } else {
            Status::Ok
        },
        error: outcome.error.as_ref().map(|e| e.to_string()),
        config: config.clone(),
        derived,
        population_risk: format!(
            "risk is the mean loss over a fixed Monte Carlo pool of {} samples drawn from each run seed",
            config.pool_size
        ),
        rows: outcome.records.len(),
        fits: outcome.fits,
    };
    Ok(RunOutput {
        summary,
        records: outcome.records,
        error: outcome.error,
    })
}

/// Runs the experiment and writes the report files into `out_dir`.
///
/// On a numerical failure the completed part is written with status
/// `aborted` before the error is returned.
pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<ReportPaths> {
    let start = Instant::now();
    let out = execute(config)?;
    let paths = write_reports(out_dir, &out.records, &out.summary, start.elapsed().as_secs_f64())?;
    match out.error {
        Some(e) => Err(e),
        None => Ok(paths),
    }
}

/// Sizes the global worker pool used for parallel jobs. Call before any run.
pub fn set_threads(jobs: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build_global()
        .map_err(|e| crate::Error::InvalidArgument(format!("cannot size the worker pool: {e}")))
}
