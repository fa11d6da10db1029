use serde::{Deserialize, Serialize};

use super::runner::{record, HbRunner, NoisyRunner, PdRunner, ShbRunner, SnapshotGrid, Trajectory};
use super::{DataStream, Hyper};
use crate::datagen::{pool_risk, DataSource, Pool};
use crate::model::{Network, Objective};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DynamicsKind {
    Shb,
    Hb,
    Pd,
    Noisy,
}

impl DynamicsKind {
    pub fn name(self) -> &'static str {
        match self {
            DynamicsKind::Shb => "shb",
            DynamicsKind::Hb => "hb",
            DynamicsKind::Pd => "pd",
            DynamicsKind::Noisy => "noisy",
        }
    }
}

/// What to run and where to look.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSpec {
    pub kind: DynamicsKind,
    pub hyper: Hyper,
    pub objective: Objective,
    /// Size `M` of the Monte Carlo pool used for HB/PD gradients and for risk.
    pub pool_size: usize,
    /// Inner semi-implicit Euler steps per `ε` for PD.
    pub pd_substeps: u32,
    /// SHB minibatch size; 1 is the one-pass single-sample algorithm.
    pub batch_size: usize,
    /// Snapshot times; `None` records every grid point.
    pub snapshot_times: Option<Vec<f64>>,
}

impl TrainingSpec {
    pub fn new(kind: DynamicsKind, hyper: Hyper, objective: Objective) -> Self {
        Self {
            kind,
            hyper,
            objective,
            pool_size: 4096,
            pd_substeps: 16,
            batch_size: 1,
            snapshot_times: None,
        }
    }

    pub fn grid(&self) -> Result<SnapshotGrid> {
        match &self.snapshot_times {
            None => Ok(SnapshotGrid::every_step(&self.hyper)),
            Some(t) => SnapshotGrid::from_times(&self.hyper, t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskPoint {
    pub step: u64,
    pub time: f64,
    pub risk: f64,
}

#[derive(Debug, Clone)]
pub struct TrainingRun<N> {
    pub trajectory: Trajectory<N>,
    pub risk: Vec<RiskPoint>,
}

/// Runs `⌊T/ε⌋` steps of the chosen dynamics from `w0`.
///
/// The stream, pool and noise are all keyed by `spec.hyper.seed`.
pub fn run_training<N: Network>(w0: N, source: &DataSource, spec: &TrainingSpec) -> Result<TrainingRun<N>> {
    let h = spec.hyper;
    h.validate()?;
    if spec.pool_size == 0 {
        return Err(Error::config("pool_size", "must be at least 1"));
    }
    if spec.kind == DynamicsKind::Pd && spec.pd_substeps == 0 {
        return Err(Error::config("pd_substeps", "must be at least 1"));
    }
    let grid = spec.grid()?;
    let pool = Pool::draw(source, h.seed, spec.pool_size)?;
    let stream = || DataStream::new(source.clone(), h.seed);
    let obj = spec.objective;
    let trajectory = match spec.kind {
        DynamicsKind::Shb => record(
            &mut ShbRunner::new(w0, stream(), obj, h)?.with_batch(spec.batch_size)?,
            &grid,
        )?,
        DynamicsKind::Noisy => record(&mut NoisyRunner::new(w0, stream(), obj, h)?, &grid)?,
        DynamicsKind::Hb => record(&mut HbRunner::new(w0, &pool, obj, h)?, &grid)?,
        DynamicsKind::Pd => record(&mut PdRunner::new(w0, &pool, obj, h, spec.pd_substeps)?, &grid)?,
    };
    let risk = trajectory
        .snapshots
        .iter()
        .enumerate()
        .map(|(i, w)| RiskPoint {
            step: trajectory.steps[i],
            time: trajectory.time(i),
            risk: pool_risk(w, &pool, &obj),
        })
        .collect();
    Ok(TrainingRun { trajectory, risk })
}
