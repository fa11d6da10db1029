use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind, ModelKind};
use super::report::{FitReport, Record};
use crate::coupling::{
    chaos_experiment, dist_3l, embed_3l, ChaosConfig, ChaosMetric, IndexMaps, RefPool3L, PROXY_PARAM_LIMIT,
};
use crate::datagen::rng::{mix_seed, tags};
use crate::datagen::{init_2l, init_3l, DataSource, Pool};
use crate::dynamics::{
    record, run_training, DataStream, DynamicsKind, HbRunner, Hyper, PdRunner, ShbRunner, SnapshotGrid, TrainingSpec,
    Trajectory,
};
use crate::landscape::{
    build_path_2l, dropout_error, random_half_subset, risk_along_path, DropoutSpec2L, DropoutSpec3L,
};
use crate::model::{Network, Params2L, Params3L};
use crate::numeric::{mean, median};
use crate::stats::fit_loglog;
use crate::{Error, Result};

/// Everything an experiment produced, including what finished before an abort.
#[derive(Debug)]
pub struct Outcome {
    pub records: Vec<Record>,
    pub fits: Vec<FitReport>,
    pub error: Option<Error>,
}

impl Outcome {
    fn from_jobs(results: Vec<Result<Vec<Record>>>) -> Self {
        let mut records = Vec::new();
        let mut error = None;
        for r in results {
            match r {
                Ok(rows) => records.extend(rows),
                Err(e) => {
                    error.get_or_insert(e);
                }
            }
        }
        Self {
            records,
            fits: Vec::new(),
            error,
        }
    }
}

/// Widths and layer accessors needed by the orchestration, for both depths.
trait Arch: Network + 'static {
    fn init(cfg: &ExperimentConfig, width: usize, seed: u64) -> Result<Self>;
    fn output_layer(&self) -> &[f64];
    fn output_name() -> &'static str;
    fn dropout(&self, seed: u64, index: u64, pool: &Pool, cfg: &ExperimentConfig) -> Result<f64>;
}

impl Arch for Params2L {
    fn init(cfg: &ExperimentConfig, width: usize, seed: u64) -> Result<Self> {
        init_2l(&cfg.init, width, cfg.data.dim, seed)
    }

    fn output_layer(&self) -> &[f64] {
        self.w2()
    }

    fn output_name() -> &'static str {
        "max_abs_w2"
    }

    fn dropout(&self, seed: u64, index: u64, pool: &Pool, cfg: &ExperimentConfig) -> Result<f64> {
        let spec = DropoutSpec2L {
            subset: random_half_subset(self.width(), seed, index),
        };
        dropout_error(self, &spec, pool, &cfg.objective)
    }
}

impl Arch for Params3L {
    fn init(cfg: &ExperimentConfig, width: usize, seed: u64) -> Result<Self> {
        init_3l(&cfg.init, width, width, cfg.data.dim, seed)
    }

    fn output_layer(&self) -> &[f64] {
        self.w3()
    }

    fn output_name() -> &'static str {
        "max_abs_w3"
    }

    fn dropout(&self, seed: u64, index: u64, pool: &Pool, cfg: &ExperimentConfig) -> Result<f64> {
        let (n1, n2) = self.widths();
        let spec = DropoutSpec3L {
            first: random_half_subset(n1, seed, 2 * index),
            second: random_half_subset(n2, seed, 2 * index + 1),
        };
        dropout_error(self, &spec, pool, &cfg.objective)
    }
}

pub(crate) fn execute(cfg: &ExperimentConfig, kind: ExperimentKind) -> Outcome {
    match (kind, cfg.model) {
        (ExperimentKind::Train, ModelKind::TwoLayer) => train::<Params2L>(cfg, kind, cfg.dynamics),
        (ExperimentKind::Train, ModelKind::ThreeLayer) => train::<Params3L>(cfg, kind, cfg.dynamics),
        (ExperimentKind::Noisy, ModelKind::TwoLayer) => train::<Params2L>(cfg, kind, DynamicsKind::Noisy),
        (ExperimentKind::Noisy, ModelKind::ThreeLayer) => train::<Params3L>(cfg, kind, DynamicsKind::Noisy),
        (ExperimentKind::DropoutScan, ModelKind::TwoLayer) => dropout_scan::<Params2L>(cfg),
        (ExperimentKind::DropoutScan, ModelKind::ThreeLayer) => dropout_scan::<Params3L>(cfg),
        (ExperimentKind::Couple, ModelKind::TwoLayer) => chaos(cfg, kind),
        (ExperimentKind::Couple, ModelKind::ThreeLayer) => couple_3l(cfg),
        (ExperimentKind::Chaos, _) => chaos(cfg, kind),
        (ExperimentKind::Connect, _) => connect(cfg),
    }
}

fn source(cfg: &ExperimentConfig) -> Result<DataSource> {
    DataSource::new(&cfg.data)
}

fn jobs(cfg: &ExperimentConfig) -> Vec<(usize, u64)> {
    cfg.widths
        .iter()
        .flat_map(|&n| cfg.seed_list().into_iter().map(move |s| (n, s)))
        .collect()
}

fn training_spec(cfg: &ExperimentConfig, kind: DynamicsKind, seed: u64, times: Option<Vec<f64>>) -> TrainingSpec {
    TrainingSpec {
        kind,
        hyper: cfg.hyper.with_seed(seed),
        objective: cfg.objective,
        pool_size: cfg.pool_size,
        pd_substeps: cfg.pd_substeps,
        batch_size: if kind == DynamicsKind::Shb { cfg.batch_size } else { 1 },
        snapshot_times: times,
    }
}

fn train<N: Arch>(cfg: &ExperimentConfig, experiment: ExperimentKind, dynamics: DynamicsKind) -> Outcome {
    let name = experiment.name();
    let source = match source(cfg) {
        Ok(s) => s,
        Err(e) => return Outcome::from_jobs(vec![Err(e)]),
    };
    let results = jobs(cfg)
        .par_iter()
        .map(|&(n, seed)| -> Result<Vec<Record>> {
            let w0 = N::init(cfg, n, seed)?;
            let spec = training_spec(cfg, dynamics, seed, cfg.snapshot_times.clone());
            let run = run_training(w0, &source, &spec)?;
            let mut rows = Vec::new();
            for (i, p) in run.risk.iter().enumerate() {
                let row = |metric: &str, value: f64| Record {
                    experiment: name,
                    width: Some(n),
                    eps: Some(cfg.hyper.eps),
                    seed: Some(seed),
                    time: Some(p.time),
                    metric: metric.to_string(),
                    value,
                };
                rows.push(row("risk", p.risk));
                if experiment == ExperimentKind::Noisy {
                    let w = &run.trajectory.snapshots[i];
                    let m = w.output_layer().iter().fold(0.0f64, |m, v| m.max(v.abs()));
                    rows.push(row(N::output_name(), m));
                }
            }
            Ok(rows)
        })
        .collect();
    Outcome::from_jobs(results)
}

fn dropout_scan<N: Arch>(cfg: &ExperimentConfig) -> Outcome {
    let name = ExperimentKind::DropoutScan.name();
    let source = match source(cfg) {
        Ok(s) => s,
        Err(e) => return Outcome::from_jobs(vec![Err(e)]),
    };
    let horizon = cfg.hyper.horizon;
    let results: Vec<Result<Vec<Record>>> = jobs(cfg)
        .par_iter()
        .map(|&(n, seed)| {
            let w0 = N::init(cfg, n, seed)?;
            let spec = training_spec(cfg, DynamicsKind::Shb, seed, Some(vec![horizon]));
            let run = run_training(w0, &source, &spec)?;
            let w = run.trajectory.last().expect("grid always holds the final step");
            let pool = Pool::draw(&source, seed, cfg.pool_size)?;
            let row = |metric: String, value: f64| Record {
                experiment: name,
                width: Some(n),
                eps: Some(cfg.hyper.eps),
                seed: Some(seed),
                time: Some(run.trajectory.time(run.trajectory.len() - 1)),
                metric,
                value,
            };
            let mut rows = vec![row("risk".into(), run.risk.last().map_or(f64::NAN, |r| r.risk))];
            let errors = (0..cfg.dropout.subsets as u64)
                .map(|i| w.dropout(seed, i, &pool, cfg))
                .collect::<Result<Vec<f64>>>()?;
            for (i, e) in errors.iter().enumerate() {
                rows.push(row(format!("eps_d#{i}"), *e));
            }
            rows.push(row("eps_d_mean".into(), mean(&errors).unwrap_or(f64::NAN)));
            Ok(rows)
        })
        .collect();
    let mut out = Outcome::from_jobs(results);
    if out.error.is_none() {
        if let Err(e) = width_summary(cfg, name, "eps_d_mean", "eps_d", &mut out) {
            out.error = Some(e);
        }
    }
    out
}

/// Adds per-width mean and median over seeds of `metric`, and a width fit of the mean.
fn width_summary(
    cfg: &ExperimentConfig,
    name: &'static str,
    metric: &str,
    fit_name: &str,
    out: &mut Outcome,
) -> Result<()> {
    let mut widths = cfg.widths.clone();
    widths.sort_unstable();
    widths.dedup();
    let mut points = Vec::new();
    let mut extra = Vec::new();
    for n in widths {
        let values: Vec<f64> = out
            .records
            .iter()
            .filter(|r| r.width == Some(n) && r.metric == metric)
            .map(|r| r.value)
            .collect();
        let (Some(m), Some(md)) = (mean(&values), median(&values)) else {
            continue;
        };
        for (suffix, v) in [("mean", m), ("median", md)] {
            extra.push(Record {
                experiment: name,
                width: Some(n),
                eps: Some(cfg.hyper.eps),
                seed: None,
                time: None,
                metric: format!("{fit_name}.{suffix}"),
                value: v,
            });
        }
        points.push((n as f64, m));
    }
    out.records.extend(extra);
    if points.len() >= 3 && points.iter().all(|p| p.1 > 0.0) {
        let fit = fit_loglog(&points)?;
        let report = FitReport {
            metric: fit_name.to_string(),
            axis: "width".into(),
            fixed: Some(cfg.hyper.eps),
            exponent: fit.slope,
            fit: Some(fit),
        };
        out.records.extend(report.records(name));
        out.fits.push(report);
    }
    Ok(())
}

fn chaos(cfg: &ExperimentConfig, experiment: ExperimentKind) -> Outcome {
    let name = experiment.name();
    let chaos_cfg = ChaosConfig {
        widths: cfg.widths.clone(),
        eps: cfg.eps_list(),
        seeds: cfg.seed_list(),
        gamma: cfg.hyper.gamma,
        horizon: cfg.hyper.horizon,
        n_ref: cfg.chaos.n_ref,
        pd_substeps: cfg.pd_substeps,
        proxy_substeps: cfg.chaos.proxy_substeps,
        pool_size: cfg.pool_size,
        metrics: cfg.chaos.metrics.clone(),
        data: cfg.data.clone(),
        init: cfg.init.clone(),
        objective: cfg.objective,
    };
    let table = match chaos_experiment(&chaos_cfg) {
        Ok(t) => t,
        Err(e) => return Outcome::from_jobs(vec![Err(e)]),
    };
    let mut records = Vec::new();
    for row in &table.rows {
        let base = |time: f64, metric: String, value: f64| Record {
            experiment: name,
            width: Some(row.width),
            eps: Some(row.eps),
            seed: Some(row.seed),
            time: Some(time),
            metric,
            value,
        };
        if experiment == ExperimentKind::Couple {
            for (t, v) in row.times.iter().zip(&row.values) {
                records.push(base(*t, row.metric.name().to_string(), *v));
            }
        }
        records.push(base(cfg.hyper.horizon, format!("{}.sup", row.metric.name()), row.sup));
    }
    for m in &table.medians {
        records.push(Record {
            experiment: name,
            width: Some(m.width),
            eps: Some(m.eps),
            seed: None,
            time: Some(cfg.hyper.horizon),
            metric: format!("{}.median", m.metric.name()),
            value: m.median,
        });
    }
    let fits: Vec<FitReport> = table
        .fits
        .iter()
        .map(|f| FitReport {
            metric: f.metric.name().to_string(),
            axis: f.axis.to_string(),
            fixed: Some(f.fixed),
            exponent: f.exponent,
            fit: f.fit.clone(),
        })
        .collect();
    for f in &fits {
        records.extend(f.records(name));
    }
    Outcome {
        records,
        fits,
        error: None,
    }
}

/// Large-width PD reference versus finite networks drawn from it by index maps.
fn couple_3l(cfg: &ExperimentConfig) -> Outcome {
    let setup = || -> Result<(DataSource, usize)> {
        let source = source(cfg)?;
        let widest = *cfg.widths.iter().max().unwrap_or(&1);
        let n_ref = cfg.chaos.n_ref.unwrap_or(4 * widest);
        if n_ref < widest {
            return Err(Error::config(
                "chaos.n_ref",
                "reference width must be at least the largest width",
            ));
        }
        let params = n_ref * (cfg.data.dim + n_ref + 1);
        if params > PROXY_PARAM_LIMIT {
            return Err(Error::config(
                "chaos.n_ref",
                format!("reference needs {params} parameters, above the limit of {PROXY_PARAM_LIMIT}"),
            ));
        }
        Ok((source, n_ref))
    };
    let (source, n_ref) = match setup() {
        Ok(s) => s,
        Err(e) => return Outcome::from_jobs(vec![Err(e)]),
    };
    let eps_seeds: Vec<(f64, u64)> = cfg
        .eps_list()
        .into_iter()
        .flat_map(|e| cfg.seed_list().into_iter().map(move |s| (e, s)))
        .collect();
    let results = eps_seeds
        .par_iter()
        .map(|&(eps, seed)| couple_3l_job(cfg, &source, n_ref, eps, seed))
        .collect();
    Outcome::from_jobs(results)
}

fn couple_3l_job(
    cfg: &ExperimentConfig,
    source: &DataSource,
    n_ref: usize,
    eps: f64,
    seed: u64,
) -> Result<Vec<Record>> {
    let name = ExperimentKind::Couple.name();
    let hyper = Hyper { eps, seed, ..cfg.hyper };
    hyper.validate()?;
    let grid = SnapshotGrid::every_step(&hyper);
    let pool = Pool::draw(source, seed, cfg.pool_size)?;
    let stream = DataStream::new(source.clone(), seed);
    let reference = RefPool3L::new(&cfg.init, n_ref, n_ref, cfg.data.dim, seed)?;
    let wants = |m: ChaosMetric| cfg.chaos.metrics.contains(&m);
    let needs_proxy = wants(ChaosMetric::ProxyShb) || wants(ChaosMetric::ProxyPd);
    let substeps = cfg.chaos.proxy_substeps.unwrap_or(cfg.pd_substeps);
    let proxy: Option<Trajectory<Params3L>> = needs_proxy
        .then(|| {
            let mut r = PdRunner::new(reference.params.clone(), &pool, cfg.objective, hyper, substeps)?;
            record(&mut r, &grid)
        })
        .transpose()?;
    let mut rows = Vec::new();
    let mut widths = cfg.widths.clone();
    widths.sort_unstable();
    widths.dedup();
    for n in widths {
        let (w0, maps) = embed_3l(&reference, n, n, seed)?;
        let shb = (wants(ChaosMetric::ProxyShb) || wants(ChaosMetric::HbShb))
            .then(|| {
                record(
                    &mut ShbRunner::new(w0.clone(), stream.clone(), cfg.objective, hyper)?,
                    &grid,
                )
            })
            .transpose()?;
        let pd = (wants(ChaosMetric::ProxyPd) || wants(ChaosMetric::PdHb))
            .then(|| {
                let mut r = PdRunner::new(w0.clone(), &pool, cfg.objective, hyper, cfg.pd_substeps)?;
                record(&mut r, &grid)
            })
            .transpose()?;
        let hb = (wants(ChaosMetric::PdHb) || wants(ChaosMetric::HbShb))
            .then(|| record(&mut HbRunner::new(w0.clone(), &pool, cfg.objective, hyper)?, &grid))
            .transpose()?;
        let same = IndexMaps::identity(n, n);
        for metric in ChaosMetric::ALL.into_iter().filter(|m| wants(*m)) {
            let report = match metric {
                ChaosMetric::ProxyShb => dist_3l(proxy.as_ref().unwrap(), shb.as_ref().unwrap(), &maps, metric.name()),
                ChaosMetric::ProxyPd => dist_3l(proxy.as_ref().unwrap(), pd.as_ref().unwrap(), &maps, metric.name()),
                ChaosMetric::PdHb => dist_3l(pd.as_ref().unwrap(), hb.as_ref().unwrap(), &same, metric.name()),
                ChaosMetric::HbShb => dist_3l(hb.as_ref().unwrap(), shb.as_ref().unwrap(), &same, metric.name()),
            }?;
            let row = |time: f64, metric: String, value: f64| Record {
                experiment: name,
                width: Some(n),
                eps: Some(eps),
                seed: Some(seed),
                time: Some(time),
                metric,
                value,
            };
            for (t, v) in report.times.iter().zip(&report.values) {
                rows.push(row(*t, metric.name().to_string(), *v));
            }
            rows.push(row(hyper.horizon, format!("{}.sup", metric.name()), report.sup));
        }
    }
    Ok(rows)
}

/// Trains `W` and `W′` from independent initialisations on the stream of seed
/// `s`, then walks the five-segment path between them. `time` holds the path
/// position in `[0, 5]`.
fn connect(cfg: &ExperimentConfig) -> Outcome {
    let name = ExperimentKind::Connect.name();
    let source = match source(cfg) {
        Ok(s) => s,
        Err(e) => return Outcome::from_jobs(vec![Err(e)]),
    };
    let horizon = cfg.hyper.horizon;
    let results: Vec<Result<Vec<Record>>> = jobs(cfg)
        .par_iter()
        .map(|&(n, seed)| {
            let spec = training_spec(cfg, DynamicsKind::Shb, seed, Some(vec![horizon]));
            let trained = |init_seed: u64| -> Result<Params2L> {
                let run = run_training(Params2L::init(cfg, n, init_seed)?, &source, &spec)?;
                Ok(run.trajectory.snapshots.into_iter().last().expect("final snapshot"))
            };
            let w = trained(seed)?;
            let w_prime = trained(mix_seed(seed, tags::PARTNER))?;
            let path = build_path_2l(&w, &w_prime, seed)?;
            let pool = Pool::draw(&source, seed, cfg.pool_size)?;
            let risk = risk_along_path(&path, &pool, &cfg.objective, cfg.path.points_per_segment)?;
            let row = |time: Option<f64>, metric: &str, value: f64| Record {
                experiment: name,
                width: Some(n),
                eps: Some(cfg.hyper.eps),
                seed: Some(seed),
                time,
                metric: metric.to_string(),
                value,
            };
            let mut rows: Vec<Record> = risk
                .points
                .iter()
                .map(|p| row(Some(p.segment as f64 + p.t), "path_risk", p.risk))
                .collect();
            rows.push(row(None, "start_risk", risk.start_risk));
            rows.push(row(None, "end_risk", risk.end_risk));
            rows.push(row(None, "max_risk", risk.max_risk));
            rows.push(row(None, "eps_c", risk.eps_c));
            Ok(rows)
        })
        .collect();
    let mut out = Outcome::from_jobs(results);
    if out.error.is_none() {
        if let Err(e) = width_summary(cfg, name, "eps_c", "eps_c", &mut out) {
            out.error = Some(e);
        }
    }
    out
}
