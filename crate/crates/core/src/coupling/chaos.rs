use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{couple_2l, dist_2l, mf_proxy, Coupling2L};
use crate::datagen::{DataSource, DataSpec, InitSpec};
use crate::dynamics::{Hyper, Trajectory};
use crate::model::{Objective, Params2L};
use crate::numeric::median;
use crate::stats::{fit_loglog, two_point_exponent, RateFit};
use crate::{Error, Result};

/// Pairwise distances measured by [`chaos_experiment`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChaosMetric {
    ProxyShb,
    ProxyPd,
    PdHb,
    HbShb,
}

impl ChaosMetric {
    pub const ALL: [ChaosMetric; 4] = [Self::ProxyShb, Self::ProxyPd, Self::PdHb, Self::HbShb];

    pub fn name(self) -> &'static str {
        match self {
            Self::ProxyShb => "d_proxy_shb",
            Self::ProxyPd => "d_proxy_pd",
            Self::PdHb => "d_pd_hb",
            Self::HbShb => "d_hb_shb",
        }
    }

    fn needs_proxy(self) -> bool {
        matches!(self, Self::ProxyShb | Self::ProxyPd)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChaosConfig {
    pub widths: Vec<usize>,
    pub eps: Vec<f64>,
    pub seeds: Vec<u64>,
    pub gamma: f64,
    pub horizon: f64,
    /// Proxy width; defaults to 16 times the largest width.
    pub n_ref: Option<usize>,
    pub pd_substeps: u32,
    /// Inner steps of the proxy; defaults to `pd_substeps`.
    pub proxy_substeps: Option<u32>,
    pub pool_size: usize,
    pub metrics: Vec<ChaosMetric>,
    pub data: DataSpec,
    pub init: InitSpec,
    pub objective: Objective,
}

impl Default for ChaosConfig {
    fn default() -> Self {
        Self {
            widths: vec![64, 256, 1024],
            eps: vec![0.05],
            seeds: vec![0],
            gamma: 1.0,
            horizon: 1.0,
            n_ref: None,
            pd_substeps: 16,
            proxy_substeps: None,
            pool_size: 4096,
            metrics: ChaosMetric::ALL.to_vec(),
            data: DataSpec::default(),
            init: InitSpec::default(),
            objective: Objective::default(),
        }
    }
}

/// `D_T` for one `(width, eps, seed, metric)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChaosRow {
    pub width: usize,
    pub eps: f64,
    pub seed: u64,
    pub metric: ChaosMetric,
    pub sup: f64,
    pub times: Vec<f64>,
    /// Max over neurons at each grid time.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MedianRow {
    pub width: usize,
    pub eps: f64,
    pub metric: ChaosMetric,
    pub median: f64,
}

/// Exponent of a median distance along one axis with the other held fixed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChaosFit {
    pub metric: ChaosMetric,
    /// `width` or `eps`.
    pub axis: &'static str,
    /// Value of the other axis.
    pub fixed: f64,
    /// Least-squares exponent, or the two-point exponent when only two values exist.
    pub exponent: f64,
    /// Present with at least three points.
    pub fit: Option<RateFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateTable {
    pub rows: Vec<ChaosRow>,
    pub medians: Vec<MedianRow>,
    pub fits: Vec<ChaosFit>,
}

impl RateTable {
    pub fn median(&self, metric: ChaosMetric, width: usize, eps: f64) -> Option<f64> {
        self.medians
            .iter()
            .find(|m| m.metric == metric && m.width == width && m.eps == eps)
            .map(|m| m.median)
    }

    pub fn fit(&self, metric: ChaosMetric, axis: &str) -> Option<&ChaosFit> {
        self.fits.iter().find(|f| f.metric == metric && f.axis == axis)
    }
}

fn validate(cfg: &ChaosConfig) -> Result<usize> {
    if cfg.widths.is_empty() || cfg.eps.is_empty() || cfg.seeds.is_empty() {
        return Err(Error::config(
            "chaos",
            "insufficient grid: widths, eps and seeds must be non-empty",
        ));
    }
    if cfg.metrics.is_empty() {
        return Err(Error::config("chaos.metrics", "at least one metric is required"));
    }
    if cfg.widths.contains(&0) {
        return Err(Error::config("widths", "widths must be positive"));
    }
    let widest = *cfg.widths.iter().max().unwrap_or(&1);
    let n_ref = cfg.n_ref.unwrap_or(16 * widest);
    if cfg.metrics.iter().any(|m| m.needs_proxy()) && n_ref < 4 * widest {
        return Err(Error::config(
            "n_ref",
            format!("proxy width {n_ref} must be at least four times the largest width {widest}"),
        ));
    }
    Ok(n_ref)
}

fn run_job(cfg: &ChaosConfig, source: &DataSource, n_ref: usize, eps: f64, seed: u64) -> Result<Vec<ChaosRow>> {
    let hyper = Hyper::new(cfg.gamma, eps, cfg.horizon, seed)?;
    let wants = |m: ChaosMetric| cfg.metrics.contains(&m);
    let couple = |n: usize| couple_2l(n, &cfg.init, source, cfg.objective, hyper, cfg.pool_size);
    let proxy = if cfg.metrics.iter().any(|m| m.needs_proxy()) {
        let widest = couple(*cfg.widths.iter().max().unwrap_or(&1))?;
        Some(mf_proxy(n_ref, cfg.proxy_substeps.unwrap_or(cfg.pd_substeps), &widest)?)
    } else {
        None
    };
    let mut rows = Vec::new();
    for &n in &cfg.widths {
        let c: Coupling2L = couple(n)?;
        let need_shb = wants(ChaosMetric::ProxyShb) || wants(ChaosMetric::HbShb);
        let need_pd = wants(ChaosMetric::ProxyPd) || wants(ChaosMetric::PdHb);
        let need_hb = wants(ChaosMetric::PdHb) || wants(ChaosMetric::HbShb);
        let shb = need_shb.then(|| c.shb()).transpose()?;
        let pd = need_pd.then(|| c.pd(cfg.pd_substeps)).transpose()?;
        let hb = need_hb.then(|| c.hb()).transpose()?;
        let proxy_n: Option<Trajectory<Params2L>> = proxy.as_ref().map(|p| p.try_map(|w| w.prefix(n))).transpose()?;
        for metric in ChaosMetric::ALL.into_iter().filter(|&m| wants(m)) {
            let pair = match metric {
                ChaosMetric::ProxyShb => (proxy_n.as_ref(), shb.as_ref()),
                ChaosMetric::ProxyPd => (proxy_n.as_ref(), pd.as_ref()),
                ChaosMetric::PdHb => (pd.as_ref(), hb.as_ref()),
                ChaosMetric::HbShb => (hb.as_ref(), shb.as_ref()),
            };
            let (Some(a), Some(b)) = pair else {
                unreachable!("trajectories for requested metrics are always computed")
            };
            let report = dist_2l(a, b, metric.name())?;
            rows.push(ChaosRow {
                width: n,
                eps,
                seed,
                metric,
                sup: report.sup,
                times: report.times,
                values: report.values,
            });
        }
    }
    Ok(rows)
}

/// Coupled two-layer runs over `widths × eps × seeds` and their rate summary.
///
/// Jobs `(eps, seed)` run in parallel on the current rayon pool and share one
/// proxy across widths. Medians are taken over seeds; width exponents are
/// fitted at the smallest `eps` and step-size exponents at the largest width.
pub fn chaos_experiment(cfg: &ChaosConfig) -> Result<RateTable> {
    let n_ref = validate(cfg)?;
    let source = DataSource::new(&cfg.data)?;
    let jobs: Vec<(f64, u64)> = cfg
        .eps
        .iter()
        .flat_map(|&e| cfg.seeds.iter().map(move |&s| (e, s)))
        .collect();
    let results: Vec<Vec<ChaosRow>> = jobs
        .par_iter()
        .map(|&(eps, seed)| run_job(cfg, &source, n_ref, eps, seed))
        .collect::<Result<_>>()?;
    let mut rows: Vec<ChaosRow> = results.into_iter().flatten().collect();
    rows.sort_by(|a, b| {
        (a.metric, a.width, a.eps.to_bits(), a.seed).cmp(&(b.metric, b.width, b.eps.to_bits(), b.seed))
    });
    let medians = medians(cfg, &rows);
    let fits = fits(cfg, &medians)?;
    Ok(RateTable { rows, medians, fits })
}

fn sorted_unique<T: Copy + PartialOrd>(v: &[T]) -> Vec<T> {
    let mut out = v.to_vec();
    out.sort_by(|a, b| a.partial_cmp(b).expect("finite grid values"));
    out.dedup_by(|a, b| a == b);
    out
}

fn medians(cfg: &ChaosConfig, rows: &[ChaosRow]) -> Vec<MedianRow> {
    let mut out = Vec::new();
    for metric in ChaosMetric::ALL.into_iter().filter(|m| cfg.metrics.contains(m)) {
        for &width in &sorted_unique(&cfg.widths) {
            for &eps in &sorted_unique(&cfg.eps) {
                let values: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.metric == metric && r.width == width && r.eps == eps)
                    .map(|r| r.sup)
                    .collect();
                if let Some(m) = median(&values) {
                    out.push(MedianRow {
                        width,
                        eps,
                        metric,
                        median: m,
                    });
                }
            }
        }
    }
    out
}

fn axis_fit(metric: ChaosMetric, axis: &'static str, fixed: f64, pts: &[(f64, f64)]) -> Result<Option<ChaosFit>> {
    if pts.iter().any(|p| p.1 <= 0.0) {
        return Ok(None);
    }
    Ok(match pts.len() {
        0 | 1 => None,
        2 => two_point_exponent(pts[0], pts[1]).map(|exponent| ChaosFit {
            metric,
            axis,
            fixed,
            exponent,
            fit: None,
        }),
        _ => {
            let fit = fit_loglog(pts)?;
            Some(ChaosFit {
                metric,
                axis,
                fixed,
                exponent: fit.slope,
                fit: Some(fit),
            })
        }
    })
}

fn fits(cfg: &ChaosConfig, medians: &[MedianRow]) -> Result<Vec<ChaosFit>> {
    let widths = sorted_unique(&cfg.widths);
    let eps = sorted_unique(&cfg.eps);
    let (eps_min, width_max) = (eps[0], widths[widths.len() - 1]);
    let mut out = Vec::new();
    for metric in ChaosMetric::ALL.into_iter().filter(|m| cfg.metrics.contains(m)) {
        let pick = |w: usize, e: f64| {
            medians
                .iter()
                .find(|m| m.metric == metric && m.width == w && m.eps == e)
                .map(|m| m.median)
        };
        let along_width: Vec<(f64, f64)> = widths
            .iter()
            .filter_map(|&w| pick(w, eps_min).map(|d| (w as f64, d)))
            .collect();
        out.extend(axis_fit(metric, "width", eps_min, &along_width)?);
        let along_eps: Vec<(f64, f64)> = eps.iter().filter_map(|&e| pick(width_max, e).map(|d| (e, d))).collect();
        out.extend(axis_fit(metric, "eps", width_max as f64, &along_eps)?);
    }
    Ok(out)
}
