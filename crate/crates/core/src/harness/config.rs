use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coupling::ChaosMetric;
use crate::datagen::{DataSpec, InitCoupling, InitSpec};
use crate::dynamics::{DynamicsKind, Hyper};
use crate::model::{Loss, Objective};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Train,
    Couple,
    Chaos,
    DropoutScan,
    Connect,
    Noisy,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Train => "train",
            Self::Couple => "couple",
            Self::Chaos => "chaos",
            Self::DropoutScan => "dropout_scan",
            Self::Connect => "connect",
            Self::Noisy => "noisy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[default]
    TwoLayer,
    /// Square three-layer networks, `n1 = n2 = width`.
    ThreeLayer,
}

/// Proxy and metric settings for `chaos` and `couple`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChaosSection {
    /// Step sizes; defaults to `[hyper.eps]`.
    #[serde(default)]
    pub eps_list: Option<Vec<f64>>,
    /// Reference width; defaults to 16 times the largest width.
    #[serde(default)]
    pub n_ref: Option<usize>,
    #[serde(default)]
    pub proxy_substeps: Option<u32>,
    #[serde(default = "all_metrics")]
    pub metrics: Vec<ChaosMetric>,
}

fn all_metrics() -> Vec<ChaosMetric> {
    ChaosMetric::ALL.to_vec()
}

impl Default for ChaosSection {
    fn default() -> Self {
        Self {
            eps_list: None,
            n_ref: None,
            proxy_substeps: None,
            metrics: all_metrics(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DropoutSection {
    /// Random half subsets per trained network.
    #[serde(default = "default_subsets")]
    pub subsets: usize,
}

fn default_subsets() -> usize {
    10
}

impl Default for DropoutSection {
    fn default() -> Self {
        Self {
            subsets: default_subsets(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSection {
    #[serde(default = "default_path_points")]
    pub points_per_segment: usize,
}

fn default_path_points() -> usize {
    64
}

impl Default for PathSection {
    fn default() -> Self {
        Self {
            points_per_segment: default_path_points(),
        }
    }
}

/// One experiment, read from a JSON file. Unknown keys are errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional; must agree with the CLI subcommand when both are given.
    #[serde(default)]
    pub experiment: Option<ExperimentKind>,
    #[serde(default)]
    pub model: ModelKind,
    #[serde(default = "default_widths")]
    pub widths: Vec<usize>,
    #[serde(default)]
    pub hyper: Hyper,
    /// Seeds of independent repetitions; `hyper.seed` is ignored when non-empty.
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub data: DataSpec,
    #[serde(default)]
    pub init: InitSpec,
    #[serde(default)]
    pub objective: Objective,
    /// Dynamics for `train`.
    #[serde(default = "default_dynamics")]
    pub dynamics: DynamicsKind,
    #[serde(default = "default_pool_size")]
    pub pool_size: usize,
    #[serde(default = "default_pd_substeps")]
    pub pd_substeps: u32,
    /// SHB minibatch size; values above 1 select protocol mode.
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub snapshot_times: Option<Vec<f64>>,
    #[serde(default)]
    pub chaos: ChaosSection,
    #[serde(default)]
    pub dropout: DropoutSection,
    #[serde(default)]
    pub path: PathSection,
    /// Permits the square loss, whose derivative is unbounded.
    #[serde(default)]
    pub allow_unbounded_loss: bool,
    /// Output directory; the command line takes precedence.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

fn default_widths() -> Vec<usize> {
    vec![100]
}

fn default_dynamics() -> DynamicsKind {
    DynamicsKind::Shb
}

fn default_pool_size() -> usize {
    4096
}

fn default_pd_substeps() -> u32 {
    16
}

fn default_batch() -> usize {
    1
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(
                if path.is_empty() { ".".to_string() } else { path },
                e.into_inner().to_string(),
            )
        })?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), format!("cannot read config: {e}")))?;
        Self::from_json(&text)
    }

    /// Seeds of the repetitions.
    pub fn seed_list(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            vec![self.hyper.seed]
        } else {
            self.seeds.clone()
        }
    }

    pub fn eps_list(&self) -> Vec<f64> {
        self.chaos.eps_list.clone().unwrap_or_else(|| vec![self.hyper.eps])
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.hyper.seed = seed;
        self.seeds = vec![seed];
        self
    }

    /// Resolves the experiment kind against the one requested on the command line.
    pub fn resolve(mut self, requested: ExperimentKind) -> Result<Self> {
        match self.experiment {
            Some(kind) if kind != requested => {
                return Err(Error::config(
                    "experiment",
                    format!(
                        "config is for `{}` but `{}` was requested",
                        kind.name(),
                        requested.name()
                    ),
                ));
            }
            _ => self.experiment = Some(requested),
        }
        self.validate()?;
        Ok(self)
    }

    pub fn kind(&self) -> Result<ExperimentKind> {
        self.experiment
            .ok_or_else(|| Error::config("experiment", "no experiment kind given"))
    }

    /// Checks everything that can be checked before any numerics run.
    pub fn validate(&self) -> Result<()> {
        self.hyper.validate()?;
        self.data.validate()?;
        self.init.validate()?;
        self.objective
            .loss
            .validate()
            .map_err(|e| Error::config("objective.loss", e.to_string()))?;
        if !self.objective.loss.has_bounded_derivative() && !self.allow_unbounded_loss {
            return Err(Error::config(
                "objective.loss",
                "square loss has an unbounded derivative; set allow_unbounded_loss to use it",
            ));
        }
        if self.widths.is_empty() || self.widths.contains(&0) {
            return Err(Error::config("widths", "need at least one positive width"));
        }
        if self.pool_size == 0 {
            return Err(Error::config("pool_size", "must be at least 1"));
        }
        if self.pd_substeps == 0 {
            return Err(Error::config("pd_substeps", "must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be at least 1"));
        }
        if self.model == ModelKind::ThreeLayer && self.init.coupling == InitCoupling::Joint {
            return Err(Error::config(
                "init.coupling",
                "three-layer initialisation requires independent layers",
            ));
        }
        for (i, e) in self.eps_list().iter().enumerate() {
            let mut h = self.hyper;
            h.eps = *e;
            h.validate()
                .map_err(|err| Error::config(format!("chaos.eps_list[{i}]"), err.to_string()))?;
        }
        let kind = self.experiment;
        if matches!(kind, Some(ExperimentKind::Connect)) {
            if self.model != ModelKind::TwoLayer {
                return Err(Error::config(
                    "model",
                    "connecting paths are built for two-layer networks only",
                ));
            }
            if let Some(w) = self.widths.iter().find(|w| **w % 2 != 0) {
                return Err(Error::config(
                    "widths",
                    format!("connecting paths need even widths, got {w}"),
                ));
            }
            if self.path.points_per_segment < 2 {
                return Err(Error::config("path.points_per_segment", "must be at least 2"));
            }
        }
        if matches!(kind, Some(ExperimentKind::Chaos)) && self.model != ModelKind::TwoLayer {
            return Err(Error::config(
                "model",
                "the chaos experiment is two-layer only; use couple for three layers",
            ));
        }
        if matches!(kind, Some(ExperimentKind::DropoutScan)) && self.dropout.subsets == 0 {
            return Err(Error::config("dropout.subsets", "must be at least 1"));
        }
        if let Some(t) = &self.snapshot_times {
            if let Some(bad) = t.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
                return Err(Error::config("snapshot_times", format!("invalid time {bad}")));
            }
        }
        Ok(())
    }

    pub fn uses_protocol_mode(&self) -> bool {
        self.batch_size > 1
    }

    pub fn is_square_loss(&self) -> bool {
        matches!(self.objective.loss, Loss::Square)
    }
}
