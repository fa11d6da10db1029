use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::rng::{counter_rng, mix_seed, tags};
use crate::model::{Activation, Loss, Network, Objective, Params2L, Params3L};
use crate::{Error, Result};

/// How labels are produced from inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LabelModel {
    /// Two-layer tanh teacher with `hidden` units and output weights `±scale`.
    Teacher2l {
        #[serde(default = "default_teacher_hidden")]
        hidden: usize,
        #[serde(default = "default_teacher_scale")]
        scale: f64,
    },
    /// Three-layer tanh teacher with `hidden × hidden` units.
    Teacher3l {
        #[serde(default = "default_teacher_hidden")]
        hidden: usize,
        #[serde(default = "default_teacher_scale")]
        scale: f64,
    },
    /// `y = sign(vᵀx)` for a fixed random unit vector `v`.
    SignLinear,
}

fn default_teacher_hidden() -> usize {
    4
}

fn default_teacher_scale() -> f64 {
    3.0
}

impl Default for LabelModel {
    fn default() -> Self {
        LabelModel::Teacher2l {
            hidden: default_teacher_hidden(),
            scale: default_teacher_scale(),
        }
    }
}

/// Data distribution: `x` uniform on the sphere of radius `radius` in `R^dim`,
/// labels from `labels`, clipped to `[-label_clip, label_clip]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    #[serde(default = "default_dim")]
    pub dim: usize,
    /// Input norm bound `K_x`; defaults to `√dim`.
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub labels: LabelModel,
    #[serde(default = "default_label_clip")]
    pub label_clip: f64,
    #[serde(default = "default_teacher_seed")]
    pub teacher_seed: u64,
}

fn default_dim() -> usize {
    10
}

fn default_label_clip() -> f64 {
    1.0
}

fn default_teacher_seed() -> u64 {
    7
}

impl Default for DataSpec {
    fn default() -> Self {
        Self {
            dim: default_dim(),
            radius: None,
            labels: LabelModel::default(),
            label_clip: default_label_clip(),
            teacher_seed: default_teacher_seed(),
        }
    }
}

impl DataSpec {
    pub fn radius(&self) -> f64 {
        self.radius.unwrap_or((self.dim as f64).sqrt())
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::config("data.dim", "must be at least 1"));
        }
        let r = self.radius();
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::config("data.radius", "must be finite and non-negative"));
        }
        if !(self.label_clip > 0.0 && self.label_clip.is_finite()) {
            return Err(Error::config("data.label_clip", "must be finite and positive"));
        }
        match self.labels {
            LabelModel::Teacher2l { hidden, scale } | LabelModel::Teacher3l { hidden, scale } => {
                if hidden == 0 {
                    return Err(Error::config("data.labels.hidden", "must be at least 1"));
                }
                if !scale.is_finite() {
                    return Err(Error::config("data.labels.scale", "must be finite"));
                }
            }
            LabelModel::SignLinear => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: f64,
}

#[derive(Debug, Clone)]
enum Teacher {
    TwoLayer(Params2L),
    ThreeLayer(Params3L),
    SignLinear(Vec<f64>),
}

/// A [`DataSpec`] with its teacher materialised; draws samples by `(seed, k)`.
#[derive(Debug, Clone)]
pub struct DataSource {
    spec: DataSpec,
    radius: f64,
    teacher: Teacher,
}

impl DataSource {
    pub fn new(spec: &DataSpec) -> Result<Self> {
        spec.validate()?;
        let d = spec.dim;
        let mut rng = counter_rng(mix_seed(spec.teacher_seed, tags::TEACHER), 0);
        let std = 1.0 / (d as f64).sqrt();
        let mut gaussian =
            |count: usize| -> Vec<f64> { (0..count).map(|_| std * rng.sample::<f64, _>(StandardNormal)).collect() };
        let alternating = |count: usize, scale: f64| -> Vec<f64> {
            (0..count).map(|j| if j % 2 == 0 { scale } else { -scale }).collect()
        };
        let teacher = match spec.labels {
            LabelModel::Teacher2l { hidden, scale } => {
                let w1 = gaussian(hidden * d);
                Teacher::TwoLayer(Params2L::new(w1, alternating(hidden, scale), d)?)
            }
            LabelModel::Teacher3l { hidden, scale } => {
                let w1 = gaussian(hidden * d);
                let w2 = gaussian(hidden * hidden)
                    .into_iter()
                    .map(|v| v * scale * (d as f64).sqrt())
                    .collect();
                Teacher::ThreeLayer(Params3L::new(w1, w2, alternating(hidden, scale), d)?)
            }
            LabelModel::SignLinear => {
                let v = gaussian(d);
                let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                Teacher::SignLinear(v.into_iter().map(|a| a / norm).collect())
            }
        };
        Ok(Self {
            spec: spec.clone(),
            radius: spec.radius(),
            teacher,
        })
    }

    pub fn spec(&self) -> &DataSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn label_bound(&self) -> f64 {
        self.spec.label_clip
    }

    /// Noise-free, clipped label of `x`.
    pub fn label(&self, x: &[f64]) -> f64 {
        let obj = Objective::two_layer(Activation::Tanh, Loss::Logistic);
        let raw = match &self.teacher {
            Teacher::TwoLayer(t) => t.output(x, &obj, &mut t.workspace()),
            Teacher::ThreeLayer(t) => t.output(x, &obj, &mut t.workspace()),
            Teacher::SignLinear(v) => {
                if crate::numeric::dot(v, x) >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
        };
        raw.clamp(-self.spec.label_clip, self.spec.label_clip)
    }

    /// Draw number `k` of the stream keyed by `seed`.
    pub fn sample(&self, seed: u64, k: u64) -> Sample {
        let d = self.spec.dim;
        if self.radius == 0.0 {
            let x = vec![0.0; d];
            let y = self.label(&x);
            return Sample { x, y };
        }
        let mut rng = counter_rng(seed, k);
        let mut x: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let mut norm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        while norm == 0.0 {
            x = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            norm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        }
        // Shrink by a few ulps so rounding can never push ‖x‖ above the radius.
        let scale = self.radius / norm * (1.0 - 4.0 * f64::EPSILON);
        x.iter_mut().for_each(|a| *a *= scale);
        let y = self.label(&x);
        Sample { x, y }
    }
}

/// One-off draw `k` under `seed` for a spec.
pub fn sample(spec: &DataSpec, seed: u64, k: u64) -> Result<Sample> {
    Ok(DataSource::new(spec)?.sample(seed, k))
}

/// Fixed Monte Carlo sample set standing in for the population expectation.
///
/// Inputs are stored row-major in one buffer. A pool is never empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Pool {
    dim: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Pool {
    pub fn new(dim: usize, xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if ys.is_empty() {
            return Err(Error::invalid("pool must contain at least one sample"));
        }
        if dim == 0 || xs.len() != dim * ys.len() {
            return Err(Error::DimensionMismatch {
                what: "pool inputs",
                expected: dim * ys.len(),
                found: xs.len(),
            });
        }
        Ok(Self { dim, xs, ys })
    }

    pub fn from_samples(samples: &[Sample]) -> Result<Self> {
        let dim = samples.first().map(|s| s.x.len()).unwrap_or(0);
        let mut xs = Vec::with_capacity(dim * samples.len());
        for s in samples {
            if s.x.len() != dim {
                return Err(Error::DimensionMismatch {
                    what: "pool sample",
                    expected: dim,
                    found: s.x.len(),
                });
            }
            xs.extend_from_slice(&s.x);
        }
        Self::new(dim, xs, samples.iter().map(|s| s.y).collect())
    }

    /// `size` draws from `source`, independent of the training stream with the same seed.
    pub fn draw(source: &DataSource, seed: u64, size: usize) -> Result<Self> {
        let key = mix_seed(seed, tags::POOL);
        let samples: Vec<Sample> = (0..size as u64).map(|k| source.sample(key, k)).collect();
        Self::from_samples(&samples)
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major inputs, `len() × dim()`.
    pub fn inputs(&self) -> &[f64] {
        &self.xs
    }

    pub fn labels(&self) -> &[f64] {
        &self.ys
    }

    #[inline]
    pub fn get(&self, i: usize) -> (&[f64], f64) {
        (&self.xs[i * self.dim..(i + 1) * self.dim], self.ys[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.xs.chunks_exact(self.dim).zip(self.ys.iter().copied())
    }

    pub fn concat(&self, other: &Pool) -> Result<Pool> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                what: "pool dimension",
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut xs = self.xs.clone();
        xs.extend_from_slice(&other.xs);
        let mut ys = self.ys.clone();
        ys.extend_from_slice(&other.ys);
        Pool::new(self.dim, xs, ys)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_radius_gives_zero_inputs() {
        let spec = DataSpec {
            radius: Some(0.0),
            ..DataSpec::default()
        };
        let src = DataSource::new(&spec).unwrap();
        for k in 0..20 {
            assert!(src.sample(3, k).x.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn same_seed_and_counter_give_same_sample() {
        let spec = DataSpec::default();
        assert_eq!(sample(&spec, 9, 41).unwrap(), sample(&spec, 9, 41).unwrap());
        assert_ne!(sample(&spec, 9, 41).unwrap(), sample(&spec, 9, 42).unwrap());
    }

    #[test]
    fn bounds_hold_exactly_over_many_draws() {
        for labels in [
            LabelModel::default(),
            LabelModel::Teacher3l { hidden: 3, scale: 4.0 },
            LabelModel::SignLinear,
        ] {
            let spec = DataSpec {
                dim: 6,
                radius: Some(2.5),
                labels,
                label_clip: 0.8,
                teacher_seed: 1,
            };
            let src = DataSource::new(&spec).unwrap();
            let (mut max_norm, mut max_label) = (0.0f64, 0.0f64);
            for k in 0..100_000 {
                let s = src.sample(11, k);
                max_norm = max_norm.max(s.x.iter().map(|a| a * a).sum::<f64>().sqrt());
                max_label = max_label.max(s.y.abs());
            }
            assert!(max_norm <= 2.5, "{max_norm}");
            assert!(max_label <= 0.8);
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let bad = DataSpec {
            dim: 0,
            ..DataSpec::default()
        };
        assert!(DataSource::new(&bad).is_err());
        let bad = DataSpec {
            label_clip: 0.0,
            ..DataSpec::default()
        };
        assert!(DataSource::new(&bad).is_err());
    }

    #[test]
    fn empty_pool_is_rejected() {
        assert!(Pool::new(3, vec![], vec![]).is_err());
        assert!(Pool::new(3, vec![0.0; 5], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn pool_differs_from_training_stream() {
        let src = DataSource::new(&DataSpec::default()).unwrap();
        let pool = Pool::draw(&src, 4, 3).unwrap();
        assert_ne!(pool.get(0).0, src.sample(4, 0).x.as_slice());
    }
}
