use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::rng::{counter_rng, mix_seed, tags};
use crate::model::{Params2L, Params3L};
use crate::{Error, Result};

/// Dependence between a neuron's first-layer row and its output weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitCoupling {
    /// Layers drawn independently.
    #[default]
    Product,
    /// Two-layer only: the sign of `w2(j)` follows the first coordinate of `w1(j)`.
    Joint,
}

/// Initial law.
///
/// `w1` coordinates are `N(0, w1_scale² / D)`, `w2` is uniform on
/// `[-k_init, k_init]` and `w3` uniform on `[-k_init_out, k_init_out]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSpec {
    #[serde(default = "one")]
    pub w1_scale: f64,
    #[serde(default = "one")]
    pub k_init: f64,
    #[serde(default = "one")]
    pub k_init_out: f64,
    #[serde(default)]
    pub coupling: InitCoupling,
}

fn one() -> f64 {
    1.0
}

impl Default for InitSpec {
    fn default() -> Self {
        Self {
            w1_scale: 1.0,
            k_init: 1.0,
            k_init_out: 1.0,
            coupling: InitCoupling::Product,
        }
    }
}

impl InitSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("init.w1_scale", self.w1_scale),
            ("init.k_init", self.k_init),
            ("init.k_init_out", self.k_init_out),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(name, "must be finite and non-negative"));
            }
        }
        Ok(())
    }
}

fn uniform(rng: &mut impl Rng, k: f64) -> f64 {
    if k == 0.0 {
        0.0
    } else {
        rng.random_range(-k..=k)
    }
}

fn gaussian_row(rng: &mut impl Rng, d: usize, std: f64) -> impl Iterator<Item = f64> + '_ {
    (0..d).map(move |_| std * rng.sample::<f64, _>(StandardNormal))
}

/// Two-layer initialisation; neuron `j` uses its own stream, so the first
/// `n` neurons of a width-`N` draw equal the width-`n` draw.
pub fn init_2l(spec: &InitSpec, n: usize, d: usize, seed: u64) -> Result<Params2L> {
    spec.validate()?;
    if n == 0 || d == 0 {
        return Err(Error::invalid("width and input dimension must be positive"));
    }
    let std = spec.w1_scale / (d as f64).sqrt();
    let key = mix_seed(seed, tags::INIT_FIRST);
    let mut w1 = Vec::with_capacity(n * d);
    let mut w2 = Vec::with_capacity(n);
    for j in 0..n {
        let mut rng = counter_rng(key, j as u64);
        let start = w1.len();
        w1.extend(gaussian_row(&mut rng, d, std));
        let mut a = uniform(&mut rng, spec.k_init);
        if spec.coupling == InitCoupling::Joint && (a < 0.0) != (w1[start] < 0.0) {
            a = -a;
        }
        w2.push(a);
    }
    Params2L::new(w1, w2, d)
}

/// Three-layer initialisation from independent per-layer streams.
///
/// Row `j1` of `w1`, row `j1` of `w2` and entry `j2` of `w3` each have their own
/// counter, so widths `(n1, n2)` embed as a prefix of any larger draw.
pub fn init_3l(spec: &InitSpec, n1: usize, n2: usize, d: usize, seed: u64) -> Result<Params3L> {
    spec.validate()?;
    if spec.coupling == InitCoupling::Joint {
        return Err(Error::config(
            "init.coupling",
            "three-layer initialisation requires independent layers",
        ));
    }
    if n1 == 0 || n2 == 0 || d == 0 {
        return Err(Error::invalid("widths and input dimension must be positive"));
    }
    let std = spec.w1_scale / (d as f64).sqrt();
    let (k1, k2, k3) = (
        mix_seed(seed, tags::INIT_FIRST),
        mix_seed(seed, tags::INIT_SECOND),
        mix_seed(seed, tags::INIT_THIRD),
    );
    let mut w1 = Vec::with_capacity(n1 * d);
    let mut w2 = Vec::with_capacity(n1 * n2);
    for j1 in 0..n1 {
        let mut rng = counter_rng(k1, j1 as u64);
        w1.extend(gaussian_row(&mut rng, d, std));
        let mut rng = counter_rng(k2, j1 as u64);
        w2.extend((0..n2).map(|_| uniform(&mut rng, spec.k_init)));
    }
    let w3 = (0..n2)
        .map(|j2| uniform(&mut counter_rng(k3, j2 as u64), spec.k_init_out))
        .collect();
    Params3L::new(w1, w2, w3, d)
}
