use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Run constants.
///
/// `beta_inv` is the temperature of the noisy dynamics and is unrelated to the
/// momentum coefficient [`Hyper::momentum`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyper {
    pub gamma: f64,
    pub eps: f64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub beta_inv: f64,
    /// Horizon `T` in time units.
    pub horizon: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for Hyper {
    fn default() -> Self {
        Self {
            gamma: 2.0,
            eps: 0.05,
            lambda: 0.0,
            beta_inv: 0.0,
            horizon: 1.0,
            seed: 0,
        }
    }
}

impl Hyper {
    pub fn new(gamma: f64, eps: f64, horizon: f64, seed: u64) -> Result<Self> {
        let h = Self {
            gamma,
            eps,
            lambda: 0.0,
            beta_inv: 0.0,
            horizon,
            seed,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn with_noise(mut self, lambda: f64, beta_inv: f64) -> Result<Self> {
        self.lambda = lambda;
        self.beta_inv = beta_inv;
        self.validate()?;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Result<Self> {
        self.eps = eps;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::config("hyper.gamma", "must be finite and positive"));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::config("hyper.eps", "must be finite and positive"));
        }
        if self.gamma * self.eps >= 1.0 {
            return Err(Error::config(
                "hyper.eps",
                format!("gamma * eps must be below 1, got {}", self.gamma * self.eps),
            ));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::config("hyper.lambda", "must be finite and non-negative"));
        }
        if !(self.beta_inv >= 0.0 && self.beta_inv.is_finite()) {
            return Err(Error::config("hyper.beta_inv", "must be finite and non-negative"));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::config("hyper.horizon", "must be finite and non-negative"));
        }
        Ok(())
    }

    /// `1 − γε`.
    #[inline]
    pub fn momentum(&self) -> f64 {
        1.0 - self.gamma * self.eps
    }

    /// `ε²`.
    #[inline]
    pub fn learning_rate(&self) -> f64 {
        self.eps * self.eps
    }

    /// Grid index of time `t`: `⌊t/ε⌋`, tolerant to representation error.
    pub fn step_of(&self, t: f64) -> u64 {
        (t / self.eps + 1e-9).floor().max(0.0) as u64
    }

    /// Number of steps `⌊T/ε⌋`.
    pub fn steps(&self) -> u64 {
        self.step_of(self.horizon)
    }

    /// Per-coordinate noise amplitude `ε^{3/2} √(2γβ⁻¹)`.
    pub fn noise_scale(&self) -> f64 {
        self.eps.powf(1.5) * (2.0 * self.gamma * self.beta_inv).sqrt()
    }

    /// True when the noisy step reduces exactly to plain SHB.
    pub fn is_noiseless(&self) -> bool {
        self.lambda == 0.0 && self.beta_inv == 0.0
    }
}
