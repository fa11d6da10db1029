use serde::{Deserialize, Serialize};

use super::{Activation, Loss};
use crate::{Error, Result};

/// Activations and loss shared by forward passes, gradients and risks.
///
/// Two-layer networks only use `activation`; three-layer networks use
/// `activation` for the first hidden layer and `activation2` for the second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Objective {
    #[serde(default)]
    pub activation: Activation,
    #[serde(default)]
    pub activation2: Activation,
    #[serde(default)]
    pub loss: Loss,
}

impl Objective {
    pub fn two_layer(activation: Activation, loss: Loss) -> Self {
        Self {
            activation,
            activation2: activation,
            loss,
        }
    }

    pub fn three_layer(activation: Activation, activation2: Activation, loss: Loss) -> Self {
        Self {
            activation,
            activation2,
            loss,
        }
    }
}

/// Flat parameter storage plus the per-sample forward/backward kernels used
/// by every dynamics.
///
/// Implementations keep all parameters in one contiguous buffer so that the
/// heavy-ball recursions can be written once, elementwise.
pub trait Network: Clone + Send + Sync + std::fmt::Debug {
    /// Scratch buffers reused across samples.
    type Workspace: Send;

    fn input_dim(&self) -> usize;

    fn as_slice(&self) -> &[f64];

    fn as_mut_slice(&mut self) -> &mut [f64];

    fn zeros_like(&self) -> Self;

    fn workspace(&self) -> Self::Workspace;

    fn same_shape(&self, other: &Self) -> bool;

    /// Network output for input `x`. `x` must have length `input_dim()`.
    fn output(&self, x: &[f64], obj: &Objective, ws: &mut Self::Workspace) -> f64;

    /// Adds `scale` times the width-scaled gradient at sample `(x, y)` into
    /// `out` (laid out like `as_slice()`), returning the prediction.
    fn add_scaled_grad(
        &self,
        x: &[f64],
        y: f64,
        obj: &Objective,
        scale: f64,
        out: &mut [f64],
        ws: &mut Self::Workspace,
    ) -> f64;

    /// Adds `scale · Σ_m Δ(z_m)` over the row-major batch `xs` with labels `ys`.
    ///
    /// Implementations may reorder floating-point work relative to repeated
    /// [`Network::add_scaled_grad`] calls but must be deterministic in the
    /// batch contents.
    fn add_batch_grad(
        &self,
        xs: &[f64],
        ys: &[f64],
        obj: &Objective,
        scale: f64,
        out: &mut [f64],
        ws: &mut Self::Workspace,
    ) {
        let d = self.input_dim();
        for (x, &y) in xs.chunks_exact(d).zip(ys) {
            self.add_scaled_grad(x, y, obj, scale, out, ws);
        }
    }

    fn num_params(&self) -> usize {
        self.as_slice().len()
    }

    /// Largest absolute output-layer weight; the quantity tracked by the
    /// boundedness checks.
    fn max_abs_output_weight(&self) -> f64;
}

/// Gradient of the L2-regularised potential: `g + λ·W` elementwise.
///
/// `λ = 0` returns `g` unchanged, bit for bit.
pub fn regularize_grad<N: Network>(g: &N, w: &N, lambda: f64) -> Result<N> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!(
            "regularisation strength must be finite and non-negative, got {lambda}"
        )));
    }
    if !g.same_shape(w) {
        return Err(Error::invalid("gradient and parameters differ in shape"));
    }
    let mut out = g.clone();
    if lambda > 0.0 {
        for (o, p) in out.as_mut_slice().iter_mut().zip(w.as_slice()) {
            *o += lambda * p;
        }
    }
    Ok(out)
}
