use serde::{Deserialize, Serialize};

/// Per-sample loss `R(y, ŷ)`, differentiable in its second argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
#[derive(Default)]
pub enum Loss {
    /// `log(1 + exp(-y ŷ))`; `|∂₂R| ≤ |y|`.
    #[default]
    Logistic,
    /// Huber loss on the residual `ŷ - y`; `|∂₂R| ≤ delta`.
    Huber { delta: f64 },
    /// `(ŷ - y)² / 2`. Its derivative is unbounded, so it violates the
    /// bounded-derivative assumption and is only accepted behind an explicit
    /// unsafe flag.
    Square,
}

impl Loss {
    #[inline]
    pub fn value(self, y: f64, yhat: f64) -> f64 {
        match self {
            Loss::Logistic => softplus(-y * yhat),
            Loss::Huber { delta } => {
                let r = (yhat - y).abs();
                if r <= delta {
                    0.5 * r * r
                } else {
                    delta * (r - 0.5 * delta)
                }
            }
            Loss::Square => 0.5 * (yhat - y) * (yhat - y),
        }
    }

    /// `∂R/∂ŷ`.
    #[inline]
    pub fn derivative(self, y: f64, yhat: f64) -> f64 {
        match self {
            Loss::Logistic => -y * logistic(-y * yhat),
            Loss::Huber { delta } => (yhat - y).clamp(-delta, delta),
            Loss::Square => yhat - y,
        }
    }

    /// Whether the loss satisfies the bounded, Lipschitz derivative requirement.
    pub fn has_bounded_derivative(self) -> bool {
        !matches!(self, Loss::Square)
    }

    /// Analytic bound on `|∂₂R|` for labels bounded by `label_bound`.
    pub fn derivative_bound(self, label_bound: f64) -> f64 {
        match self {
            Loss::Logistic => label_bound,
            Loss::Huber { delta } => delta,
            Loss::Square => f64::INFINITY,
        }
    }

    pub fn validate(self) -> crate::Result<()> {
        if let Loss::Huber { delta } = self {
            if !(delta > 0.0 && delta.is_finite()) {
                return Err(crate::Error::invalid(format!(
                    "huber delta must be positive and finite, got {delta}"
                )));
            }
        }
        Ok(())
    }
}

#[inline]
fn softplus(m: f64) -> f64 {
    if m > 0.0 {
        m + (-m).exp().ln_1p()
    } else {
        m.exp().ln_1p()
    }
}

#[inline]
fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
