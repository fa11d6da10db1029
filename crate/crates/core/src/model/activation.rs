use serde::{Deserialize, Serialize};

/// Bounded, smooth activation with closed-form derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Tanh,
    Sigmoid,
}

/// Sup-norms of an activation and its first two derivatives, measured on a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivationBounds {
    pub value: f64,
    pub first: f64,
    pub second: f64,
}

/// `tanh` through `expm1`, within a few ulps of the libm routine and
/// roughly twice as fast. `|z| > 20` rounds to `±1` in `f64`.
#[inline]
pub fn tanh(z: f64) -> f64 {
    let a = z.abs();
    if a > 20.0 {
        return 1.0f64.copysign(z);
    }
    let e = (2.0 * a).exp_m1();
    (e / (e + 2.0)).copysign(z)
}

impl Activation {
    #[inline]
    pub fn value(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => tanh(z),
            Activation::Sigmoid => logistic(z),
        }
    }

    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        self.eval(z).1
    }

    /// Value and first derivative sharing one transcendental evaluation.
    #[inline]
    pub fn eval(self, z: f64) -> (f64, f64) {
        match self {
            Activation::Tanh => {
                let t = tanh(z);
                (t, 1.0 - t * t)
            }
            Activation::Sigmoid => {
                let s = logistic(z);
                (s, s * (1.0 - s))
            }
        }
    }

    pub fn second_derivative(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = z.tanh();
                -2.0 * t * (1.0 - t * t)
            }
            Activation::Sigmoid => {
                let s = logistic(z);
                s * (1.0 - s) * (1.0 - 2.0 * s)
            }
        }
    }

    /// Scans `[-50, 50]` with step `1e-3` for the sup-norms of σ, σ′ and σ″.
    pub fn bound_scan(self) -> ActivationBounds {
        let mut b = ActivationBounds {
            value: 0.0,
            first: 0.0,
            second: 0.0,
        };
        let steps = 100_000;
        for i in 0..=steps {
            let z = -50.0 + 100.0 * i as f64 / steps as f64;
            let (v, d) = self.eval(z);
            b.value = b.value.max(v.abs());
            b.first = b.first.max(d.abs());
            b.second = b.second.max(self.second_derivative(z).abs());
        }
        b
    }

    /// Analytic sup-norm of σ, the constant used by the output bounds.
    pub fn sup_norm(self) -> f64 {
        1.0
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
