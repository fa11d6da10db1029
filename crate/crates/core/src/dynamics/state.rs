use crate::model::Network;

/// Discrete heavy-ball state; `W(k) − W(k−1)` is `ε` times the momentum.
#[derive(Debug, Clone, PartialEq)]
pub struct ShbState<N> {
    pub w: N,
    pub w_prev: N,
    pub k: u64,
}

impl<N: Network> ShbState<N> {
    /// Starts at rest: `W(−1) = W(0)`.
    pub fn new(w: N) -> Self {
        Self {
            w_prev: w.clone(),
            w,
            k: 0,
        }
    }

    /// `(W(k) − W(k−1)) / ε`.
    pub fn velocity(&self, eps: f64) -> Vec<f64> {
        self.w
            .as_slice()
            .iter()
            .zip(self.w_prev.as_slice())
            .map(|(a, b)| (a - b) / eps)
            .collect()
    }
}

/// Continuous-time state `(θ, r)` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PdState<N> {
    pub theta: N,
    pub r: Vec<f64>,
    pub t: f64,
}

impl<N: Network> PdState<N> {
    pub fn new(theta: N) -> Self {
        let r = vec![0.0; theta.num_params()];
        Self { theta, r, t: 0.0 }
    }
}
