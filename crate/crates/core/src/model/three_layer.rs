use serde::{Deserialize, Serialize};

use super::{Activation, Loss, Network, Objective};
use crate::numeric::dot;
use crate::{Error, Result};

/// Three-layer mean-field network:
///
/// ```text
/// H1(j1) = w1(j1)ᵀx
/// H2(j2) = (1/n1) Σ_j1 w2(j1, j2) σ1(H1(j1))
/// f(x)   = (1/n2) Σ_j2 w3(j2) σ2(H2(j2))
/// ```
///
/// Buffer layout: `w1` (`n1×D`, row per first-layer neuron), then `w2`
/// (`n1×n2`, row-major in `j1`), then `w3` (`n2`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params3L {
    n1: usize,
    n2: usize,
    input_dim: usize,
    data: Vec<f64>,
}

/// Width-scaled gradient of a [`Params3L`]: layer factors `n1`, `n1·n2`, `n2`.
pub type Grad3L = Params3L;

/// Forward pass output with the caches needed by the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward3 {
    pub output: f64,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Workspace3L {
    s1: Vec<f64>,
    d1: Vec<f64>,
    h2: Vec<f64>,
    s2: Vec<f64>,
    dh2: Vec<f64>,
}

impl Params3L {
    pub fn new(w1: Vec<f64>, w2: Vec<f64>, w3: Vec<f64>, input_dim: usize) -> Result<Self> {
        let n2 = w3.len();
        if input_dim == 0 || n2 == 0 || w1.is_empty() {
            return Err(Error::invalid("three-layer network needs n1, n2, D ≥ 1"));
        }
        if !w1.len().is_multiple_of(input_dim) {
            return Err(Error::DimensionMismatch {
                what: "first-layer matrix",
                expected: (w1.len() / input_dim + 1) * input_dim,
                found: w1.len(),
            });
        }
        let n1 = w1.len() / input_dim;
        if w2.len() != n1 * n2 {
            return Err(Error::DimensionMismatch {
                what: "second-layer matrix",
                expected: n1 * n2,
                found: w2.len(),
            });
        }
        let mut data = w1;
        data.extend_from_slice(&w2);
        data.extend_from_slice(&w3);
        Ok(Self {
            n1,
            n2,
            input_dim,
            data,
        })
    }

    pub fn zeros(n1: usize, n2: usize, input_dim: usize) -> Self {
        assert!(n1 > 0 && n2 > 0 && input_dim > 0, "empty network");
        Self {
            n1,
            n2,
            input_dim,
            data: vec![0.0; n1 * input_dim + n1 * n2 + n2],
        }
    }

    pub fn widths(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    fn split(&self) -> (usize, usize) {
        let a = self.n1 * self.input_dim;
        (a, a + self.n1 * self.n2)
    }

    pub fn w1(&self) -> &[f64] {
        &self.data[..self.split().0]
    }

    pub fn w2(&self) -> &[f64] {
        let (a, b) = self.split();
        &self.data[a..b]
    }

    pub fn w3(&self) -> &[f64] {
        &self.data[self.split().1..]
    }

    pub fn w1_mut(&mut self) -> &mut [f64] {
        let (a, _) = self.split();
        &mut self.data[..a]
    }

    pub fn w2_mut(&mut self) -> &mut [f64] {
        let (a, b) = self.split();
        &mut self.data[a..b]
    }

    pub fn w3_mut(&mut self) -> &mut [f64] {
        let (_, b) = self.split();
        &mut self.data[b..]
    }

    pub fn w1_row(&self, j1: usize) -> &[f64] {
        &self.data[j1 * self.input_dim..(j1 + 1) * self.input_dim]
    }

    #[inline]
    pub fn w2_at(&self, j1: usize, j2: usize) -> f64 {
        self.w2()[j1 * self.n2 + j2]
    }

    /// Sub-network on first-layer rows `rows` and second-layer units `cols`
    /// (both in the given order, duplicates allowed).
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Result<Self> {
        if rows.is_empty() || cols.is_empty() {
            return Err(Error::invalid("neuron selection must be non-empty"));
        }
        if let Some(&j) = rows.iter().find(|&&j| j >= self.n1) {
            return Err(Error::invalid(format!("first-layer index {j} out of range")));
        }
        if let Some(&j) = cols.iter().find(|&&j| j >= self.n2) {
            return Err(Error::invalid(format!("second-layer index {j} out of range")));
        }
        let mut w1 = Vec::with_capacity(rows.len() * self.input_dim);
        let mut w2 = Vec::with_capacity(rows.len() * cols.len());
        for &j1 in rows {
            w1.extend_from_slice(self.w1_row(j1));
            w2.extend(cols.iter().map(|&j2| self.w2_at(j1, j2)));
        }
        let w3 = cols.iter().map(|&j2| self.w3()[j2]).collect();
        Self::new(w1, w2, w3, self.input_dim)
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                what: "input",
                expected: self.input_dim,
                found: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("input contains non-finite values"));
        }
        Ok(())
    }

    /// Fills `ws.s1`, `ws.d1`, `ws.h2` and `ws.s2`; returns the output.
    fn forward_into(&self, x: &[f64], obj: &Objective, ws: &mut Workspace3L, with_deriv: bool) -> f64 {
        let (n1, n2) = (self.n1, self.n2);
        for j1 in 0..n1 {
            let h = dot(self.w1_row(j1), x);
            if with_deriv {
                let (s, d) = obj.activation.eval(h);
                ws.s1[j1] = s;
                ws.d1[j1] = d;
            } else {
                ws.s1[j1] = obj.activation.value(h);
            }
        }
        ws.h2.fill(0.0);
        let w2 = self.w2();
        for j1 in 0..n1 {
            let s = ws.s1[j1];
            for (h, w) in ws.h2.iter_mut().zip(&w2[j1 * n2..(j1 + 1) * n2]) {
                *h += w * s;
            }
        }
        let n1f = n1 as f64;
        let mut acc = 0.0;
        for (j2, &w3) in self.w3().iter().enumerate() {
            let h = ws.h2[j2] / n1f;
            ws.h2[j2] = h;
            let (s, d) = if with_deriv {
                obj.activation2.eval(h)
            } else {
                (obj.activation2.value(h), 0.0)
            };
            ws.s2[j2] = s;
            ws.dh2[j2] = d;
            acc += w3 * s;
        }
        acc / n2 as f64
    }
}

/// Forward pass returning the output and the hidden pre-activations `H1`, `H2`.
pub fn forward3(x: &[f64], w: &Params3L, act1: Activation, act2: Activation) -> Result<Forward3> {
    w.check_input(x)?;
    let obj = Objective::three_layer(act1, act2, Loss::Logistic);
    let mut ws = w.workspace();
    let output = w.forward_into(x, &obj, &mut ws, false);
    let h1 = (0..w.n1).map(|j1| dot(w.w1_row(j1), x)).collect();
    Ok(Forward3 { output, h1, h2: ws.h2 })
}

/// Width-scaled gradients `(Δ^W_1, Δ^W_2, Δ^W_3)` at sample `(x, y)`.
pub fn scaled_grad3(x: &[f64], y: f64, w: &Params3L, act1: Activation, act2: Activation, loss: Loss) -> Result<Grad3L> {
    w.check_input(x)?;
    let obj = Objective::three_layer(act1, act2, loss);
    let mut g = w.zeros_like();
    w.add_scaled_grad(x, y, &obj, 1.0, &mut g.data, &mut w.workspace());
    Ok(g)
}

impl Network for Params3L {
    type Workspace = Workspace3L;

    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn as_slice(&self) -> &[f64] {
        &self.data
    }

    fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    fn zeros_like(&self) -> Self {
        Self::zeros(self.n1, self.n2, self.input_dim)
    }

    fn workspace(&self) -> Workspace3L {
        Workspace3L {
            s1: vec![0.0; self.n1],
            d1: vec![0.0; self.n1],
            h2: vec![0.0; self.n2],
            s2: vec![0.0; self.n2],
            dh2: vec![0.0; self.n2],
        }
    }

    fn same_shape(&self, other: &Self) -> bool {
        self.n1 == other.n1 && self.n2 == other.n2 && self.input_dim == other.input_dim
    }

    fn output(&self, x: &[f64], obj: &Objective, ws: &mut Workspace3L) -> f64 {
        self.forward_into(x, obj, ws, false)
    }

    fn add_scaled_grad(
        &self,
        x: &[f64],
        y: f64,
        obj: &Objective,
        scale: f64,
        out: &mut [f64],
        ws: &mut Workspace3L,
    ) -> f64 {
        let (n1, n2, d) = (self.n1, self.n2, self.input_dim);
        let yhat = self.forward_into(x, obj, ws, true);
        let coef = scale * obj.loss.derivative(y, yhat);
        let (g1, rest) = out.split_at_mut(n1 * d);
        let (g2, g3) = rest.split_at_mut(n1 * n2);
        let w3 = self.w3();
        for j2 in 0..n2 {
            // Δ^W_3(j2) = ∂₂R σ2(H2(j2))
            g3[j2] += coef * ws.s2[j2];
            // Δ^H_2(j2) = ∂₂R w3(j2) σ2′(H2(j2)); reuse dh2 for it.
            ws.dh2[j2] *= coef * w3[j2];
        }
        let w2 = self.w2();
        let n2f = n2 as f64;
        for j1 in 0..n1 {
            let s = ws.s1[j1];
            let row = &w2[j1 * n2..(j1 + 1) * n2];
            let grow = &mut g2[j1 * n2..(j1 + 1) * n2];
            let mut back = 0.0;
            for j2 in 0..n2 {
                let dh = ws.dh2[j2];
                // Δ^W_2(j1, j2) = Δ^H_2(j2) σ1(H1(j1))
                grow[j2] += dh * s;
                back += dh * row[j2];
            }
            // Δ^H_1(j1) = (1/n2) Σ_j2 Δ^H_2(j2) w2(j1, j2) σ1′(H1(j1)); Δ^W_1 = Δ^H_1 x
            let dh1 = back / n2f * ws.d1[j1];
            for (g, xi) in g1[j1 * d..(j1 + 1) * d].iter_mut().zip(x) {
                *g += dh1 * xi;
            }
        }
        yhat
    }

    fn max_abs_output_weight(&self) -> f64 {
        self.w3().iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
