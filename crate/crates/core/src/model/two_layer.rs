use serde::{Deserialize, Serialize};

use super::{Activation, Loss, Network, Objective};
use crate::numeric::dot;
use crate::{Error, Result};

/// Two-layer mean-field network `f(x) = (1/n) Σ_j w2(j) σ(w1(j)ᵀx)`.
///
/// Parameters live in one buffer: the `n×D` first-layer matrix (row `j` is
/// neuron `j`) followed by the `n` output weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params2L {
    width: usize,
    input_dim: usize,
    data: Vec<f64>,
}

/// Width-scaled gradient of a [`Params2L`]; entries are `n` times the raw partials.
pub type Grad2L = Params2L;

#[derive(Debug, Clone)]
pub struct Workspace2L {
    act: Vec<f64>,
    deriv: Vec<f64>,
    /// Batch pre-activations, then per-entry first-layer coefficients (`m × n`).
    batch: Vec<f64>,
}

impl Params2L {
    pub fn new(w1: Vec<f64>, w2: Vec<f64>, input_dim: usize) -> Result<Self> {
        let width = w2.len();
        if width == 0 || input_dim == 0 {
            return Err(Error::invalid("two-layer network needs n ≥ 1 and D ≥ 1"));
        }
        if w1.len() != width * input_dim {
            return Err(Error::DimensionMismatch {
                what: "first-layer matrix",
                expected: width * input_dim,
                found: w1.len(),
            });
        }
        let mut data = w1;
        data.extend_from_slice(&w2);
        Ok(Self { width, input_dim, data })
    }

    pub fn zeros(width: usize, input_dim: usize) -> Self {
        assert!(width > 0 && input_dim > 0, "empty network");
        Self {
            width,
            input_dim,
            data: vec![0.0; width * (input_dim + 1)],
        }
    }

    /// Builds a network from per-neuron rows `θ(j) = (w1(j), w2(j))`.
    pub fn from_neurons(rows: &[(Vec<f64>, f64)]) -> Result<Self> {
        let d = rows.first().map(|r| r.0.len()).unwrap_or(0);
        let mut w1 = Vec::with_capacity(rows.len() * d);
        let mut w2 = Vec::with_capacity(rows.len());
        for (row, out) in rows {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    what: "neuron row",
                    expected: d,
                    found: row.len(),
                });
            }
            w1.extend_from_slice(row);
            w2.push(*out);
        }
        Self::new(w1, w2, d)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn w1(&self) -> &[f64] {
        &self.data[..self.width * self.input_dim]
    }

    pub fn w1_mut(&mut self) -> &mut [f64] {
        let k = self.width * self.input_dim;
        &mut self.data[..k]
    }

    pub fn w2(&self) -> &[f64] {
        &self.data[self.width * self.input_dim..]
    }

    pub fn w2_mut(&mut self) -> &mut [f64] {
        let k = self.width * self.input_dim;
        &mut self.data[k..]
    }

    pub fn w1_row(&self, j: usize) -> &[f64] {
        &self.data[j * self.input_dim..(j + 1) * self.input_dim]
    }

    pub fn w1_row_mut(&mut self, j: usize) -> &mut [f64] {
        let d = self.input_dim;
        &mut self.data[j * d..(j + 1) * d]
    }

    /// Neuron `j` as the `D+1` vector `(w1(j), w2(j))`.
    pub fn neuron(&self, j: usize) -> Vec<f64> {
        let mut v = self.w1_row(j).to_vec();
        v.push(self.w2()[j]);
        v
    }

    /// Network made of the listed neurons, in the given order (duplicates allowed).
    pub fn select_neurons(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::invalid("neuron selection must be non-empty"));
        }
        let mut w1 = Vec::with_capacity(indices.len() * self.input_dim);
        let mut w2 = Vec::with_capacity(indices.len());
        for &j in indices {
            if j >= self.width {
                return Err(Error::invalid(format!(
                    "neuron index {j} out of range for width {}",
                    self.width
                )));
            }
            w1.extend_from_slice(self.w1_row(j));
            w2.push(self.w2()[j]);
        }
        Self::new(w1, w2, self.input_dim)
    }

    /// The first `n` neurons.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        let idx: Vec<usize> = (0..n).collect();
        self.select_neurons(&idx)
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
}

/// `f(x; W)` for a two-layer network.
pub fn forward2(x: &[f64], w: &Params2L, act: Activation) -> Result<f64> {
    w.check_input(x)?;
    let obj = Objective::two_layer(act, Loss::Logistic);
    Ok(w.output(x, &obj, &mut w.workspace()))
}

/// Width-scaled gradient `(Δ^W_1, Δ^W_2)` at sample `(x, y)`.
pub fn scaled_grad2(x: &[f64], y: f64, w: &Params2L, act: Activation, loss: Loss) -> Result<Grad2L> {
    w.check_input(x)?;
    let obj = Objective::two_layer(act, loss);
    let mut g = w.zeros_like();
    w.add_scaled_grad(x, y, &obj, 1.0, &mut g.data, &mut w.workspace());
    Ok(g)
}

impl Network for Params2L {
    type Workspace = Workspace2L;

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
        Self::zeros(self.width, self.input_dim)
    }

    fn workspace(&self) -> Workspace2L {
        Workspace2L {
            act: vec![0.0; self.width],
            deriv: vec![0.0; self.width],
            batch: Vec::new(),
        }
    }

    fn same_shape(&self, other: &Self) -> bool {
        self.width == other.width && self.input_dim == other.input_dim
    }

    fn output(&self, x: &[f64], obj: &Objective, _ws: &mut Workspace2L) -> f64 {
        let w2 = self.w2();
        let mut acc = 0.0;
        for (j, &out) in w2.iter().enumerate() {
            acc += out * obj.activation.value(dot(self.w1_row(j), x));
        }
        acc / self.width as f64
    }

    fn add_scaled_grad(
        &self,
        x: &[f64],
        y: f64,
        obj: &Objective,
        scale: f64,
        out: &mut [f64],
        ws: &mut Workspace2L,
    ) -> f64 {
        let n = self.width;
        let d = self.input_dim;
        let w2 = self.w2();
        let mut acc = 0.0;
        for j in 0..n {
            let (s, ds) = obj.activation.eval(dot(self.w1_row(j), x));
            ws.act[j] = s;
            ws.deriv[j] = ds;
            acc += w2[j] * s;
        }
        let yhat = acc / n as f64;
        let coef = scale * obj.loss.derivative(y, yhat);
        let (g1, g2) = out.split_at_mut(n * d);
        for j in 0..n {
            // Δ^W_2(j) = ∂₂R σ(w1(j)ᵀx)
            g2[j] += coef * ws.act[j];
            // Δ^W_1(j) = ∂₂R w2(j) σ′(w1(j)ᵀx) x
            let c = coef * w2[j] * ws.deriv[j];
            for (g, xi) in g1[j * d..(j + 1) * d].iter_mut().zip(x) {
                *g += c * xi;
            }
        }
        yhat
    }

    fn add_batch_grad(
        &self,
        xs: &[f64],
        ys: &[f64],
        obj: &Objective,
        scale: f64,
        out: &mut [f64],
        ws: &mut Workspace2L,
    ) {
        let (n, d, m) = (self.width, self.input_dim, ys.len());
        assert_eq!(xs.len(), m * d, "batch inputs do not match labels");
        assert_eq!(out.len(), self.data.len(), "gradient buffer has the wrong size");
        if m == 0 {
            return;
        }
        ws.batch.resize(m * n, 0.0);
        let h = &mut ws.batch;
        // H = X W1ᵀ (m × n).
        unsafe {
            matrixmultiply::dgemm(
                m,
                d,
                n,
                1.0,
                xs.as_ptr(),
                d as isize,
                1,
                self.data.as_ptr(),
                1,
                d as isize,
                0.0,
                h.as_mut_ptr(),
                n as isize,
                1,
            );
        }
        let w2 = &self.data[n * d..];
        let (g1, g2) = out.split_at_mut(n * d);
        for (row, &y) in h.chunks_exact_mut(n).zip(ys) {
            let mut acc = 0.0;
            for (j, v) in row.iter_mut().enumerate() {
                let (s, ds) = obj.activation.eval(*v);
                acc += w2[j] * s;
                ws.act[j] = s;
                *v = ds;
            }
            let coef = scale * obj.loss.derivative(y, acc / n as f64);
            for j in 0..n {
                g2[j] += coef * ws.act[j];
                row[j] *= coef * w2[j];
            }
        }
        // G1 += Cᵀ X (n × d).
        unsafe {
            matrixmultiply::dgemm(
                n,
                m,
                d,
                1.0,
                h.as_ptr(),
                1,
                n as isize,
                xs.as_ptr(),
                d as isize,
                1,
                1.0,
                g1.as_mut_ptr(),
                d as isize,
                1,
            );
        }
    }

    fn max_abs_output_weight(&self) -> f64 {
        self.w2().iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
