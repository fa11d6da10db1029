use crate::model::{Network, Params2L, Params3L};
use crate::numeric::squared_distance;
use crate::{Error, Result};

/// `n ≥ 1` atoms in `R^dim` with weight `1/n` each.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    dim: usize,
    atoms: Vec<f64>,
}

impl EmpiricalMeasure {
    /// `atoms` is row-major, one atom per row.
    pub fn new(dim: usize, atoms: Vec<f64>) -> Result<Self> {
        if dim == 0 || atoms.is_empty() || !atoms.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "need at least one atom of dimension {dim}, got {} coordinates",
                atoms.len()
            )));
        }
        if let Some(i) = crate::numeric::first_non_finite(&atoms) {
            return Err(Error::invalid(format!("atom coordinate {i} is not finite")));
        }
        Ok(Self { dim, atoms })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid("atoms have differing dimensions"));
        }
        Self::new(dim, rows.concat())
    }

    /// Neurons `(w1(j), w2(j)) ∈ R^{D+1}`.
    pub fn from_params2l(w: &Params2L) -> Result<Self> {
        let rows: Vec<Vec<f64>> = (0..w.width()).map(|j| w.neuron(j)).collect();
        Self::from_rows(&rows)
    }

    /// First-layer rows of a three-layer network.
    pub fn first_layer(w: &Params3L) -> Result<Self> {
        Self::new(w.input_dim(), w.w1().to_vec())
    }

    pub fn len(&self) -> usize {
        self.atoms.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atom(&self, i: usize) -> &[f64] {
        &self.atoms[i * self.dim..(i + 1) * self.dim]
    }
}

pub(crate) fn check_pair(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> Result<()> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            what: "atom dimension",
            expected: a.dim,
            found: b.dim,
        });
    }
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            what: "atom count",
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(())
}

/// Row-major `n × n` matrix of squared distances `‖a_i − b_j‖²`.
pub fn cost_matrix(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> Result<Vec<f64>> {
    check_pair(a, b)?;
    let n = a.len();
    let mut c = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            c.push(squared_distance(a.atom(i), b.atom(j)));
        }
    }
    Ok(c)
}
