use super::measure::{check_pair, cost_matrix, EmpiricalMeasure};
use crate::numeric::CompensatedSum;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkhornOptions {
    pub max_iterations: usize,
    /// Stop when the ℓ1 row-marginal error falls below this.
    pub tolerance: f64,
}

impl Default for SinkhornOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200_000,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxW2 {
    /// `√⟨P, C⟩` for a feasible plan `P`; never below the exact value.
    pub value: f64,
    /// Always true; marks the value as an upper bound rather than exact.
    pub approximate: bool,
    pub iterations: usize,
    /// ℓ1 marginal error of the unrounded plan.
    pub marginal_error: f64,
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + values.map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Upper bound on `W₂` from log-domain Sinkhorn followed by feasible rounding.
///
/// `reg` is relative to the largest squared cost.
pub fn w2_approx(a: &EmpiricalMeasure, b: &EmpiricalMeasure, reg: f64) -> Result<ApproxW2> {
    w2_approx_with(a, b, reg, SinkhornOptions::default())
}

pub fn w2_approx_with(a: &EmpiricalMeasure, b: &EmpiricalMeasure, reg: f64, opts: SinkhornOptions) -> Result<ApproxW2> {
    check_pair(a, b)?;
    if !(reg > 0.0 && reg.is_finite()) {
        return Err(Error::invalid("regularisation must be finite and positive"));
    }
    let n = a.len();
    let cost = cost_matrix(a, b)?;
    let scale = cost.iter().copied().fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(ApproxW2 {
            value: 0.0,
            approximate: true,
            iterations: 0,
            marginal_error: 0.0,
        });
    }
    let target_eps = reg * scale;
    let log_w = -(n as f64).ln();
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; n];
    let mut iterations = 0;
    let mut err = f64::INFINITY;
    // Anneal from the cost scale down to the target, warm-starting the potentials.
    let mut eps = scale.max(target_eps);
    loop {
        let last = eps <= target_eps;
        let stage_start = iterations;
        while iterations < opts.max_iterations {
            iterations += 1;
            sinkhorn_sweep(&cost, &mut f, &mut g, eps, log_w, n);
            // Columns are exact after the g update; measure the rows.
            if (iterations - stage_start) % 10 == 0 || iterations == opts.max_iterations {
                err = row_error(&cost, &f, &g, eps, n);
                if err < opts.tolerance || (!last && iterations - stage_start >= ANNEAL_SWEEPS) {
                    break;
                }
            }
        }
        if last || iterations >= opts.max_iterations {
            break;
        }
        eps = (eps * ANNEAL_FACTOR).max(target_eps);
    }
    if !(err < opts.tolerance) || eps > target_eps {
        return Err(Error::NonConvergence {
            solver: "sinkhorn",
            iterations,
            residual: err,
        });
    }
    let mut plan: Vec<f64> = (0..n * n)
        .map(|k| ((f[k / n] + g[k % n] - cost[k]) / eps).exp())
        .collect();
    round_to_feasible(&mut plan, n);
    let total: CompensatedSum = plan.iter().zip(&cost).map(|(p, c)| p * c).collect();
    Ok(ApproxW2 {
        value: total.value().max(0.0).sqrt(),
        approximate: true,
        iterations,
        marginal_error: err,
    })
}

const ANNEAL_FACTOR: f64 = 0.5;
const ANNEAL_SWEEPS: usize = 50;

fn sinkhorn_sweep(cost: &[f64], f: &mut [f64], g: &mut [f64], eps: f64, log_w: f64, n: usize) {
    for i in 0..n {
        let row = &cost[i * n..(i + 1) * n];
        f[i] = eps * log_w - eps * log_sum_exp((0..n).map(|j| (g[j] - row[j]) / eps));
    }
    for j in 0..n {
        g[j] = eps * log_w - eps * log_sum_exp((0..n).map(|i| (f[i] - cost[i * n + j]) / eps));
    }
}

fn row_error(cost: &[f64], f: &[f64], g: &[f64], eps: f64, n: usize) -> f64 {
    let target = 1.0 / n as f64;
    (0..n)
        .map(|i| {
            let s: f64 = (0..n).map(|j| ((f[i] + g[j] - cost[i * n + j]) / eps).exp()).sum();
            (s - target).abs()
        })
        .sum()
}

/// Projects a nonnegative plan onto the uniform transport polytope.
fn round_to_feasible(plan: &mut [f64], n: usize) {
    let target = 1.0 / n as f64;
    for i in 0..n {
        let row = &mut plan[i * n..(i + 1) * n];
        let s: f64 = row.iter().sum();
        if s > target {
            let x = target / s;
            row.iter_mut().for_each(|p| *p *= x);
        }
    }
    for j in 0..n {
        let s: f64 = (0..n).map(|i| plan[i * n + j]).sum();
        if s > target {
            let x = target / s;
            (0..n).for_each(|i| plan[i * n + j] *= x);
        }
    }
    let row_def: Vec<f64> = (0..n)
        .map(|i| (target - plan[i * n..(i + 1) * n].iter().sum::<f64>()).max(0.0))
        .collect();
    let col_def: Vec<f64> = (0..n)
        .map(|j| (target - (0..n).map(|i| plan[i * n + j]).sum::<f64>()).max(0.0))
        .collect();
    let mass: f64 = row_def.iter().sum();
    if mass > 0.0 {
        for i in 0..n {
            for j in 0..n {
                plan[i * n + j] += row_def[i] * col_def[j] / mass;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::w2_exact;

    fn measure(rows: &[[f64; 2]]) -> EmpiricalMeasure {
        EmpiricalMeasure::new(2, rows.concat()).unwrap()
    }

    #[test]
    fn identical_measures_shrink_with_regularisation() {
        let a = measure(&[[0.0, 0.0], [1.0, 0.5], [-0.3, 2.0], [0.7, -1.0]]);
        let values: Vec<f64> = [1e-1, 1e-2, 1e-3]
            .iter()
            .map(|&r| w2_approx(&a, &a, r).unwrap().value)
            .collect();
        assert!(values[0] >= values[1] && values[1] >= values[2], "{values:?}");
        assert!(values[2] < 1e-6);
    }

    #[test]
    fn swapped_clusters_are_far_apart() {
        let a = measure(&[[0.0, 0.0], [0.1, 0.0], [10.0, 0.0], [10.1, 0.0]]);
        let b = measure(&[[10.0, 5.0], [10.1, 5.0], [0.0, 5.0], [0.1, 5.0]]);
        let r = w2_approx(&a, &b, 1e-3).unwrap();
        assert!(r.approximate);
        assert!(r.value >= 2.5);
        assert!(r.value >= w2_exact(&a, &b).unwrap() - 1e-6);
    }

    #[test]
    fn rounded_plan_is_feasible() {
        let n = 3;
        let mut plan = vec![0.5, 0.1, 0.0, 0.0, 0.2, 0.1, 0.05, 0.0, 0.3];
        round_to_feasible(&mut plan, n);
        for i in 0..n {
            let r: f64 = plan[i * n..(i + 1) * n].iter().sum();
            let c: f64 = (0..n).map(|k| plan[k * n + i]).sum();
            assert!((r - 1.0 / 3.0).abs() < 1e-15 && (c - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!(plan.iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn non_convergence_is_reported() {
        let a = measure(&[[0.0, 0.0], [1.0, 3.0], [2.0, -1.0]]);
        let b = measure(&[[5.0, 1.0], [0.2, 0.2], [-2.0, 1.0]]);
        let opts = SinkhornOptions {
            max_iterations: 1,
            tolerance: 1e-15,
        };
        assert!(matches!(
            w2_approx_with(&a, &b, 1e-4, opts),
            Err(Error::NonConvergence { .. })
        ));
    }
}
