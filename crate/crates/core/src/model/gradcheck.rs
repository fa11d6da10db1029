//! Central finite-difference gradient checker.
//!
//! The checker only calls the forward pass and the loss value, so it is an
//! independent route to the partial derivatives computed by the backward
//! kernels.

use super::{Network, Objective, Params2L, Params3L};

/// Central-difference step.
pub const DEFAULT_STEP: f64 = 1e-5;
/// Absolute differences below this are treated as agreement.
pub const ABS_FLOOR: f64 = 1e-8;

/// Raw partial derivatives `∂R(y, f(x; W))/∂W` by central differences.
pub fn finite_difference_raw<N: Network>(w: &N, x: &[f64], y: f64, obj: &Objective, h: f64) -> Vec<f64> {
    let mut probe = w.clone();
    let mut ws = w.workspace();
    let mut out = Vec::with_capacity(w.num_params());
    for i in 0..w.num_params() {
        let orig = probe.as_slice()[i];
        probe.as_mut_slice()[i] = orig + h;
        let plus = obj.loss.value(y, probe.output(x, obj, &mut ws));
        probe.as_mut_slice()[i] = orig - h;
        let minus = obj.loss.value(y, probe.output(x, obj, &mut ws));
        probe.as_mut_slice()[i] = orig;
        out.push((plus - minus) / (2.0 * h));
    }
    out
}

/// Per-parameter width factors that turn raw partials into scaled gradients:
/// `n` for both layers of a two-layer net.
pub fn scale_factors_2l(w: &Params2L) -> Vec<f64> {
    vec![w.width() as f64; w.num_params()]
}

/// `n1` for the first layer, `n1·n2` for the second and `n2` for the third.
pub fn scale_factors_3l(w: &Params3L) -> Vec<f64> {
    let (n1, n2) = w.widths();
    let mut f = vec![n1 as f64; w.w1().len()];
    f.extend(std::iter::repeat_n((n1 * n2) as f64, n1 * n2));
    f.extend(std::iter::repeat_n(n2 as f64, n2));
    f
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_index: Option<usize>,
    pub checked: usize,
}

impl GradCheckReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_rel_error < tol
    }
}

/// Relative error `|a−b| / max(|a|, |b|)` per entry; entries whose absolute
/// difference is below `abs_floor` count as exact agreement.
pub fn compare(analytic: &[f64], numeric: &[f64], abs_floor: f64) -> GradCheckReport {
    assert_eq!(analytic.len(), numeric.len(), "gradient length mismatch");
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_index: None,
        checked: analytic.len(),
    };
    for (i, (a, b)) in analytic.iter().zip(numeric).enumerate() {
        let diff = (a - b).abs();
        let rel = if diff <= abs_floor {
            0.0
        } else {
            diff / a.abs().max(b.abs())
        };
        if rel > report.max_rel_error || rel.is_nan() {
            report.max_rel_error = if rel.is_nan() { f64::INFINITY } else { rel };
            report.worst_index = Some(i);
        }
    }
    report
}

/// Checks the width-scaled gradient of `w` at `(x, y)` against scaled
/// central differences.
pub fn check_scaled_gradient<N: Network>(
    w: &N,
    x: &[f64],
    y: f64,
    obj: &Objective,
    factors: &[f64],
) -> GradCheckReport {
    let mut analytic = vec![0.0; w.num_params()];
    w.add_scaled_grad(x, y, obj, 1.0, &mut analytic, &mut w.workspace());
    let numeric: Vec<f64> = finite_difference_raw(w, x, y, obj, DEFAULT_STEP)
        .iter()
        .zip(factors)
        .map(|(g, f)| g * f)
        .collect();
    compare(&analytic, &numeric, ABS_FLOOR)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Activation, Loss};

    #[test]
    fn compare_flags_relative_errors() {
        let r = compare(&[1.0, 2.0], &[1.0, 2.2], ABS_FLOOR);
        assert_eq!(r.worst_index, Some(1));
        assert!((r.max_rel_error - 0.2 / 2.2).abs() < 1e-12);
    }

    #[test]
    fn tiny_absolute_differences_pass() {
        let r = compare(&[1e-12], &[3e-12], ABS_FLOOR);
        assert_eq!(r.max_rel_error, 0.0);
    }

    #[test]
    fn three_layer_factors_cover_every_parameter() {
        let w = Params3L::zeros(4, 3, 5);
        let f = scale_factors_3l(&w);
        assert_eq!(f.len(), w.num_params());
        assert_eq!(f[0], 4.0);
        assert_eq!(f[20], 12.0);
        assert_eq!(*f.last().unwrap(), 3.0);
    }

    #[test]
    fn three_layer_gradient_matches_scaled_differences() {
        let w1: Vec<f64> = (0..10).map(|i| ((i * 7 % 5) as f64 - 2.0) * 0.3).collect();
        let w2: Vec<f64> = (0..6).map(|i| ((i * 3 % 4) as f64 - 1.5) * 0.8).collect();
        let w = Params3L::new(w1, w2, vec![1.5, -0.7, 0.9], 5).unwrap();
        let obj = Objective::three_layer(Activation::Tanh, Activation::Tanh, Loss::Logistic);
        let x = [0.3, -0.8, 0.5, 1.1, -0.2];
        let r = check_scaled_gradient(&w, &x, 1.0, &obj, &scale_factors_3l(&w));
        assert!(r.passed(1e-4), "{r:?}");
    }
}
