use serde::Serialize;

use super::config::{ExperimentConfig, ModelKind};
use crate::datagen::{init_2l, init_3l, DataSource, InitCoupling};
use crate::dynamics::ShbState;
use crate::model::{Activation, Network};
use crate::{Error, Result};

/// `u₀ (1 + exp(((γ² + K)/γ) t))`, the closed-form growth envelope of a
/// second-order Gronwall-type inequality. Used for overlays only.
pub fn pachpatte_envelope(u0: f64, gamma: f64, kc: f64, t: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
    }
    if !(u0 >= 0.0) || !(kc >= 0.0) {
        return Err(Error::invalid("u0 and Kc must be non-negative"));
    }
    if u0 == 0.0 {
        return Ok(0.0);
    }
    Ok(u0 * (1.0 + ((gamma * gamma + kc) / gamma * t).exp()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Violated, but explicitly permitted by the config.
    Waived,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub status: CheckStatus,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub checks: Vec<Check>,
}

impl Diagnostics {
    /// No check failed; waived checks count as acceptable.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn push(&mut self, name: &'static str, ok: bool, message: String) {
        let status = if ok { CheckStatus::Pass } else { CheckStatus::Fail };
        self.checks.push(Check { name, status, message });
    }
}

/// Verifies the standing assumptions of the analysis for `config`.
///
/// Never fails: every problem becomes a failed check.
pub fn check_assumptions(config: &ExperimentConfig) -> Diagnostics {
    let mut d = Diagnostics { checks: Vec::new() };
    let gamma = config.hyper.gamma;
    for eps in config.eps_list() {
        let ge = gamma * eps;
        d.push(
            "step_size",
            gamma > 0.0 && eps > 0.0 && ge < 1.0,
            format!("gamma * eps = {ge} with gamma = {gamma}, eps = {eps}; need 0 < gamma * eps < 1"),
        );
    }

    let acts = match config.model {
        ModelKind::TwoLayer => vec![config.objective.activation],
        ModelKind::ThreeLayer => vec![config.objective.activation, config.objective.activation2],
    };
    for act in acts {
        let b = Activation::bound_scan(act);
        let ok = [b.value, b.first, b.second].iter().all(|v| v.is_finite()) && b.value <= act.sup_norm();
        d.push(
            "activation_bounded",
            ok,
            format!(
                "{act:?}: sup|σ| = {:.6}, sup|σ'| = {:.6}, sup|σ''| = {:.6}",
                b.value, b.first, b.second
            ),
        );
    }

    let loss = config.objective.loss;
    match loss.validate() {
        Err(e) => d.push("loss_derivative_bounded", false, e.to_string()),
        Ok(()) if loss.has_bounded_derivative() => d.push(
            "loss_derivative_bounded",
            true,
            format!("|∂R| ≤ {}", loss.derivative_bound(config.data.label_clip)),
        ),
        Ok(()) => d.checks.push(Check {
            name: "loss_derivative_bounded",
            status: if config.allow_unbounded_loss {
                CheckStatus::Waived
            } else {
                CheckStatus::Fail
            },
            message: format!(
                "{loss:?} has an unbounded derivative{}",
                if config.allow_unbounded_loss {
                    "; permitted by allow_unbounded_loss"
                } else {
                    "; set allow_unbounded_loss to run anyway"
                }
            ),
        }),
    }

    match config.data.validate().and_then(|_| DataSource::new(&config.data)) {
        Err(e) => d.push("data_bounded", false, e.to_string()),
        Ok(source) => {
            let (kx, ky) = (source.radius(), source.label_bound());
            let worst = (0..256u64)
                .map(|k| source.sample(0, k))
                .fold((0.0f64, 0.0f64), |(mx, my), s| {
                    (mx.max(s.x.iter().map(|v| v * v).sum::<f64>().sqrt()), my.max(s.y.abs()))
                });
            d.push(
                "data_bounded",
                worst.0 <= kx && worst.1 <= ky,
                format!(
                    "|x| ≤ {kx}, |y| ≤ {ky}; largest in 256 draws: {:.6}, {:.6}",
                    worst.0, worst.1
                ),
            );
        }
    }

    let width = config.widths.first().copied().unwrap_or(1).max(1);
    let dim = config.data.dim.max(1);
    let init = config.init.validate().and_then(|_| match config.model {
        ModelKind::TwoLayer => init_2l(&config.init, width, dim, config.hyper.seed).map(|w| w.as_slice().to_vec()),
        ModelKind::ThreeLayer => {
            init_3l(&config.init, width, width, dim, config.hyper.seed).map(|w| w.as_slice().to_vec())
        }
    });
    match init {
        Err(e) => d.push("init_finite", false, e.to_string()),
        Ok(w) => {
            let finite = w.iter().all(|v| v.is_finite());
            d.push(
                "init_finite",
                finite,
                format!("{} parameters at width {width}", w.len()),
            );
        }
    }

    let velocity_zero = match config.model {
        ModelKind::TwoLayer => init_2l(&config.init, 2, dim, 0).map(|w| ShbState::new(w).velocity(config.hyper.eps)),
        ModelKind::ThreeLayer => {
            init_3l(&config.init, 2, 2, dim, 0).map(|w| ShbState::new(w).velocity(config.hyper.eps))
        }
    }
    .map(|v| v.iter().all(|x| *x == 0.0))
    .unwrap_or(false);
    d.push(
        "zero_initial_velocity",
        velocity_zero,
        "the first heavy-ball step starts from W(-1) = W(0)".to_string(),
    );

    if config.model == ModelKind::ThreeLayer {
        d.push(
            "product_initialisation",
            config.init.coupling == InitCoupling::Product,
            format!("layers drawn as {:?}", config.init.coupling),
        );
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Loss;

    #[test]
    fn envelope_values() {
        assert_eq!(pachpatte_envelope(3.0, 2.0, 1.0, 0.0).unwrap(), 6.0);
        assert_eq!(pachpatte_envelope(0.0, 1.0, 1.0, 5.0).unwrap(), 0.0);
        let v = pachpatte_envelope(1.0, 1.0, 1.0, 1.0).unwrap();
        assert!((v - 8.389_056_098_930_65).abs() < 1e-12, "{v}");
        assert!(pachpatte_envelope(1.0, 0.0, 1.0, 1.0).is_err());
        assert!(pachpatte_envelope(1.0, -1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn default_config_passes() {
        let d = check_assumptions(&ExperimentConfig::default());
        assert!(d.passed(), "{d:#?}");
        assert_eq!(d.get("step_size").unwrap().status, CheckStatus::Pass);
    }

    #[test]
    fn large_step_fails_with_message() {
        let mut c = ExperimentConfig::default();
        c.hyper.gamma = 1.0;
        c.hyper.eps = 1.5;
        let d = check_assumptions(&c);
        let s = d.get("step_size").unwrap();
        assert_eq!(s.status, CheckStatus::Fail);
        assert!(s.message.contains("1.5"));
        assert!(!d.passed());
    }

    #[test]
    fn square_loss_fails_unless_waived() {
        let mut c = ExperimentConfig::default();
        c.objective.loss = Loss::Square;
        assert_eq!(
            check_assumptions(&c).get("loss_derivative_bounded").unwrap().status,
            CheckStatus::Fail
        );
        c.allow_unbounded_loss = true;
        let d = check_assumptions(&c);
        assert_eq!(d.get("loss_derivative_bounded").unwrap().status, CheckStatus::Waived);
        assert!(d.passed());
    }

    #[test]
    fn three_layer_joint_init_flagged() {
        let mut c = ExperimentConfig {
            model: ModelKind::ThreeLayer,
            widths: vec![4],
            ..ExperimentConfig::default()
        };
        assert_eq!(
            check_assumptions(&c).get("product_initialisation").unwrap().status,
            CheckStatus::Pass
        );
        c.init.coupling = InitCoupling::Joint;
        let d = check_assumptions(&c);
        assert_eq!(d.get("product_initialisation").unwrap().status, CheckStatus::Fail);
    }
}
