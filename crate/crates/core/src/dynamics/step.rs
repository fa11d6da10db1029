use rand::Rng;
use rand_distr::StandardNormal;

use super::runner::{record, PdRunner, SnapshotGrid, Trajectory};
use super::{Hyper, ShbState};
use crate::datagen::{Pool, Sample};
use crate::model::{Network, Objective};
use crate::{Error, Result};

/// `W ← W + β(W − W_prev) − ε² g (+ noise)`, shifting `W` into `W_prev`.
pub(crate) fn heavy_ball_update(
    w: &mut [f64],
    w_prev: &mut [f64],
    grad: &[f64],
    h: &Hyper,
    noise: Option<&[f64]>,
    step: u64,
    context: &'static str,
) -> Result<()> {
    let beta = h.momentum();
    let eta = h.learning_rate();
    for i in 0..w.len() {
        let cur = w[i];
        let mut next = cur + beta * (cur - w_prev[i]) - eta * grad[i];
        if let Some(xi) = noise {
            next += xi[i];
        }
        if !next.is_finite() {
            return Err(Error::NonFinite {
                step,
                coordinate: i,
                context,
            });
        }
        w_prev[i] = cur;
        w[i] = next;
    }
    Ok(())
}

/// Overwrites `out` with the scaled gradient at one sample.
pub(crate) fn sample_gradient_into<N: Network>(
    w: &N,
    z: &Sample,
    obj: &Objective,
    out: &mut [f64],
    ws: &mut N::Workspace,
) {
    out.fill(0.0);
    w.add_batch_grad(&z.x, std::slice::from_ref(&z.y), obj, 1.0, out, ws);
}

/// Overwrites `out` with the pool-averaged scaled gradient, summed in pool order.
pub(crate) fn pool_gradient_into<N: Network>(
    w: &N,
    pool: &Pool,
    obj: &Objective,
    out: &mut [f64],
    ws: &mut N::Workspace,
) {
    out.fill(0.0);
    w.add_batch_grad(pool.inputs(), pool.labels(), obj, 1.0 / pool.len() as f64, out, ws);
}

/// Pool-averaged scaled gradient `E_z Δ(z, W)` over a fixed pool.
pub fn pool_gradient<N: Network>(w: &N, pool: &Pool, obj: &Objective) -> Result<Vec<f64>> {
    check_pool(w, pool)?;
    let mut out = vec![0.0; w.num_params()];
    pool_gradient_into(w, pool, obj, &mut out, &mut w.workspace());
    Ok(out)
}

fn check_pool<N: Network>(w: &N, pool: &Pool) -> Result<()> {
    if pool.dim() != w.input_dim() {
        return Err(Error::DimensionMismatch {
            what: "pool input dimension",
            expected: w.input_dim(),
            found: pool.dim(),
        });
    }
    Ok(())
}

fn check_sample<N: Network>(w: &N, z: &Sample) -> Result<()> {
    if z.x.len() != w.input_dim() {
        return Err(Error::DimensionMismatch {
            what: "sample input dimension",
            expected: w.input_dim(),
            found: z.x.len(),
        });
    }
    Ok(())
}

/// One stochastic heavy-ball step on the sample `z`.
pub fn shb_step<N: Network>(s: &mut ShbState<N>, z: &Sample, obj: &Objective, h: &Hyper) -> Result<()> {
    check_sample(&s.w, z)?;
    let mut grad = vec![0.0; s.w.num_params()];
    sample_gradient_into(&s.w, z, obj, &mut grad, &mut s.w.workspace());
    s.k += 1;
    heavy_ball_update(s.w.as_mut_slice(), s.w_prev.as_mut_slice(), &grad, h, None, s.k, "shb")
}

/// One heavy-ball step driven by the pool-averaged gradient.
pub fn hb_step<N: Network>(s: &mut ShbState<N>, pool: &Pool, obj: &Objective, h: &Hyper) -> Result<()> {
    let grad = pool_gradient(&s.w, pool, obj)?;
    s.k += 1;
    heavy_ball_update(s.w.as_mut_slice(), s.w_prev.as_mut_slice(), &grad, h, None, s.k, "hb")
}

/// Adds `λW` and fills `noise` with `ε^{3/2}√(2γβ⁻¹) ξ`; returns whether noise is active.
pub(crate) fn perturb<R: Rng + ?Sized>(w: &[f64], grad: &mut [f64], noise: &mut [f64], h: &Hyper, rng: &mut R) -> bool {
    if h.lambda != 0.0 {
        for (g, p) in grad.iter_mut().zip(w) {
            *g += h.lambda * p;
        }
    }
    if h.beta_inv == 0.0 {
        return false;
    }
    let scale = h.noise_scale();
    for v in noise.iter_mut() {
        *v = scale * rng.sample::<f64, _>(StandardNormal);
    }
    true
}

/// Euler–Maruyama heavy-ball step on the regularised objective with momentum noise.
///
/// With `λ = 0` and `β⁻¹ = 0` this performs exactly the arithmetic of [`shb_step`]
/// and draws nothing from `rng`.
pub fn noisy_shb_step<N: Network, R: Rng + ?Sized>(
    s: &mut ShbState<N>,
    z: &Sample,
    obj: &Objective,
    h: &Hyper,
    rng: &mut R,
) -> Result<()> {
    check_sample(&s.w, z)?;
    let p = s.w.num_params();
    let mut grad = vec![0.0; p];
    sample_gradient_into(&s.w, z, obj, &mut grad, &mut s.w.workspace());
    let mut noise = vec![0.0; p];
    let noisy = perturb(s.w.as_slice(), &mut grad, &mut noise, h, rng);
    s.k += 1;
    heavy_ball_update(
        s.w.as_mut_slice(),
        s.w_prev.as_mut_slice(),
        &grad,
        h,
        noisy.then_some(noise.as_slice()),
        s.k,
        "noisy shb",
    )
}

/// `c_l^(k) = ε² Σ_{i=0}^{k−1−l} (1−γε)^i` for `l < k`.
pub fn unrolled_coefficient(h: &Hyper, k: u64, l: u64) -> f64 {
    assert!(l < k, "coefficient needs l < k");
    let beta = h.momentum();
    let mut sum = 0.0;
    let mut power = 1.0;
    for _ in 0..(k - l) {
        sum += power;
        power *= beta;
    }
    h.learning_rate() * sum
}

/// `W(k)` from the accumulated form `W(0) − Σ_{l<k} c_l^(k) ∇Ψ(W(l))`.
///
/// Each `W(l)` is rebuilt from `W(0)` and the stored gradients, never from
/// the two-term recursion.
pub fn hb_unrolled<N: Network>(w0: &N, pool: &Pool, obj: &Objective, h: &Hyper, k: u64) -> Result<N> {
    if k == 0 {
        return Err(Error::invalid("unrolled recursion needs k >= 1"));
    }
    check_pool(w0, pool)?;
    let k = k as usize;
    // coeff[j] = c_l^(l+j); depends on the lag only.
    let mut coeff = vec![0.0; k + 1];
    for (j, c) in coeff.iter_mut().enumerate().skip(1) {
        *c = unrolled_coefficient(h, j as u64, 0);
    }
    let mut ws = w0.workspace();
    let mut grads: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut w = w0.clone();
    for l in 0..=k {
        if l > 0 {
            let base = w0.as_slice();
            let out = w.as_mut_slice();
            for i in 0..out.len() {
                let mut acc = 0.0;
                for (m, g) in grads.iter().enumerate() {
                    acc += coeff[l - m] * g[i];
                }
                out[i] = base[i] - acc;
                if !out[i].is_finite() {
                    return Err(Error::NonFinite {
                        step: l as u64,
                        coordinate: i,
                        context: "hb unrolled",
                    });
                }
            }
        }
        if l < k {
            let mut g = vec![0.0; w.num_params()];
            pool_gradient_into(&w, pool, obj, &mut g, &mut ws);
            grads.push(g);
        }
    }
    Ok(w)
}

/// One semi-implicit Euler step: `r ← r + step(−γr − g − λθ)`, then `θ ← θ + step·r`.
pub fn semi_implicit_step(theta: &mut [f64], r: &mut [f64], grad: &[f64], gamma: f64, lambda: f64, step: f64) {
    for i in 0..theta.len() {
        let mut force = -gamma * r[i] - grad[i];
        if lambda != 0.0 {
            force -= lambda * theta[i];
        }
        r[i] += step * force;
        theta[i] += step * r[i];
    }
}

/// Number of inner steps per `ε`; `step` must divide `ε`.
pub(crate) fn substeps_for(eps: f64, step: f64) -> Result<u32> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::invalid("integration step must be finite and positive"));
    }
    if step > eps * (1.0 + 1e-12) {
        return Err(Error::invalid(format!("integration step {step} exceeds eps {eps}")));
    }
    let m = (eps / step).round();
    if (m * step - eps).abs() > 1e-9 * eps || m > u32::MAX as f64 {
        return Err(Error::invalid(format!(
            "integration step {step} does not divide eps {eps}"
        )));
    }
    Ok(m as u32)
}

/// Integrates the particle dynamics with inner step `step`, reporting on `grid`.
pub fn pd_integrate<N: Network>(
    w0: &N,
    pool: &Pool,
    obj: &Objective,
    h: &Hyper,
    step: f64,
    grid: &SnapshotGrid,
) -> Result<Trajectory<N>> {
    let substeps = substeps_for(h.eps, step)?;
    let mut runner = PdRunner::new(w0.clone(), pool, *obj, *h, substeps)?;
    record(&mut runner, grid)
}
