use super::step::{heavy_ball_update, perturb, pool_gradient_into, sample_gradient_into, semi_implicit_step};
use super::{DataStream, Hyper, PdState, ShbState};
use crate::datagen::rng::{counter_rng, mix_seed, tags};
use crate::datagen::Pool;
use crate::model::{Network, Objective};
use crate::{Error, Result};

/// A trajectory advanced in units of one `ε` time step.
pub trait Dynamics {
    type Net: Network;

    fn params(&self) -> &Self::Net;

    fn hyper(&self) -> &Hyper;

    /// Grid index `k` of the current parameters (time `kε`).
    fn step_index(&self) -> u64;

    fn advance(&mut self) -> Result<()>;
}

/// Sorted, de-duplicated grid indices at which snapshots are taken.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnapshotGrid {
    steps: Vec<u64>,
}

impl SnapshotGrid {
    /// Every grid point `0, 1, …, ⌊T/ε⌋`.
    pub fn every_step(h: &Hyper) -> Self {
        Self {
            steps: (0..=h.steps()).collect(),
        }
    }

    /// Every `stride`-th grid point; the final point is always included.
    pub fn strided(h: &Hyper, stride: u64) -> Self {
        let last = h.steps();
        let mut steps: Vec<u64> = (0..=last).step_by(stride.max(1) as usize).collect();
        if steps.last() != Some(&last) {
            steps.push(last);
        }
        Self { steps }
    }

    /// Requested times snapped down to the grid and clipped to the horizon.
    pub fn from_times(h: &Hyper, times: &[f64]) -> Result<Self> {
        let last = h.steps();
        let mut steps = Vec::with_capacity(times.len());
        for &t in times {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::config("snapshot_times", format!("invalid time {t}")));
            }
            steps.push(h.step_of(t).min(last));
        }
        steps.sort_unstable();
        steps.dedup();
        Ok(Self { steps })
    }

    pub fn from_steps(mut steps: Vec<u64>) -> Self {
        steps.sort_unstable();
        steps.dedup();
        Self { steps }
    }

    pub fn steps(&self) -> &[u64] {
        &self.steps
    }

    pub fn last(&self) -> u64 {
        self.steps.last().copied().unwrap_or(0)
    }
}

/// Parameter snapshots at grid indices `steps`, i.e. times `steps[i]·ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<N> {
    pub eps: f64,
    pub steps: Vec<u64>,
    pub snapshots: Vec<N>,
}

impl<N: Network> Trajectory<N> {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.steps[i] as f64 * self.eps
    }

    pub fn last(&self) -> Option<&N> {
        self.snapshots.last()
    }

    /// Applies `f` to every snapshot, keeping the grid.
    pub fn try_map<M: Network>(&self, f: impl Fn(&N) -> Result<M>) -> Result<Trajectory<M>> {
        Ok(Trajectory {
            eps: self.eps,
            steps: self.steps.clone(),
            snapshots: self.snapshots.iter().map(f).collect::<Result<_>>()?,
        })
    }
}

/// Advances `dynamics` through `grid`, cloning the parameters at each point.
pub fn record<D: Dynamics>(dynamics: &mut D, grid: &SnapshotGrid) -> Result<Trajectory<D::Net>> {
    let mut steps = Vec::with_capacity(grid.steps().len());
    let mut snapshots = Vec::with_capacity(grid.steps().len());
    for &target in grid.steps() {
        if target < dynamics.step_index() {
            return Err(Error::invalid("snapshot grid starts before the current step"));
        }
        while dynamics.step_index() < target {
            dynamics.advance()?;
        }
        steps.push(target);
        snapshots.push(dynamics.params().clone());
    }
    Ok(Trajectory {
        eps: dynamics.hyper().eps,
        steps,
        snapshots,
    })
}

/// One-pass stochastic heavy ball over a [`DataStream`].
#[derive(Debug, Clone)]
pub struct ShbRunner<N: Network> {
    state: ShbState<N>,
    stream: DataStream,
    obj: Objective,
    hyper: Hyper,
    batch: usize,
    grad: Vec<f64>,
}

impl<N: Network> ShbRunner<N> {
    pub fn new(w0: N, stream: DataStream, obj: Objective, hyper: Hyper) -> Result<Self> {
        hyper.validate()?;
        check_dim(&w0, stream.source().dim())?;
        let grad = vec![0.0; w0.num_params()];
        Ok(Self {
            state: ShbState::new(w0),
            stream,
            obj,
            hyper,
            batch: 1,
            grad,
        })
    }

    /// Minibatch mode: step `k` averages the gradients of draws `kB, …, kB+B−1`.
    pub fn with_batch(mut self, batch: usize) -> Result<Self> {
        if batch == 0 {
            return Err(Error::config("batch_size", "must be at least 1"));
        }
        self.batch = batch;
        Ok(self)
    }

    pub fn state(&self) -> &ShbState<N> {
        &self.state
    }
}

impl<N: Network> Dynamics for ShbRunner<N> {
    type Net = N;

    fn params(&self) -> &N {
        &self.state.w
    }

    fn hyper(&self) -> &Hyper {
        &self.hyper
    }

    fn step_index(&self) -> u64 {
        self.state.k
    }

    fn advance(&mut self) -> Result<()> {
        let s = &mut self.state;
        let mut ws = s.w.workspace();
        if self.batch == 1 {
            let z = self.stream.get(s.k);
            sample_gradient_into(&s.w, &z, &self.obj, &mut self.grad, &mut ws);
        } else {
            let first = s.k * self.batch as u64;
            let mut xs = Vec::with_capacity(self.batch * s.w.input_dim());
            let mut ys = Vec::with_capacity(self.batch);
            for b in 0..self.batch as u64 {
                let z = self.stream.get(first + b);
                xs.extend_from_slice(&z.x);
                ys.push(z.y);
            }
            self.grad.fill(0.0);
            let scale = 1.0 / self.batch as f64;
            s.w.add_batch_grad(&xs, &ys, &self.obj, scale, &mut self.grad, &mut ws);
        }
        s.k += 1;
        heavy_ball_update(
            s.w.as_mut_slice(),
            s.w_prev.as_mut_slice(),
            &self.grad,
            &self.hyper,
            None,
            s.k,
            "shb",
        )
    }
}

/// Noisy SHB; the Gaussian draws of step `k` come from their own counter stream.
#[derive(Debug, Clone)]
pub struct NoisyRunner<N: Network> {
    state: ShbState<N>,
    stream: DataStream,
    obj: Objective,
    hyper: Hyper,
    noise_key: u64,
    grad: Vec<f64>,
    noise: Vec<f64>,
}

impl<N: Network> NoisyRunner<N> {
    pub fn new(w0: N, stream: DataStream, obj: Objective, hyper: Hyper) -> Result<Self> {
        hyper.validate()?;
        check_dim(&w0, stream.source().dim())?;
        let p = w0.num_params();
        Ok(Self {
            state: ShbState::new(w0),
            stream,
            obj,
            noise_key: mix_seed(hyper.seed, tags::NOISE),
            hyper,
            grad: vec![0.0; p],
            noise: vec![0.0; p],
        })
    }
}

impl<N: Network> Dynamics for NoisyRunner<N> {
    type Net = N;

    fn params(&self) -> &N {
        &self.state.w
    }

    fn hyper(&self) -> &Hyper {
        &self.hyper
    }

    fn step_index(&self) -> u64 {
        self.state.k
    }

    fn advance(&mut self) -> Result<()> {
        let z = self.stream.get(self.state.k);
        let mut rng = counter_rng(self.noise_key, self.state.k);
        let s = &mut self.state;
        sample_gradient_into(&s.w, &z, &self.obj, &mut self.grad, &mut s.w.workspace());
        let noisy = perturb(s.w.as_slice(), &mut self.grad, &mut self.noise, &self.hyper, &mut rng);
        s.k += 1;
        heavy_ball_update(
            s.w.as_mut_slice(),
            s.w_prev.as_mut_slice(),
            &self.grad,
            &self.hyper,
            noisy.then_some(self.noise.as_slice()),
            s.k,
            "noisy shb",
        )
    }
}

/// Heavy ball with the gradient averaged over a fixed pool.
#[derive(Debug)]
pub struct HbRunner<'a, N: Network> {
    state: ShbState<N>,
    pool: &'a Pool,
    obj: Objective,
    hyper: Hyper,
    grad: Vec<f64>,
    ws: N::Workspace,
}

impl<'a, N: Network> HbRunner<'a, N> {
    pub fn new(w0: N, pool: &'a Pool, obj: Objective, hyper: Hyper) -> Result<Self> {
        hyper.validate()?;
        check_dim(&w0, pool.dim())?;
        Ok(Self {
            grad: vec![0.0; w0.num_params()],
            ws: w0.workspace(),
            state: ShbState::new(w0),
            pool,
            obj,
            hyper,
        })
    }
}

impl<N: Network> Dynamics for HbRunner<'_, N> {
    type Net = N;

    fn params(&self) -> &N {
        &self.state.w
    }

    fn hyper(&self) -> &Hyper {
        &self.hyper
    }

    fn step_index(&self) -> u64 {
        self.state.k
    }

    fn advance(&mut self) -> Result<()> {
        let s = &mut self.state;
        pool_gradient_into(&s.w, self.pool, &self.obj, &mut self.grad, &mut self.ws);
        s.k += 1;
        heavy_ball_update(
            s.w.as_mut_slice(),
            s.w_prev.as_mut_slice(),
            &self.grad,
            &self.hyper,
            None,
            s.k,
            "hb",
        )
    }
}

/// Particle dynamics with `substeps` semi-implicit Euler steps per `ε`.
#[derive(Debug)]
pub struct PdRunner<'a, N: Network> {
    state: PdState<N>,
    pool: &'a Pool,
    obj: Objective,
    hyper: Hyper,
    substeps: u32,
    k: u64,
    grad: Vec<f64>,
    ws: N::Workspace,
}

impl<'a, N: Network> PdRunner<'a, N> {
    pub fn new(w0: N, pool: &'a Pool, obj: Objective, hyper: Hyper, substeps: u32) -> Result<Self> {
        hyper.validate()?;
        check_dim(&w0, pool.dim())?;
        if substeps == 0 {
            return Err(Error::invalid("at least one inner step per eps is required"));
        }
        Ok(Self {
            grad: vec![0.0; w0.num_params()],
            ws: w0.workspace(),
            state: PdState::new(w0),
            pool,
            obj,
            hyper,
            substeps,
            k: 0,
        })
    }

    pub fn state(&self) -> &PdState<N> {
        &self.state
    }
}

impl<N: Network> Dynamics for PdRunner<'_, N> {
    type Net = N;

    fn params(&self) -> &N {
        &self.state.theta
    }

    fn hyper(&self) -> &Hyper {
        &self.hyper
    }

    fn step_index(&self) -> u64 {
        self.k
    }

    fn advance(&mut self) -> Result<()> {
        let step = self.hyper.eps / self.substeps as f64;
        for _ in 0..self.substeps {
            let s = &mut self.state;
            pool_gradient_into(&s.theta, self.pool, &self.obj, &mut self.grad, &mut self.ws);
            semi_implicit_step(
                s.theta.as_mut_slice(),
                &mut s.r,
                &self.grad,
                self.hyper.gamma,
                self.hyper.lambda,
                step,
            );
        }
        self.k += 1;
        self.state.t = self.k as f64 * self.hyper.eps;
        if let Some(i) = crate::numeric::first_non_finite(self.state.theta.as_slice()) {
            return Err(Error::NonFinite {
                step: self.k,
                coordinate: i,
                context: "pd",
            });
        }
        Ok(())
    }
}

fn check_dim<N: Network>(w: &N, dim: usize) -> Result<()> {
    if w.input_dim() != dim {
        return Err(Error::DimensionMismatch {
            what: "data dimension",
            expected: w.input_dim(),
            found: dim,
        });
    }
    Ok(())
}
