use crate::datagen::{init_2l, DataSource, InitSpec, Pool};
use crate::dynamics::{
    record, DataStream, HbRunner, Hyper, NoisyRunner, PdRunner, ShbRunner, SnapshotGrid, Trajectory,
};
use crate::model::{Network, Objective, Params2L};
use crate::{Error, Result};

/// Largest proxy size, in parameters, accepted by [`mf_proxy`].
pub const PROXY_PARAM_LIMIT: usize = 1 << 22;

/// Two-layer dynamics sharing one initialisation, stream and pool.
#[derive(Debug, Clone)]
pub struct Coupling2L {
    pub init: Params2L,
    pub init_spec: InitSpec,
    pub stream: DataStream,
    pub pool: Pool,
    pub objective: Objective,
    pub hyper: Hyper,
}

/// Builds the width-`n` coupling; every random input is keyed by `hyper.seed`.
pub fn couple_2l(
    n: usize,
    init_spec: &InitSpec,
    source: &DataSource,
    objective: Objective,
    hyper: Hyper,
    pool_size: usize,
) -> Result<Coupling2L> {
    hyper.validate()?;
    if n == 0 {
        return Err(Error::invalid("coupling width must be positive"));
    }
    Ok(Coupling2L {
        init: init_2l(init_spec, n, source.dim(), hyper.seed)?,
        init_spec: init_spec.clone(),
        stream: DataStream::new(source.clone(), hyper.seed),
        pool: Pool::draw(source, hyper.seed, pool_size)?,
        objective,
        hyper,
    })
}

impl Coupling2L {
    pub fn width(&self) -> usize {
        self.init.width()
    }

    pub fn grid(&self) -> SnapshotGrid {
        SnapshotGrid::every_step(&self.hyper)
    }

    pub fn shb(&self) -> Result<Trajectory<Params2L>> {
        let mut r = ShbRunner::new(self.init.clone(), self.stream.clone(), self.objective, self.hyper)?;
        record(&mut r, &self.grid())
    }

    pub fn noisy(&self) -> Result<Trajectory<Params2L>> {
        let mut r = NoisyRunner::new(self.init.clone(), self.stream.clone(), self.objective, self.hyper)?;
        record(&mut r, &self.grid())
    }

    pub fn hb(&self) -> Result<Trajectory<Params2L>> {
        let mut r = HbRunner::new(self.init.clone(), &self.pool, self.objective, self.hyper)?;
        record(&mut r, &self.grid())
    }

    pub fn pd(&self, substeps: u32) -> Result<Trajectory<Params2L>> {
        let mut r = PdRunner::new(self.init.clone(), &self.pool, self.objective, self.hyper, substeps)?;
        record(&mut r, &self.grid())
    }
}

/// PD at width `n_ref` from the same seed, standing in for the mean-field limit.
///
/// Initialisations are prefix-consistent, so neuron `j < n` of the proxy
/// starts where neuron `j` of the coupled network starts.
pub fn mf_proxy(n_ref: usize, substeps: u32, coupling: &Coupling2L) -> Result<Trajectory<Params2L>> {
    let n = coupling.width();
    if n_ref < 4 * n {
        return Err(Error::invalid(format!(
            "proxy width {n_ref} must be at least four times the coupled width {n}"
        )));
    }
    let params = n_ref * (coupling.init.input_dim() + 1);
    if params > PROXY_PARAM_LIMIT {
        return Err(Error::invalid(format!(
            "proxy needs {params} parameters, above the limit of {PROXY_PARAM_LIMIT}"
        )));
    }
    let w0 = init_2l(
        &coupling.init_spec,
        n_ref,
        coupling.init.input_dim(),
        coupling.hyper.seed,
    )?;
    let mut r = PdRunner::new(w0, &coupling.pool, coupling.objective, coupling.hyper, substeps)?;
    record(&mut r, &coupling.grid())
}
