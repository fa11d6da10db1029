//! Heavy-ball training dynamics.
//!
//! All four dynamics share one parameter convention. The iterate `W(k)` lives
//! on the time grid `t = kε`, and the momentum is carried implicitly as
//! `W(k) − W(k−1)`:
//!
//! * SHB: one fresh sample per step.
//! * HB: the same recursion driven by the pool-averaged gradient.
//! * PD: the continuous system `θ' = r`, `r' = −γr − ∇Ψ − λθ`, integrated with
//!   semi-implicit Euler on a finer step and reported on the `kε` grid.
//! * Noisy SHB: SHB on `Ψ + λ‖θ‖²/2` with Gaussian momentum noise.

mod hyper;
mod runner;
mod state;
mod step;
mod stream;
mod training;

pub use hyper::Hyper;
pub use runner::{record, Dynamics, HbRunner, NoisyRunner, PdRunner, ShbRunner, SnapshotGrid, Trajectory};
pub use state::{PdState, ShbState};
pub use step::{
    hb_step, hb_unrolled, noisy_shb_step, pd_integrate, pool_gradient, semi_implicit_step, shb_step,
    unrolled_coefficient,
};
pub use stream::DataStream;
pub use training::{run_training, DynamicsKind, RiskPoint, TrainingRun, TrainingSpec};
