//! Synthetic bounded data, parameter initialisers and Monte Carlo pool risk.

mod data;
mod init;
mod risk;
pub mod rng;

pub use data::{sample, DataSource, DataSpec, LabelModel, Pool, Sample};
pub use init::{init_2l, init_3l, InitCoupling, InitSpec};
pub use risk::pool_risk;
