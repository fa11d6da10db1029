//! Couplings between dynamics and the trajectory distance `D_T`.
//!
//! Coupled dynamics start from one initialisation and read one data stream,
//! so their distance isolates a single source of error: time discretisation
//! (PD vs HB), sampling (HB vs SHB) or finite width (proxy vs PD).

mod chaos;
mod distance;
mod embedding;
mod two_layer;

pub use chaos::{chaos_experiment, ChaosConfig, ChaosFit, ChaosMetric, ChaosRow, MedianRow, RateTable};
pub use distance::{dist_2l, dist_3l, DistanceReport, IndexMaps};
pub use embedding::{embed_3l, embed_with_maps, RefPool3L};
pub use two_layer::{couple_2l, mf_proxy, Coupling2L, PROXY_PARAM_LIMIT};
