//! Dropout stability and piecewise-linear connecting paths.

mod dropout;
mod path;

pub use dropout::{
    dropout_error, dropout_net_2l, dropout_net_3l, half_split, random_half_subset, Dropout, DropoutSpec2L,
    DropoutSpec3L,
};
pub use path::{build_path_2l, risk_along_path, PathPoint, PathRisk, PathSpec, PATH_SEGMENTS};
