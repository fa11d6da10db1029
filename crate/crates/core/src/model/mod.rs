//! Network parameterisations, forward passes and mean-field-scaled gradients.
//!
//! Both architectures average over hidden units (`1/n` factors), and the
//! gradients returned here are multiplied by the matching width factors so
//! every component is of order one independently of the widths.

mod activation;
pub mod gradcheck;
mod loss;
mod network;
mod three_layer;
mod two_layer;

pub use activation::{Activation, ActivationBounds};
pub use loss::Loss;
pub use network::{regularize_grad, Network, Objective};
pub use three_layer::{forward3, scaled_grad3, Forward3, Grad3L, Params3L, Workspace3L};
pub use two_layer::{forward2, scaled_grad2, Grad2L, Params2L, Workspace2L};
