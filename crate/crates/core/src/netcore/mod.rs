//! Finite L-layer fully-connected networks with absorbed biases.
//!
//! A network with depth `L` has `L - 1` hidden layers. Inputs are always
//! stored with the bias coordinate appended, `x̃ = (x, 1)`, so the first
//! weight matrix has `d + 1` columns.

mod activation;
mod network;
mod serialize;
mod transform;
mod widths;

pub use activation::{ActivationKind, ActivationSpec};
pub use network::{backprop, forward, forward_backward, with_bias_column, NetParams};
pub use serialize::{load_network, network_from_json, network_to_json, save_network, NetworkDocument};
pub use transform::{absorb_bias, normalize_activation, StandardNet};
pub use widths::{max_nondecreasing_component, WidthVector};
