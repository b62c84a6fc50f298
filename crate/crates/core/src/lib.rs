//! Multilayer fully-connected networks regularized by the path-enhanced
//! scaled variation (PeSV) norm.
//!
//! The crate is split into:
//!
//! - [`netcore`]: network parameters, forward/backward passes and the
//!   function-preserving structural transforms (bias absorption,
//!   activation normalization, nondecreasing width component).
//! - [`norms`]: the PeSV norm and the other regularizers, their
//!   subgradients, and output-preserving rescalings.
//! - [`theory`]: closed-form approximation, entropy, Rademacher and
//!   generalization bounds, and double-descent sweeps of the bound.
//! - [`erm`]: the data model, loss functions and penalized ERM training.
//! - [`oracles`]: brute-force and Monte Carlo checks of the inequalities
//!   the bounds rest on.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod erm;
pub mod error;
pub mod netcore;
pub mod norms;
pub mod oracles;
pub mod theory;

pub use error::{Error, Result};
