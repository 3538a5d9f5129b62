//! Neural-network quantum states: complex RBM wavefunctions trained by
//! variational Monte Carlo with stochastic reconfiguration or the linear method.

// Validation code rejects NaN with negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod harness;
pub mod hilbert;
pub mod operators;
pub mod optimizers;
pub mod oracle;
pub mod sampling;
pub mod validate;
pub mod wavefunction;

pub use error::{NqsError, Result};
