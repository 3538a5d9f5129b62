//! Variational wavefunctions: the complex RBM and an explicit log-amplitude table.
//!
//! Every ansatz works in log space. Probabilities are formed as
//! `exp(2 Re(log psi(x') - log psi(x)))` and never from `exp(log psi)` directly.
//! Imaginary parts of log-amplitudes are only defined modulo `2 pi`.

mod rbm;
mod table;

use num_complex::Complex64;

use crate::error::Result;

pub use rbm::{init_params, RbmParameters, RbmShape, RbmSnapshot};
pub use table::LogAmplitudeTable;

/// Per-chain cache of hidden-unit pre-activations,
/// `theta_j = b_j + sum_i w_ij x_i` for the chain's current configuration.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct LookupTable {
    pub theta: Vec<Complex64>,
}

/// A holomorphic, parameterized amplitude `psi_theta(x)` over spin configurations.
pub trait Wavefunction: Clone + Send + Sync {
    fn n_sites(&self) -> usize;

    fn n_params(&self) -> usize;

    /// Flattened parameter vector in the ansatz's documented order.
    fn params(&self) -> Vec<Complex64>;

    /// Copy of `self` with the parameter vector replaced.
    fn with_params(&self, params: &[Complex64]) -> Result<Self>;

    fn log_psi(&self, x: &[i8]) -> Complex64;

    fn lookup(&self, x: &[i8]) -> LookupTable;

    /// `log psi(x') - log psi(x)` where `x'` is `x` with `flips` flipped.
    fn log_psi_ratio(&self, x: &[i8], flips: &[usize], lut: &LookupTable) -> Complex64;

    /// Moves `lut` from `x` to `x` flipped on `flips`. `x` is the state before the move.
    fn update_lookup(&self, x: &[i8], flips: &[usize], lut: &mut LookupTable);

    /// `D_k(x) = d log psi(x) / d theta_k`, written into `out` (length `n_params`).
    fn log_derivatives_with(&self, x: &[i8], lut: &LookupTable, out: &mut [Complex64]);

    fn log_derivatives(&self, x: &[i8]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.n_params()];
        self.log_derivatives_with(x, &self.lookup(x), &mut out);
        out
    }

    /// `self` with `delta` added to every parameter.
    fn shifted(&self, delta: &[Complex64]) -> Result<Self> {
        let p: Vec<Complex64> = self.params().iter().zip(delta).map(|(a, d)| a + d).collect();
        self.with_params(&p)
    }
}

/// `log(1 + e^z)` without overflow for large `Re z`.
pub fn log1p_exp(z: Complex64) -> Complex64 {
    if z.re > 0.0 {
        z + (1.0 + (-z).exp()).ln()
    } else {
        (1.0 + z.exp()).ln()
    }
}

/// `e^z / (1 + e^z)`, stable for either sign of `Re z`.
pub fn sigmoid(z: Complex64) -> Complex64 {
    if z.re >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
