//! Explicit ansatz with one free log-amplitude per basis state.
//!
//! Parameter `k` is `log psi` of the configuration with canonical index `k`,
//! so `D_k(x) = [k == index(x)]`. Only practical for small `N`.

use num_complex::Complex64;

use crate::error::{domain, Result};
use crate::hilbert::SpinConfiguration;

use super::{LookupTable, Wavefunction};

#[derive(Clone, Debug, PartialEq)]
pub struct LogAmplitudeTable {
    n_sites: usize,
    values: Vec<Complex64>,
}

fn index_of(x: &[i8]) -> usize {
    x.iter().fold(0usize, |acc, &s| (acc << 1) | usize::from(s < 0))
}

impl LogAmplitudeTable {
    pub const MAX_SITES: usize = 20;

    pub fn new(n_sites: usize, values: Vec<Complex64>) -> Result<Self> {
        if n_sites == 0 || n_sites > Self::MAX_SITES {
            return domain(format!("table ansatz supports 1..={} sites", Self::MAX_SITES));
        }
        if values.len() != 1 << n_sites {
            return domain(format!("expected {} log-amplitudes, got {}", 1usize << n_sites, values.len()));
        }
        Ok(Self { n_sites, values })
    }

    /// Log-amplitudes taken from a vector of amplitudes. Zero amplitudes map to
    /// a large negative real part.
    pub fn from_amplitudes(n_sites: usize, amps: &[Complex64]) -> Result<Self> {
        let values = amps
            .iter()
            .map(|a| if a.norm() > 0.0 { a.ln() } else { Complex64::new(-700.0, 0.0) })
            .collect();
        Self::new(n_sites, values)
    }

    pub fn get(&self, x: &SpinConfiguration) -> Complex64 {
        self.values[x.index()]
    }
}

impl Wavefunction for LogAmplitudeTable {
    fn n_sites(&self) -> usize {
        self.n_sites
    }

    fn n_params(&self) -> usize {
        self.values.len()
    }

    fn params(&self) -> Vec<Complex64> {
        self.values.clone()
    }

    fn with_params(&self, params: &[Complex64]) -> Result<Self> {
        Self::new(self.n_sites, params.to_vec())
    }

    fn log_psi(&self, x: &[i8]) -> Complex64 {
        self.values[index_of(x)]
    }

    fn lookup(&self, _x: &[i8]) -> LookupTable {
        LookupTable::default()
    }

    fn log_psi_ratio(&self, x: &[i8], flips: &[usize], _lut: &LookupTable) -> Complex64 {
        let i = index_of(x);
        let j = flips.iter().fold(i, |acc, &f| acc ^ (1 << (self.n_sites - 1 - f)));
        self.values[j] - self.values[i]
    }

    fn update_lookup(&self, _x: &[i8], _flips: &[usize], _lut: &mut LookupTable) {}

    fn log_derivatives_with(&self, x: &[i8], _lut: &LookupTable, out: &mut [Complex64]) {
        out.fill(Complex64::new(0.0, 0.0));
        out[index_of(x)] = Complex64::new(1.0, 0.0);
    }
}
