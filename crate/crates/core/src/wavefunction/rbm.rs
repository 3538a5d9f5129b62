//! Complex-parameter restricted Boltzmann machine with the hidden layer traced out:
//!
//! ```text
//! psi(x) = exp(a . x) * prod_j (1 + exp(theta_j(x))),   theta_j = b_j + sum_i w_ij x_i
//! ```
//!
//! Visible units take the spin values `x_i = +-1`; hidden units are summed over `{0, 1}`.
//!
//! Parameter order. Dense: `a[0..N]`, `b[0..M]`, then `w` row-major (`w[i*M + j]`).
//! Symmetric: one shared visible bias, `alpha` hidden biases, then `alpha` filters
//! of `N` weights each (`W[f*N + d]`). The symmetric ansatz expands to a dense one
//! with hidden unit `j = f*N + s`, `b_j = b_f` and `w_ij = W_f[(i - s) mod N]`,
//! which makes `psi` invariant under cyclic translations.
//! With `visible_bias = false` the visible-bias block is absent.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, NqsError, Result};

use super::{log1p_exp, sigmoid, LookupTable, Wavefunction};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RbmShape {
    pub n_sites: usize,
    /// Hidden-unit density `M / N`.
    pub alpha: usize,
    pub symmetric: bool,
    pub visible_bias: bool,
}

impl RbmShape {
    pub fn new(n_sites: usize, alpha: usize, symmetric: bool) -> Self {
        Self { n_sites, alpha, symmetric, visible_bias: true }
    }

    pub fn n_hidden(&self) -> usize {
        self.alpha * self.n_sites
    }

    fn n_visible_bias(&self) -> usize {
        match (self.visible_bias, self.symmetric) {
            (false, _) => 0,
            (true, true) => 1,
            (true, false) => self.n_sites,
        }
    }

    /// `N + M + N M` dense, `1 + alpha + alpha N` symmetric (visible biases included).
    pub fn n_params(&self) -> usize {
        let n = self.n_sites;
        let m = self.n_hidden();
        if self.symmetric {
            self.n_visible_bias() + self.alpha + self.alpha * n
        } else {
            self.n_visible_bias() + m + n * m
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites == 0 {
            return domain("RBM needs at least one visible unit");
        }
        if self.alpha == 0 {
            return domain("hidden-unit density must be a positive integer");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RbmParameters {
    shape: RbmShape,
    params: Vec<Complex64>,
    /// Dense expansion: visible biases (length N).
    a: Vec<Complex64>,
    /// Dense expansion: hidden biases (length M).
    b: Vec<Complex64>,
    /// Dense expansion: weights, `w[i * M + j]`.
    w: Vec<Complex64>,
}

impl RbmParameters {
    pub fn zeros(shape: RbmShape) -> Result<Self> {
        Self::from_params(shape, vec![ZERO; shape.n_params()])
    }

    pub fn from_params(shape: RbmShape, params: Vec<Complex64>) -> Result<Self> {
        shape.validate()?;
        if params.len() != shape.n_params() {
            return domain(format!(
                "expected {} parameters, got {}",
                shape.n_params(),
                params.len()
            ));
        }
        let mut rbm = Self { shape, params, a: Vec::new(), b: Vec::new(), w: Vec::new() };
        rbm.expand();
        Ok(rbm)
    }

    /// Dense-mode parameters from explicit `a` (N), `b` (M) and row-major `w` (N x M).
    pub fn from_dense(
        n_sites: usize,
        alpha: usize,
        a: &[Complex64],
        b: &[Complex64],
        w: &[Complex64],
    ) -> Result<Self> {
        let shape = RbmShape::new(n_sites, alpha, false);
        let params = a.iter().chain(b).chain(w).copied().collect();
        Self::from_params(shape, params)
    }

    fn expand(&mut self) {
        let n = self.shape.n_sites;
        let m = self.shape.n_hidden();
        let nv = self.shape.n_visible_bias();
        let p = &self.params;
        if self.shape.symmetric {
            let alpha = self.shape.alpha;
            let a0 = if nv == 1 { p[0] } else { ZERO };
            self.a = vec![a0; n];
            let bf = &p[nv..nv + alpha];
            let filters = &p[nv + alpha..];
            self.b = (0..m).map(|j| bf[j / n]).collect();
            self.w = vec![ZERO; n * m];
            for f in 0..alpha {
                for s in 0..n {
                    let j = f * n + s;
                    for i in 0..n {
                        self.w[i * m + j] = filters[f * n + (i + n - s) % n];
                    }
                }
            }
        } else {
            self.a = if nv == n { p[..n].to_vec() } else { vec![ZERO; n] };
            self.b = p[nv..nv + m].to_vec();
            self.w = p[nv + m..].to_vec();
        }
    }

    pub fn shape(&self) -> RbmShape {
        self.shape
    }

    pub fn visible_biases(&self) -> &[Complex64] {
        &self.a
    }

    pub fn hidden_biases(&self) -> &[Complex64] {
        &self.b
    }

    /// Row-major `N x M` weights of the dense expansion.
    pub fn weights(&self) -> &[Complex64] {
        &self.w
    }

    pub fn snapshot(&self) -> RbmSnapshot {
        RbmSnapshot {
            shape: self.shape,
            n_params: self.params.len(),
            values: self.params.iter().flat_map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn from_snapshot(s: &RbmSnapshot) -> Result<Self> {
        if s.values.len() != 2 * s.n_params {
            return Err(NqsError::Validation(format!(
                "snapshot declares {} parameters but holds {} values",
                s.n_params,
                s.values.len()
            )));
        }
        let params = s.values.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
        Self::from_params(s.shape, params)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.snapshot())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_snapshot(&serde_json::from_str(text)?)
    }

    fn check_len(&self, x: &[i8]) {
        debug_assert_eq!(x.len(), self.shape.n_sites, "configuration length mismatch");
    }
}

/// Restart snapshot: the shape header followed by interleaved `re, im` values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RbmSnapshot {
    pub shape: RbmShape,
    pub n_params: usize,
    pub values: Vec<f64>,
}

impl Wavefunction for RbmParameters {
    fn n_sites(&self) -> usize {
        self.shape.n_sites
    }

    fn n_params(&self) -> usize {
        self.params.len()
    }

    fn params(&self) -> Vec<Complex64> {
        self.params.clone()
    }

    fn with_params(&self, params: &[Complex64]) -> Result<Self> {
        Self::from_params(self.shape, params.to_vec())
    }

    fn log_psi(&self, x: &[i8]) -> Complex64 {
        let lut = self.lookup(x);
        let visible: Complex64 = self.a.iter().zip(x).map(|(a, &s)| a * f64::from(s)).sum();
        visible + lut.theta.iter().map(|&t| log1p_exp(t)).sum::<Complex64>()
    }

    fn lookup(&self, x: &[i8]) -> LookupTable {
        self.check_len(x);
        let m = self.shape.n_hidden();
        let mut theta = self.b.clone();
        for (i, &s) in x.iter().enumerate() {
            let row = &self.w[i * m..(i + 1) * m];
            let s = f64::from(s);
            for (t, w) in theta.iter_mut().zip(row) {
                *t += w * s;
            }
        }
        LookupTable { theta }
    }

    fn log_psi_ratio(&self, x: &[i8], flips: &[usize], lut: &LookupTable) -> Complex64 {
        if flips.is_empty() {
            return ZERO;
        }
        let m = self.shape.n_hidden();
        let mut delta = ZERO;
        for &i in flips {
            delta -= 2.0 * self.a[i] * f64::from(x[i]);
        }
        for (j, &t) in lut.theta.iter().enumerate() {
            let shift: Complex64 = flips
                .iter()
                .map(|&i| self.w[i * m + j] * f64::from(x[i]))
                .sum();
            delta += log1p_exp(t - 2.0 * shift) - log1p_exp(t);
        }
        delta
    }

    fn update_lookup(&self, x: &[i8], flips: &[usize], lut: &mut LookupTable) {
        let m = self.shape.n_hidden();
        for &i in flips {
            let s = 2.0 * f64::from(x[i]);
            let row = &self.w[i * m..(i + 1) * m];
            for (t, w) in lut.theta.iter_mut().zip(row) {
                *t -= w * s;
            }
        }
    }

    fn log_derivatives_with(&self, x: &[i8], lut: &LookupTable, out: &mut [Complex64]) {
        let n = self.shape.n_sites;
        let nv = self.shape.n_visible_bias();
        let sig: Vec<Complex64> = lut.theta.iter().map(|&t| sigmoid(t)).collect();
        if self.shape.symmetric {
            let alpha = self.shape.alpha;
            if nv == 1 {
                out[0] = Complex64::new(x.iter().map(|&s| f64::from(s)).sum(), 0.0);
            }
            for f in 0..alpha {
                let sf = &sig[f * n..(f + 1) * n];
                out[nv + f] = sf.iter().sum();
                let base = nv + alpha + f * n;
                for d in 0..n {
                    let mut acc = ZERO;
                    for (s, &sg) in sf.iter().enumerate() {
                        acc += sg * f64::from(x[(d + s) % n]);
                    }
                    out[base + d] = acc;
                }
            }
        } else {
            let m = self.shape.n_hidden();
            for i in 0..nv {
                out[i] = Complex64::new(f64::from(x[i]), 0.0);
            }
            out[nv..nv + m].copy_from_slice(&sig);
            let wbase = nv + m;
            for (i, &s) in x.iter().enumerate() {
                let s = f64::from(s);
                let row = &mut out[wbase + i * m..wbase + (i + 1) * m];
                for (o, sg) in row.iter_mut().zip(&sig) {
                    *o = sg * s;
                }
            }
        }
    }
}

/// Parameters with real and imaginary parts drawn i.i.d. from `N(0, scale^2)`.
pub fn init_params<R: Rng + ?Sized>(rng: &mut R, scale: f64, shape: RbmShape) -> Result<RbmParameters> {
    if !(scale >= 0.0) || !scale.is_finite() {
        return domain(format!("initialization scale must be finite and >= 0, got {scale}"));
    }
    let normal = Normal::new(0.0, scale).map_err(|e| NqsError::Domain(e.to_string()))?;
    let params = (0..shape.n_params())
        .map(|_| Complex64::new(normal.sample(rng), normal.sample(rng)))
        .collect();
    RbmParameters::from_params(shape, params)
}
