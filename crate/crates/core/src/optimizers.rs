//! Parameter updates: stochastic reconfiguration and the linear method.
//!
//! SR solves `(S + a_diag I) x = f` by conjugate gradients on the matrix-free
//! product and steps `-eta x`. The LM solves the regularized pencil
//! `H~ u = lambda S~ u` for `kappa_n = kappa0 * 10^n`, `n = 0, 1, 2`, and keeps
//! the candidate `u[1..] / u[0]` with the lowest correlated-sampling energy.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{NqsError, Result};
use crate::estimators::{local_energy, pairwise_sum, LmSystem, SrSystem};
use crate::operators::PauliHamiltonian;
use crate::sampling::SampleBatch;
use crate::wavefunction::Wavefunction;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Largest parameter count accepted by [`sr_solve_dense`].
pub const DENSE_SR_MAX_PARAMS: usize = 2000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SrConfig {
    pub eta: f64,
    pub a_diag: f64,
    /// Relative residual target `|S~ x - f| <= cg_tol |f|`.
    pub cg_tol: f64,
    pub cg_max_iter: usize,
}

impl Default for SrConfig {
    fn default() -> Self {
        Self { eta: 0.01, a_diag: 0.01, cg_tol: 1e-10, cg_max_iter: 1000 }
    }
}

impl SrConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(NqsError::Config(format!("eta must be positive, got {}", self.eta)));
        }
        if !(self.a_diag >= 0.0) || !self.a_diag.is_finite() {
            return Err(NqsError::Config(format!("a_diag must be >= 0, got {}", self.a_diag)));
        }
        if !(self.cg_tol > 0.0) || self.cg_max_iter == 0 {
            return Err(NqsError::Config("cg_tol and cg_max_iter must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LmConfig {
    pub kappa0: f64,
    pub a_diag: f64,
    /// Admissible eigenvalues satisfy `|Im l| <= tol |Re l| + tol`.
    pub eigen_im_tol: f64,
    /// Admissible eigenvectors satisfy `|u_0| >= c_min |u|`.
    pub c_min: f64,
    /// Number of regularizers tried, `kappa0 * 10^n` for `n < n_kappa`.
    pub n_kappa: usize,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self { kappa0: 0.5, a_diag: 0.01, eigen_im_tol: 1e-2, c_min: 1e-8, n_kappa: 3 }
    }
}

impl LmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa0 > 0.0) || !self.kappa0.is_finite() {
            return Err(NqsError::Config(format!("kappa0 must be positive, got {}", self.kappa0)));
        }
        if !(self.a_diag >= 0.0) || !(self.eigen_im_tol >= 0.0) || !(self.c_min >= 0.0) {
            return Err(NqsError::Config("LM tolerances must be non-negative".into()));
        }
        if self.n_kappa == 0 {
            return Err(NqsError::Config("n_kappa must be positive".into()));
        }
        Ok(())
    }

    pub fn kappas(&self) -> Vec<f64> {
        (0..self.n_kappa).map(|n| self.kappa0 * 10f64.powi(n as i32)).collect()
    }
}

/// Per-update diagnostics. Fields that do not apply to the optimizer are `None`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub kappa: Option<f64>,
    pub lambda0: Option<Complex64>,
    pub c_abs: Option<f64>,
    pub cg_iters: Option<usize>,
    /// Correlated energy of every tried candidate (`inf` for rejected ones).
    pub correlated_energies: Vec<f64>,
    /// Effective sample size of the selected candidate's reweighting.
    pub ess: Option<f64>,
    pub skipped: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UpdateResult {
    pub delta: Vec<Complex64>,
    pub diagnostics: Diagnostics,
    /// Wall-clock seconds spent in the solver.
    pub t_u: f64,
}

/// Conjugate gradients for the Hermitian positive-definite operator `apply`.
/// Returns the solution, the iteration count and whether the tolerance was met.
pub fn conjugate_gradient(
    apply: impl Fn(&DVector<Complex64>) -> DVector<Complex64>,
    b: &DVector<Complex64>,
    tol: f64,
    max_iter: usize,
) -> (DVector<Complex64>, usize, bool) {
    let n = b.len();
    let mut x = DVector::from_element(n, ZERO);
    let b_norm = b.norm();
    if b_norm == 0.0 {
        return (x, 0, true);
    }
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rs = r.norm_squared();
    for it in 1..=max_iter {
        let ap = apply(&p);
        let pap = p.dotc(&ap).re;
        if !(pap > 0.0) {
            return (x, it, false);
        }
        let alpha = rs / pap;
        x.axpy(Complex64::new(alpha, 0.0), &p, Complex64::new(1.0, 0.0));
        r.axpy(Complex64::new(-alpha, 0.0), &ap, Complex64::new(1.0, 0.0));
        let rs_new = r.norm_squared();
        if rs_new.sqrt() <= tol * b_norm {
            return (x, it, true);
        }
        let beta = rs_new / rs;
        p = &r + p * Complex64::new(beta, 0.0);
        rs = rs_new;
    }
    (x, max_iter, false)
}

fn check_finite(delta: &[Complex64]) -> Result<()> {
    if delta.iter().all(|z| z.is_finite()) {
        Ok(())
    } else {
        Err(NqsError::Solver("update contains non-finite entries".into()))
    }
}

/// SR update by matrix-free CG, falling back to a dense solve when CG stalls.
pub fn sr_step(sys: &SrSystem, cfg: &SrConfig) -> Result<UpdateResult> {
    cfg.validate()?;
    let start = Instant::now();
    let shift = Complex64::new(cfg.a_diag, 0.0);
    let (x, iters, ok) = conjugate_gradient(
        |v| sys.apply(v) + v * shift,
        &sys.f,
        cfg.cg_tol,
        cfg.cg_max_iter,
    );
    if !ok {
        log::warn!("CG did not converge in {iters} iterations; using dense solve");
        let mut res = sr_solve_dense(sys, cfg)?;
        res.diagnostics.cg_iters = Some(iters);
        res.t_u = start.elapsed().as_secs_f64();
        return Ok(res);
    }
    let delta: Vec<Complex64> = x.iter().map(|v| -cfg.eta * v).collect();
    check_finite(&delta)?;
    Ok(UpdateResult {
        delta,
        diagnostics: Diagnostics { cg_iters: Some(iters), ..Diagnostics::default() },
        t_u: start.elapsed().as_secs_f64(),
    })
}

/// SR update by dense factorization of `S + a_diag I`.
pub fn sr_solve_dense(sys: &SrSystem, cfg: &SrConfig) -> Result<UpdateResult> {
    let start = Instant::now();
    let n = sys.n_params();
    if n > DENSE_SR_MAX_PARAMS {
        return Err(NqsError::Resource(format!(
            "dense SR solve limited to {DENSE_SR_MAX_PARAMS} parameters, got {n}"
        )));
    }
    let mut s = sys.dense_s();
    for i in 0..n {
        s[(i, i)] += cfg.a_diag;
    }
    let x = match s.clone().cholesky() {
        Some(ch) => ch.solve(&sys.f),
        None => s
            .lu()
            .solve(&sys.f)
            .ok_or_else(|| NqsError::Solver("regularized S matrix is singular".into()))?,
    };
    let delta: Vec<Complex64> = x.iter().map(|v| -cfg.eta * v).collect();
    check_finite(&delta)?;
    Ok(UpdateResult { delta, diagnostics: Diagnostics::default(), t_u: start.elapsed().as_secs_f64() })
}

/// Selected eigenpair of the LM pencil.
#[derive(Clone, Debug, PartialEq)]
pub struct LmEigen {
    pub lambda0: Complex64,
    /// First component `u_0`.
    pub c: Complex64,
    /// Remaining components `u_1..u_n`.
    pub v0: Vec<Complex64>,
}

impl LmEigen {
    /// `v0 / c`.
    pub fn step(&self) -> Vec<Complex64> {
        self.v0.iter().map(|v| v / self.c).collect()
    }
}

/// All eigenpairs of the general complex matrix `a`, eigenvectors normalized.
fn eigenpairs(a: &DMatrix<Complex64>) -> Result<Vec<(Complex64, DVector<Complex64>)>> {
    let n = a.nrows();
    let m = faer::Mat::<Complex64>::from_fn(n, n, |i, j| a[(i, j)]);
    let evd = m
        .eigen()
        .map_err(|e| NqsError::Solver(format!("eigendecomposition failed: {e:?}")))?;
    let u = evd.U();
    let s = evd.S().column_vector();
    Ok((0..n)
        .map(|k| {
            let v = DVector::from_fn(n, |i, _| u[(i, k)]);
            let norm = v.norm();
            (s[k], v.unscale(norm))
        })
        .collect())
}

/// Regularized pencil: `kappa` on every diagonal entry of `H` but `00`,
/// `a_diag` on every diagonal entry of `S` but `00`.
pub fn regularized_pencil(
    sys: &LmSystem,
    kappa: f64,
    a_diag: f64,
) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let mut h = sys.h_bar.clone();
    let mut s = sys.s_bar.clone();
    for i in 1..h.nrows() {
        h[(i, i)] += kappa;
        s[(i, i)] += a_diag;
    }
    (h, s)
}

/// Solves `H~ u = lambda S~ u` and returns the admissible eigenpair with the
/// smallest real eigenvalue.
///
/// `S~` is Hermitian positive semi-definite; the pencil is reduced by canonical
/// orthogonalization `X = V L^{-1/2}` on the eigenvalues of `S~` above a
/// relative cutoff, then `X† H~ X` is diagonalized.
pub fn lm_solve(sys: &LmSystem, kappa: f64, cfg: &LmConfig) -> Result<LmEigen> {
    let (h, s) = regularized_pencil(sys, kappa, cfg.a_diag);
    let n = h.nrows();
    let eig = s.symmetric_eigen();
    let smax = eig.eigenvalues.iter().fold(0.0f64, |m, &l| m.max(l));
    let cutoff = 1e-12 * smax.max(1.0);
    let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > cutoff).collect();
    if keep.is_empty() {
        return Err(NqsError::LmStep("overlap matrix is numerically zero".into()));
    }
    let x = DMatrix::from_fn(n, keep.len(), |r, c| {
        let k = keep[c];
        eig.eigenvectors[(r, k)] / eig.eigenvalues[k].sqrt()
    });
    let a = x.ad_mul(&(&h * &x));
    if !a.iter().all(|z| z.is_finite()) {
        return Err(NqsError::LmStep("non-finite reduced Hamiltonian".into()));
    }
    let tol = cfg.eigen_im_tol;
    let mut best: Option<(Complex64, DVector<Complex64>)> = None;
    for (lambda, y) in eigenpairs(&a)? {
        if lambda.im.abs() > tol * lambda.re.abs() + tol {
            continue;
        }
        let u = &x * y;
        let c = u[0];
        if c.norm() < cfg.c_min * u.norm() || !u.iter().all(|z| z.is_finite()) {
            continue;
        }
        if best.as_ref().is_none_or(|(b, _)| lambda.re < b.re) {
            best = Some((lambda, u));
        }
    }
    let (lambda0, u) =
        best.ok_or_else(|| NqsError::LmStep(format!("no admissible eigenpair at kappa = {kappa}")))?;
    Ok(LmEigen { lambda0, c: u[0], v0: u.iter().skip(1).copied().collect() })
}

/// Reweighted energy of `p_new` on a batch drawn from `p_old`:
/// `sum_k w_k Re H_loc^new(x_k) / sum_k w_k`, `w_k = b_k |psi_new / psi_old|^2`
/// with `b_k` the batch weights. Also returns the effective sample size
/// `sum w / max w`. A degenerate weight set scores `+inf`.
pub fn correlated_energy<W: Wavefunction>(
    batch: &SampleBatch,
    p_new: &W,
    h: &PauliHamiltonian,
) -> (f64, f64) {
    if batch.is_empty() {
        return (f64::INFINITY, 0.0);
    }
    let evals: Vec<(f64, Complex64)> = batch
        .configs
        .par_iter()
        .zip(&batch.log_amps)
        .zip(&batch.weights)
        .map(|((x, old), &b)| {
            let new = p_new.log_psi(x.sites());
            let logw = b.ln() + 2.0 * (new.re - old.re);
            (logw, local_energy(h, p_new, x.sites()))
        })
        .collect();
    let max = evals.iter().map(|e| e.0).fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return (f64::INFINITY, 0.0);
    }
    let w: Vec<f64> = evals.iter().map(|e| (e.0 - max).exp()).collect();
    let num: Vec<f64> = w.iter().zip(&evals).map(|(w, e)| w * e.1.re).collect();
    let num: Vec<f64> = num.into_iter().filter(|v| !v.is_nan()).collect();
    let z = pairwise_sum(&w);
    let energy = pairwise_sum(&num) / z;
    if !energy.is_finite() {
        return (f64::INFINITY, 0.0);
    }
    (energy, z)
}

/// Full LM update: one pencil solve per regularizer, each candidate scored by
/// correlated sampling on `batch`. When no candidate is admissible the result
/// is a zero step flagged `skipped`.
pub fn lm_step<W: Wavefunction>(
    sys: &LmSystem,
    cfg: &LmConfig,
    batch: &SampleBatch,
    p: &W,
    h: &PauliHamiltonian,
) -> Result<UpdateResult> {
    cfg.validate()?;
    let start = Instant::now();
    let mut diag = Diagnostics::default();
    let mut best: Option<(f64, f64, LmEigen, Vec<Complex64>, f64)> = None;
    for kappa in cfg.kappas() {
        let cand = lm_solve(sys, kappa, cfg).and_then(|e| {
            let step = e.step();
            check_finite(&step)?;
            Ok((e, step))
        });
        let (eig, step) = match cand {
            Ok(c) => c,
            Err(e) => {
                log::debug!("LM candidate at kappa = {kappa} rejected: {e}");
                diag.correlated_energies.push(f64::INFINITY);
                continue;
            }
        };
        let (energy, ess) = correlated_energy(batch, &p.shifted(&step)?, h);
        diag.correlated_energies.push(energy);
        if energy.is_finite() && best.as_ref().is_none_or(|b| energy < b.0) {
            best = Some((energy, kappa, eig, step, ess));
        }
    }
    let t_u = start.elapsed().as_secs_f64();
    match best {
        Some((_, kappa, eig, step, ess)) => {
            diag.kappa = Some(kappa);
            diag.lambda0 = Some(eig.lambda0);
            diag.c_abs = Some(eig.c.norm());
            diag.ess = Some(ess);
            Ok(UpdateResult { delta: step, diagnostics: diag, t_u })
        }
        None => {
            log::warn!("no admissible LM candidate; epoch skipped");
            diag.skipped = true;
            Ok(UpdateResult { delta: vec![ZERO; sys.n_params()], diagnostics: diag, t_u })
        }
    }
}
