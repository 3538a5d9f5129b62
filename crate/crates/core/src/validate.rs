//! Exact-mode property suite: estimator, sampler, Jordan–Wigner and SR checks
//! on systems small enough to enumerate.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::estimators::{assemble_sr, exact_energy, exact_expectations, local_quantities};
use crate::hilbert::{enumerate_basis, SymmetrySector};
use crate::operators::{
    build_j1j2, build_tfi, jordan_wigner, ladder_operator, FermionTerm, Pauli, PauliHamiltonian, PauliString,
};
use crate::optimizers::{sr_step, SrConfig};
use crate::sampling::{run_chain, Kernel, SampleBatch, SamplerConfig};
use crate::wavefunction::{init_params, LogAmplitudeTable, RbmParameters, RbmShape, Wavefunction};

const ALL: SymmetrySector = SymmetrySector::Unrestricted;

/// Outcome of one property: the measured value and the bound it must respect.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `value <= bound`.
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, bound, passed: value <= bound }
    }

    /// Passes when `value >= bound`.
    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, bound, passed: value >= bound }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {}: {:.3e} (bound {:.3e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.bound
        )
    }
}

fn random_rbm(n: usize, seed: u64, scale: f64) -> Result<RbmParameters> {
    init_params(&mut ChaCha8Rng::seed_from_u64(seed), scale, RbmShape::new(n, 2, false))
}

/// Largest deviation between the force and a central finite difference of the
/// exact energy along the real and imaginary axis of every parameter:
/// `dE/dRe theta_k = 2 Re f_k`, `dE/dIm theta_k = 2 Im f_k`. Each deviation is
/// divided by `max(|2 f_k|, 1e-3)`.
pub fn force_gradient_error(h: &PauliHamiltonian, p: &RbmParameters) -> Result<f64> {
    let eps = 1e-5;
    let ex = exact_expectations(h, p, ALL)?;
    let p0 = p.params();
    let mut worst: f64 = 0.0;
    for k in 0..p0.len() {
        for dir in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
            let mut plus = p0.clone();
            let mut minus = p0.clone();
            plus[k] += dir * eps;
            minus[k] -= dir * eps;
            let fd = (exact_energy(h, &p.with_params(&plus)?, ALL)?
                - exact_energy(h, &p.with_params(&minus)?, ALL)?)
                / (2.0 * eps);
            let f = ex.sr.f[k];
            let g = 2.0 * if dir.re != 0.0 { f.re } else { f.im };
            worst = worst.max((fd - g).abs() / g.abs().max(1e-3));
        }
    }
    Ok(worst)
}

/// `(max |S - S†|, smallest eigenvalue of S / |S|)` for exact-mode S.
pub fn s_matrix_properties(h: &PauliHamiltonian, p: &RbmParameters) -> Result<(f64, f64)> {
    let s = exact_expectations(h, p, ALL)?.sr.dense_s();
    let herm = (&s - s.adjoint()).camax();
    let norm = s.norm().max(f64::MIN_POSITIVE);
    let min = s.symmetric_eigen().eigenvalues.min();
    Ok((herm, min / norm))
}

/// Tangent-space matrices from dense algebra: with `psi0` the normalized state
/// vector and `|k> = (D_k - <D_k>) psi0`, returns `<a|H|b>` and `<a|b>` over
/// the basis `{psi0, |1>, ..., |n>}`.
pub fn dense_tangent_matrices(
    h: &PauliHamiltonian,
    p: &impl Wavefunction,
) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    let basis = enumerate_basis(h.n_sites(), ALL)?;
    let hd = h.to_dense()?;
    let dim = basis.len();
    let logs: Vec<Complex64> = basis.iter().map(|x| p.log_psi(x.sites())).collect();
    let max = logs.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    let psi = DVector::from_fn(dim, |i, _| (logs[i] - max).exp());
    let psi0 = psi.unscale(psi.norm());
    let ds: Vec<Vec<Complex64>> = basis.iter().map(|x| p.log_derivatives(x.sites())).collect();
    let n_var = p.n_params();
    let mut vecs = vec![psi0.clone()];
    for k in 0..n_var {
        let mean: Complex64 = (0..dim).map(|i| psi0[i].norm_sqr() * ds[i][k]).sum();
        vecs.push(DVector::from_fn(dim, |i, _| (ds[i][k] - mean) * psi0[i]));
    }
    let hv: Vec<DVector<Complex64>> = vecs.iter().map(|v| &hd * v).collect();
    let hb = DMatrix::from_fn(n_var + 1, n_var + 1, |a, b| vecs[a].dotc(&hv[b]));
    let sb = DMatrix::from_fn(n_var + 1, n_var + 1, |a, b| vecs[a].dotc(&vecs[b]));
    Ok((hb, sb))
}

/// Largest elementwise deviation of the sample-estimator LM matrices (exact
/// weights) from [`dense_tangent_matrices`].
pub fn lm_matrix_error(h: &PauliHamiltonian, p: &RbmParameters) -> Result<f64> {
    let ex = exact_expectations(h, p, ALL)?;
    let (hb, sb) = dense_tangent_matrices(h, p)?;
    Ok((&ex.lm.h_bar - hb).camax().max((&ex.lm.s_bar - sb).camax()))
}

/// Ground state of a real Hamiltonian as a table wavefunction.
pub fn ground_table(h: &PauliHamiltonian) -> Result<(LogAmplitudeTable, f64)> {
    let eig = h.to_dense()?.map(|z| z.re).symmetric_eigen();
    let k = eig.eigenvalues.imin();
    let amps: Vec<Complex64> = eig.eigenvectors.column(k).iter().map(|&a| Complex64::new(a, 0.0)).collect();
    Ok((LogAmplitudeTable::from_amplitudes(h.n_sites(), &amps)?, eig.eigenvalues[k]))
}

/// `(Var H_loc, |f|, max_k |H_0k|)` at the exact ground state of `h`.
pub fn zero_variance(h: &PauliHamiltonian) -> Result<(f64, f64, f64)> {
    let (t, _) = ground_table(h)?;
    let ex = exact_expectations(h, &t, ALL)?;
    let n = ex.lm.n_params();
    let h0k = (1..=n)
        .map(|k| ex.lm.h_bar[(0, k)].norm().max(ex.lm.h_bar[(k, 0)].norm()))
        .fold(0.0, f64::max);
    Ok((ex.sr.variance, ex.sr.f.norm(), h0k))
}

/// Largest standardized deviation `|c_x - n pi_x| / sqrt(n pi_x (1 - pi_x))`
/// of sampled counts from the Born weights over the sector.
pub fn born_deviation(
    p: &impl Wavefunction,
    h: &PauliHamiltonian,
    cfg: &SamplerConfig,
    seed: u64,
) -> Result<f64> {
    let basis = enumerate_basis(p.n_sites(), cfg.sector)?;
    let pi = SampleBatch::exact(p, &basis).weights;
    let batch = run_chain(p, h, cfg, seed)?;
    let mut counts = vec![0usize; basis.len()];
    for x in &batch.configs {
        if let Some(i) = basis.iter().position(|b| b == x) {
            counts[i] += 1;
        } else {
            return Ok(f64::INFINITY);
        }
    }
    let n = batch.len() as f64;
    Ok(counts
        .iter()
        .zip(&pi)
        .map(|(&c, &q)| (c as f64 - n * q).abs() / (n * q * (1.0 - q)).sqrt().max(1.0))
        .fold(0.0, f64::max))
}

/// Sampler used by [`born_deviation`] checks at `n_sites` for `kernel`.
pub fn born_sampler(kernel: Kernel, n_sites: usize, n_samples: usize) -> SamplerConfig {
    let sector = match kernel {
        Kernel::Exchange => SymmetrySector::FixedMagnetization { mz: (n_sites % 2) as i64 },
        _ => ALL,
    };
    SamplerConfig {
        kernel,
        n_samples,
        burn_in_sweeps: 20,
        downsample_interval: Some(2 * n_sites),
        n_chains: 4,
        sector,
    }
}

/// Largest deviation of the anticommutators of the Jordan–Wigner images of
/// `modes` ladder operators from `{a_i, a†_j} = delta_ij`, `{a_i, a_j} = 0`.
pub fn anticommutator_error(modes: usize) -> Result<f64> {
    let a: Vec<DMatrix<Complex64>> =
        (0..modes).map(|j| ladder_operator(modes, j, false)?.to_dense()).collect::<Result<_>>()?;
    let dim = 1usize << modes;
    let id = DMatrix::<Complex64>::identity(dim, dim);
    let mut worst: f64 = 0.0;
    for i in 0..modes {
        for j in 0..modes {
            let ad = a[j].adjoint();
            let mixed = &a[i] * &ad + &ad * &a[i] - if i == j { id.clone() } else { id.scale(0.0) };
            let same = &a[i] * &a[j] + &a[j] * &a[i];
            worst = worst.max(mixed.camax()).max(same.camax());
        }
    }
    Ok(worst)
}

/// Largest deviation of the images of `n_j = a†_j a_j` and
/// `a†_i a_j + a†_j a_i` from `(1 - Z_j)/2` and
/// `(X_i X_j + Y_i Y_j)/2 * Z_{i+1} ... Z_{j-1}`, over all modes `i < j`.
pub fn analytic_form_error(modes: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    let dense = |h: &PauliHamiltonian| h.to_dense();
    for j in 0..modes {
        let n = jordan_wigner(modes, &[FermionTerm::one_body(j, j, 1.0)])?;
        let expect = PauliHamiltonian::new(
            modes,
            vec![PauliString::identity(Complex64::new(0.5, 0.0)), PauliString::real([(j, Pauli::Z)], -0.5)?],
        )?;
        worst = worst.max((dense(&n)? - dense(&expect)?).camax());
        for i in 0..j {
            let hop = jordan_wigner(modes, &[FermionTerm::one_body(i, j, 1.0), FermionTerm::one_body(j, i, 1.0)])?;
            let tail = || (i + 1..j).map(|k| (k, Pauli::Z));
            let expect = PauliHamiltonian::new(
                modes,
                vec![
                    PauliString::real([(i, Pauli::X), (j, Pauli::X)].into_iter().chain(tail()), 0.5)?,
                    PauliString::real([(i, Pauli::Y), (j, Pauli::Y)].into_iter().chain(tail()), 0.5)?,
                ],
            )?;
            worst = worst.max((dense(&hop)? - dense(&expect)?).camax());
        }
    }
    Ok(worst)
}

/// Number of `trials` random parameter draws for which one exact-mode SR step
/// lowers the exact energy.
pub fn sr_descent_count(h: &PauliHamiltonian, cfg: &SrConfig, trials: usize, seed: u64) -> Result<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lowered = 0;
    for _ in 0..trials {
        let scale = rng.random_range(0.05..0.5);
        let p = init_params(&mut rng, scale, RbmShape::new(h.n_sites(), 2, false))?;
        let ex = exact_expectations(h, &p, ALL)?;
        let lq = local_quantities(h, &p, &ex.batch, false)?;
        let step = sr_step(&assemble_sr(&lq)?, cfg)?;
        let after = exact_energy(h, &p.shifted(&step.delta)?, ALL)?;
        if after < ex.energy {
            lowered += 1;
        }
    }
    Ok(lowered)
}

/// The full suite with its default bounds.
pub fn run_suite(seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let tfi4 = build_tfi(4, 1.0)?;
    let j4 = build_j1j2(4, 0.5)?;
    let mut grad: f64 = 0.0;
    let (mut herm, mut min_eig, mut lm_err): (f64, f64, f64) = (0.0, f64::INFINITY, 0.0);
    for (i, h) in [&tfi4, &j4, &build_tfi(3, 0.7)?].into_iter().enumerate() {
        let p = random_rbm(h.n_sites(), seed + i as u64, 0.3)?;
        grad = grad.max(force_gradient_error(h, &p)?);
        let (a, b) = s_matrix_properties(h, &p)?;
        herm = herm.max(a);
        min_eig = min_eig.min(b);
        lm_err = lm_err.max(lm_matrix_error(h, &p)?);
    }
    out.push(Check::at_most("force vs finite-difference gradient (relative)", grad, 1e-4));
    out.push(Check::at_most("S hermiticity", herm, 1e-14));
    out.push(Check::at_least("S smallest eigenvalue / |S|", min_eig, -1e-12));
    out.push(Check::at_most("LM matrices vs dense algebra", lm_err, 1e-10));
    let (var, f, h0k) = zero_variance(&tfi4)?;
    out.push(Check::at_most("eigenstate Var(H_loc)", var, 1e-20));
    out.push(Check::at_most("eigenstate |f|", f, 1e-10));
    out.push(Check::at_most("eigenstate max |H_0k|", h0k, 1e-10));

    let tfi3 = build_tfi(3, 1.0)?;
    let p3 = random_rbm(3, seed + 10, 0.5)?;
    for kernel in [Kernel::Local, Kernel::Exchange, Kernel::Hamiltonian] {
        let z = born_deviation(&p3, &tfi3, &born_sampler(kernel, 3, 100_000), seed + 20)?;
        out.push(Check::at_most(format!("{kernel:?} sampler Born frequencies (sigma)"), z, 5.0));
    }

    let car = (1..=4).map(anticommutator_error).collect::<Result<Vec<_>>>()?;
    out.push(Check::at_most("Jordan-Wigner anticommutators", car.into_iter().fold(0.0, f64::max), 1e-12));
    let forms = (1..=4).map(analytic_form_error).collect::<Result<Vec<_>>>()?;
    out.push(Check::at_most("Jordan-Wigner number and hopping forms", forms.into_iter().fold(0.0, f64::max), 1e-12));

    let sr = SrConfig::default();
    let lowered = sr_descent_count(&tfi4, &sr, 100, seed + 30)?;
    out.push(Check::at_least("SR steps lowering the energy (of 100)", lowered as f64, 95.0));
    Ok(out)
}
