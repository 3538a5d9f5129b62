//! Local energies, log-derivatives and the SR / LM estimator systems.
//!
//! All batch means are weighted: Monte Carlo batches carry uniform weights and
//! exact batches carry Born weights, so the same code serves both modes.
//! Writing `ΔD_k = D_k - ⟪D_k⟫` and `HL_k` for the local-energy derivative,
//!
//! ```text
//! S_kk'  = ⟪ΔD_k* ΔD_k'⟫                  f_k  = ⟪ΔD_k* H_loc⟫
//! H_00   = ⟪H_loc⟫                         H_k0 = f_k
//! H_0k'  = ⟪HL_k'⟫ + ⟪H_loc ΔD_k'⟫
//! H_kk'  = ⟪ΔD_k* (H_loc ΔD_k' + HL_k')⟫
//! ```
//!
//! The last line is the expanded tri-covariance written with centered data.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{domain, NqsError, Result};
use crate::hilbert::{enumerate_basis_with_cap, SymmetrySector};
use crate::operators::PauliHamiltonian;
use crate::sampling::SampleBatch;
use crate::wavefunction::Wavefunction;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Largest site count accepted by the exact-mode estimators.
pub const EXACT_MAX_SITES: usize = 14;

/// Largest parameter count for which the dense LM system is assembled.
pub const LM_MAX_PARAMS: usize = 5000;

/// Samples with `|H_loc|` above this multiple of the batch median are logged.
pub const DEFAULT_SPIKE_FACTOR: f64 = 1e3;

/// Pairwise (tree) summation; the result does not depend on thread count.
pub fn pairwise_sum<T>(xs: &[T]) -> T
where
    T: Copy + Default + std::ops::Add<Output = T>,
{
    if xs.len() <= 8 {
        return xs.iter().fold(T::default(), |a, &b| a + b);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

fn weighted_mean(w: &[f64], xs: &[Complex64]) -> Complex64 {
    let terms: Vec<Complex64> = w.iter().zip(xs).map(|(w, x)| x * *w).collect();
    pairwise_sum(&terms)
}

/// `sum_x' <x|H|x'> psi(x')/psi(x)`.
pub fn local_energy<W: Wavefunction>(h: &PauliHamiltonian, p: &W, x: &[i8]) -> Complex64 {
    let lut = p.lookup(x);
    let mut acc = ZERO;
    h.for_each_connection(x, |flips, el| {
        acc += if flips.is_empty() {
            el
        } else {
            el * p.log_psi_ratio(x, flips, &lut).exp()
        };
    });
    acc
}

/// Returns `(H_loc(x), D(x), HL(x))` with `HL_k = H_k - H_loc D_k` and
/// `H_k = sum_x' <x|H|x'> D_k(x') psi(x')/psi(x)`.
pub fn local_energy_derivatives<W: Wavefunction>(
    h: &PauliHamiltonian,
    p: &W,
    x: &[i8],
) -> (Complex64, Vec<Complex64>, Vec<Complex64>) {
    let n_var = p.n_params();
    let lut = p.lookup(x);
    let mut d = vec![ZERO; n_var];
    p.log_derivatives_with(x, &lut, &mut d);
    let mut hk = vec![ZERO; n_var];
    let mut buf = vec![ZERO; n_var];
    let mut xp = x.to_vec();
    let mut h_loc = ZERO;
    h.for_each_connection(x, |flips, el| {
        if flips.is_empty() {
            h_loc += el;
            for (a, dk) in hk.iter_mut().zip(&d) {
                *a += el * dk;
            }
            return;
        }
        let amp = el * p.log_psi_ratio(x, flips, &lut).exp();
        h_loc += amp;
        let mut lut_p = lut.clone();
        p.update_lookup(x, flips, &mut lut_p);
        for &i in flips {
            xp[i] = -xp[i];
        }
        p.log_derivatives_with(&xp, &lut_p, &mut buf);
        for &i in flips {
            xp[i] = -xp[i];
        }
        for (a, b) in hk.iter_mut().zip(&buf) {
            *a += amp * b;
        }
    });
    let hl = hk.iter().zip(&d).map(|(a, dk)| a - h_loc * dk).collect();
    (h_loc, d, hl)
}

/// Per-sample quantities for a batch. Rows are samples.
#[derive(Clone, Debug)]
pub struct LocalQuantities {
    /// Normalized weights of the retained samples.
    pub weights: Vec<f64>,
    pub h_loc: Vec<Complex64>,
    pub d: DMatrix<Complex64>,
    /// Local-energy derivatives, present when requested.
    pub h_loc_deriv: Option<DMatrix<Complex64>>,
    /// Samples dropped because `H_loc` was not finite.
    pub n_flagged: usize,
    /// Retained samples with `|H_loc|` far above the batch median.
    pub n_spikes: usize,
}

impl LocalQuantities {
    pub fn len(&self) -> usize {
        self.h_loc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h_loc.is_empty()
    }

    pub fn n_params(&self) -> usize {
        self.d.ncols()
    }

    pub fn energy(&self) -> Complex64 {
        weighted_mean(&self.weights, &self.h_loc)
    }

    /// `⟪|H_loc - E|^2⟫`.
    pub fn variance(&self) -> f64 {
        let e = self.energy();
        let dev: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.h_loc)
            .map(|(w, h)| w * (h - e).norm_sqr())
            .collect();
        pairwise_sum(&dev)
    }
}

/// Counts entries with `|v| > factor * median |v|`.
pub fn count_spikes(values: &[Complex64], factor: f64) -> usize {
    if values.is_empty() {
        return 0;
    }
    let mut mags: Vec<f64> = values.iter().map(|v| v.norm()).collect();
    mags.sort_by(f64::total_cmp);
    let median = mags[mags.len() / 2];
    if median == 0.0 {
        return 0;
    }
    mags.iter().filter(|&&m| m > factor * median).count()
}

/// Evaluates `H_loc`, `D` and optionally `HL` for every sample in parallel.
pub fn local_quantities<W: Wavefunction>(
    h: &PauliHamiltonian,
    p: &W,
    batch: &SampleBatch,
    with_derivs: bool,
) -> Result<LocalQuantities> {
    if batch.is_empty() {
        return domain("empty sample batch");
    }
    let n_var = p.n_params();
    let rows: Vec<(Complex64, Vec<Complex64>, Vec<Complex64>)> = batch
        .configs
        .par_iter()
        .map(|x| {
            if with_derivs {
                local_energy_derivatives(h, p, x.sites())
            } else {
                (local_energy(h, p, x.sites()), p.log_derivatives(x.sites()), Vec::new())
            }
        })
        .collect();
    let keep: Vec<usize> = (0..rows.len())
        .filter(|&s| {
            rows[s].0.is_finite()
                && rows[s].1.iter().all(|z| z.is_finite())
                && rows[s].2.iter().all(|z| z.is_finite())
        })
        .collect();
    let n_flagged = rows.len() - keep.len();
    if n_flagged > 0 {
        log::warn!("{n_flagged} samples with non-finite local quantities excluded");
    }
    if keep.is_empty() {
        return Err(NqsError::Domain("no sample has a finite local energy".into()));
    }
    let wsum: Vec<f64> = keep.iter().map(|&s| batch.weights[s]).collect();
    let z = pairwise_sum(&wsum);
    if !(z > 0.0) {
        return domain("batch weights sum to zero");
    }
    let weights: Vec<f64> = wsum.iter().map(|w| w / z).collect();
    let n = keep.len();
    let h_loc: Vec<Complex64> = keep.iter().map(|&s| rows[s].0).collect();
    let d = DMatrix::from_fn(n, n_var, |r, c| rows[keep[r]].1[c]);
    let h_loc_deriv = with_derivs.then(|| DMatrix::from_fn(n, n_var, |r, c| rows[keep[r]].2[c]));
    let n_spikes = count_spikes(&h_loc, DEFAULT_SPIKE_FACTOR);
    if n_spikes > 0 {
        log::warn!("{n_spikes} local-energy spikes above {DEFAULT_SPIKE_FACTOR}x the batch median");
    }
    Ok(LocalQuantities { weights, h_loc, d, h_loc_deriv, n_flagged, n_spikes })
}

/// SR data kept in centered, weight-scaled form `O = sqrt(w) ΔD`, so that
/// `S = O† O` and `S v` costs two matrix-vector products.
#[derive(Clone, Debug)]
pub struct SrSystem {
    pub o: DMatrix<Complex64>,
    pub f: DVector<Complex64>,
    pub d_mean: DVector<Complex64>,
    pub energy: Complex64,
    pub variance: f64,
}

impl SrSystem {
    pub fn n_params(&self) -> usize {
        self.f.len()
    }

    /// `S v` without forming `S`.
    pub fn apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        self.o.ad_mul(&(&self.o * v))
    }

    /// Dense `S`, Hermitian by construction.
    pub fn dense_s(&self) -> DMatrix<Complex64> {
        let mut s = self.o.ad_mul(&self.o);
        let n = s.nrows();
        for i in 0..n {
            s[(i, i)].im = 0.0;
            for j in i + 1..n {
                s[(j, i)] = s[(i, j)].conj();
            }
        }
        s
    }
}

fn centered(lq: &LocalQuantities) -> (DMatrix<Complex64>, DVector<Complex64>) {
    let n_var = lq.n_params();
    let mean = DVector::from_fn(n_var, |k, _| {
        weighted_mean(&lq.weights, lq.d.column(k).as_slice())
    });
    let mut delta = lq.d.clone();
    for k in 0..n_var {
        let m = mean[k];
        for v in delta.column_mut(k).iter_mut() {
            *v -= m;
        }
    }
    (delta, mean)
}

fn scale_rows(m: &mut DMatrix<Complex64>, w: &[f64]) {
    for (r, &wr) in w.iter().enumerate() {
        let s = wr.sqrt();
        for v in m.row_mut(r).iter_mut() {
            *v *= s;
        }
    }
}

pub fn assemble_sr(lq: &LocalQuantities) -> Result<SrSystem> {
    if lq.is_empty() {
        return domain("empty sample batch");
    }
    let energy = lq.energy();
    let (mut o, d_mean) = centered(lq);
    scale_rows(&mut o, &lq.weights);
    let n_var = lq.n_params();
    let f = DVector::from_fn(n_var, |k, _| {
        let terms: Vec<Complex64> = o
            .column(k)
            .iter()
            .zip(&lq.weights)
            .zip(&lq.h_loc)
            .map(|((ok, w), h)| ok.conj() * w.sqrt() * (h - energy))
            .collect();
        pairwise_sum(&terms)
    });
    Ok(SrSystem { o, f, d_mean, energy, variance: lq.variance() })
}

/// Hamilton and overlap matrices of the linear method, index 0 being `psi` itself.
#[derive(Clone, Debug)]
pub struct LmSystem {
    pub h_bar: DMatrix<Complex64>,
    pub s_bar: DMatrix<Complex64>,
    pub sr: SrSystem,
}

impl LmSystem {
    pub fn n_params(&self) -> usize {
        self.h_bar.nrows() - 1
    }
}

pub fn assemble_lm(lq: &LocalQuantities) -> Result<LmSystem> {
    let Some(hl) = &lq.h_loc_deriv else {
        return domain("linear method needs local-energy derivatives");
    };
    let n_var = lq.n_params();
    if n_var > LM_MAX_PARAMS {
        return Err(NqsError::Resource(format!(
            "{n_var} parameters exceed the linear-method cap of {LM_MAX_PARAMS}"
        )));
    }
    let sr = assemble_sr(lq)?;
    let e = sr.energy;
    let s = sr.dense_s();
    // B = sqrt(w) (H_loc ΔD + HL); sr.o already holds sqrt(w) ΔD
    let mut b = hl.clone();
    scale_rows(&mut b, &lq.weights);
    for (r, &h) in lq.h_loc.iter().enumerate() {
        for k in 0..n_var {
            b[(r, k)] += h * sr.o[(r, k)];
        }
    }
    let h_kk = sr.o.ad_mul(&b);
    let sqrt_w: Vec<f64> = lq.weights.iter().map(|w| w.sqrt()).collect();
    let h0 = DVector::from_fn(n_var, |k, _| {
        let terms: Vec<Complex64> = b.column(k).iter().zip(&sqrt_w).map(|(v, s)| v * *s).collect();
        pairwise_sum(&terms)
    });
    let dim = n_var + 1;
    let mut h_bar = DMatrix::zeros(dim, dim);
    let mut s_bar = DMatrix::zeros(dim, dim);
    h_bar[(0, 0)] = e;
    s_bar[(0, 0)] = Complex64::new(1.0, 0.0);
    for k in 0..n_var {
        h_bar[(k + 1, 0)] = sr.f[k];
        h_bar[(0, k + 1)] = h0[k];
    }
    h_bar.view_mut((1, 1), (n_var, n_var)).copy_from(&h_kk);
    s_bar.view_mut((1, 1), (n_var, n_var)).copy_from(&s);
    Ok(LmSystem { h_bar, s_bar, sr })
}

/// Estimators evaluated with exact Born weights over the whole sector.
#[derive(Clone, Debug)]
pub struct ExactExpectations {
    pub sr: SrSystem,
    pub lm: LmSystem,
    pub energy: f64,
    pub batch: SampleBatch,
}

pub fn exact_batch<W: Wavefunction>(p: &W, sector: SymmetrySector) -> Result<SampleBatch> {
    let basis = enumerate_basis_with_cap(p.n_sites(), sector, EXACT_MAX_SITES)?;
    Ok(SampleBatch::exact(p, &basis))
}

/// Exact `<psi|H|psi> / <psi|psi>` over the sector.
pub fn exact_energy<W: Wavefunction>(
    h: &PauliHamiltonian,
    p: &W,
    sector: SymmetrySector,
) -> Result<f64> {
    let batch = exact_batch(p, sector)?;
    let el: Vec<Complex64> = batch.configs.iter().map(|x| local_energy(h, p, x.sites())).collect();
    let terms: Vec<f64> = batch.weights.iter().zip(&el).map(|(w, e)| w * e.re).collect();
    Ok(pairwise_sum(&terms))
}

pub fn exact_expectations<W: Wavefunction>(
    h: &PauliHamiltonian,
    p: &W,
    sector: SymmetrySector,
) -> Result<ExactExpectations> {
    let batch = exact_batch(p, sector)?;
    let lq = local_quantities(h, p, &batch, true)?;
    let lm = assemble_lm(&lq)?;
    let energy = lm.sr.energy.re;
    Ok(ExactExpectations { sr: lm.sr.clone(), lm, energy, batch })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::enumerate_basis;
    use crate::operators::{build_j1j2, build_tfi};
    use crate::sampling::{run_chain, SamplerConfig};
    use crate::wavefunction::{init_params, LogAmplitudeTable, RbmParameters, RbmShape};
    use nalgebra::SymmetricEigen;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const ALL: SymmetrySector = SymmetrySector::Unrestricted;

    fn rbm(n: usize, seed: u64, scale: f64) -> RbmParameters {
        init_params(&mut ChaCha8Rng::seed_from_u64(seed), scale, RbmShape::new(n, 2, false)).unwrap()
    }

    /// Ground eigenvector of a real Hamiltonian loaded as a table wavefunction.
    fn ground_table(h: &PauliHamiltonian) -> (LogAmplitudeTable, f64) {
        let d = h.to_dense().unwrap().map(|z| z.re);
        let eig = SymmetricEigen::new(d);
        let k = eig.eigenvalues.imin();
        let v = eig.eigenvectors.column(k);
        let amps: Vec<Complex64> = v.iter().map(|&a| Complex64::new(a, 0.0)).collect();
        (LogAmplitudeTable::from_amplitudes(h.n_sites(), &amps).unwrap(), eig.eigenvalues[k])
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let xs: Vec<f64> = (0..1001).map(|i| (i as f64).sin()).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-10);
        assert_eq!(pairwise_sum::<f64>(&[]), 0.0);
    }

    #[test]
    fn local_energy_classical_point() {
        let h = build_tfi(4, 0.0).unwrap();
        let p = rbm(4, 1, 0.3);
        let x = [1i8; 4];
        assert!((local_energy(&h, &p, &x) - Complex64::new(-4.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn local_energy_constant_psi() {
        let h = build_tfi(5, 0.7).unwrap();
        let p = RbmParameters::zeros(RbmShape::new(5, 1, false)).unwrap();
        for x in enumerate_basis(5, ALL).unwrap() {
            let s = x.sites();
            let zz: f64 = (0..5).map(|i| f64::from(s[i] * s[(i + 1) % 5])).sum();
            let e = local_energy(&h, &p, s);
            assert!((e - Complex64::new(-zz - 0.7 * 5.0, 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn eigenstate_has_constant_local_energy() {
        let h = build_tfi(4, 1.0).unwrap();
        let (t, e0) = ground_table(&h);
        for x in enumerate_basis(4, ALL).unwrap() {
            assert!((local_energy(&h, &t, x.sites()) - e0).norm() < 1e-10);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let h = build_tfi(4, 0.9).unwrap();
        let p = rbm(4, 3, 0.3);
        let x = [1i8, -1, 1, 1];
        let (_, _, hl) = local_energy_derivatives(&h, &p, &x);
        let eps = 1e-5;
        let p0 = p.params();
        for k in 0..p0.len() {
            let mut pp = p0.clone();
            let mut pm = p0.clone();
            pp[k] += eps;
            pm[k] -= eps;
            let fd = (local_energy(&h, &p.with_params(&pp).unwrap(), &x)
                - local_energy(&h, &p.with_params(&pm).unwrap(), &x))
                / (2.0 * eps);
            assert!((fd - hl[k]).norm() < 1e-6, "k={k}: {fd} vs {}", hl[k]);
        }
    }

    #[test]
    fn diagonal_hamiltonian_has_zero_local_derivatives() {
        let h = build_tfi(4, 0.0).unwrap();
        let p = rbm(4, 4, 0.3);
        for x in enumerate_basis(4, ALL).unwrap() {
            let (_, _, hl) = local_energy_derivatives(&h, &p, x.sites());
            assert!(hl.iter().all(|z| z.norm() < 1e-13));
        }
    }

    #[test]
    fn identical_samples_give_zero_covariance() {
        let h = build_tfi(3, 1.0).unwrap();
        let p = rbm(3, 5, 0.2);
        let x = enumerate_basis(3, ALL).unwrap()[2].clone();
        let batch = SampleBatch::uniform(&p, vec![x.clone(); 7]);
        let lq = local_quantities(&h, &p, &batch, true).unwrap();
        let lm = assemble_lm(&lq).unwrap();
        assert!(lm.sr.dense_s().iter().all(|z| z.norm() < 1e-14));
        assert!(lm.sr.f.iter().all(|z| z.norm() < 1e-14));
        assert!((lm.h_bar[(0, 0)] - local_energy(&h, &p, x.sites())).norm() < 1e-13);
        assert!(lm.h_bar.view((1, 1), (lm.n_params(), lm.n_params())).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn empty_batch_is_domain_error() {
        let h = build_tfi(3, 1.0).unwrap();
        let p = rbm(3, 5, 0.2);
        assert!(matches!(
            local_quantities(&h, &p, &SampleBatch::default(), false),
            Err(NqsError::Domain(_))
        ));
    }

    #[test]
    fn uniform_state_visible_block_is_identity() {
        let h = build_tfi(3, 1.0).unwrap();
        let p = RbmParameters::zeros(RbmShape::new(3, 1, false)).unwrap();
        let ex = exact_expectations(&h, &p, ALL).unwrap();
        let s = ex.sr.dense_s();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((s[(i, j)] - expect).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn constant_psi_two_site_energy() {
        // uniform superposition: <ZZ> = 0 and <X_i> = 1
        let h = build_tfi(2, 1.0).unwrap();
        let p = RbmParameters::zeros(RbmShape::new(2, 1, false)).unwrap();
        assert!((exact_energy(&h, &p, ALL).unwrap() + 2.0).abs() < 1e-14);
    }

    /// Exact variational energy as a function of a parameter vector.
    fn energy_at(h: &PauliHamiltonian, p: &RbmParameters, params: &[Complex64]) -> f64 {
        exact_energy(h, &p.with_params(params).unwrap(), ALL).unwrap()
    }

    #[test]
    fn force_is_wirtinger_gradient() {
        let h = build_tfi(4, 1.0).unwrap();
        let eps = 1e-5;
        for seed in 0..3 {
            let p = rbm(4, 100 + seed, 0.3);
            let ex = exact_expectations(&h, &p, ALL).unwrap();
            let p0 = p.params();
            for k in (0..p0.len()).step_by(7) {
                for (dir, part) in [(Complex64::new(1.0, 0.0), 0), (Complex64::new(0.0, 1.0), 1)] {
                    let mut pp = p0.clone();
                    let mut pm = p0.clone();
                    pp[k] += dir * eps;
                    pm[k] -= dir * eps;
                    let fd = (energy_at(&h, &p, &pp) - energy_at(&h, &p, &pm)) / (2.0 * eps);
                    let f = ex.sr.f[k];
                    let expect = if part == 0 { 2.0 * f.re } else { 2.0 * f.im };
                    assert!(
                        (fd - expect).abs() <= 1e-4 * expect.abs().max(1e-3),
                        "k={k} part={part}: fd {fd} vs {expect}"
                    );
                }
            }
        }
    }

    #[test]
    fn s_is_hermitian_psd() {
        let h = build_j1j2(4, 0.3).unwrap();
        let p = rbm(4, 8, 0.5);
        let ex = exact_expectations(&h, &p, ALL).unwrap();
        let s = ex.sr.dense_s();
        assert_eq!(s.adjoint(), s);
        let ev = s.clone().symmetric_eigen().eigenvalues;
        assert!(ev.iter().all(|&l| l >= -1e-10 * s.norm()));
        let v = DVector::from_fn(s.nrows(), |i, _| Complex64::new(i as f64, 1.0));
        assert!((ex.sr.apply(&v) - &s * &v).norm() < 1e-10 * v.norm() * s.norm());
    }

    fn dense_lm_oracle(
        h: &PauliHamiltonian,
        p: &RbmParameters,
    ) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
        let basis = enumerate_basis(h.n_sites(), ALL).unwrap();
        let hd = h.to_dense().unwrap();
        let dim = basis.len();
        let logs: Vec<Complex64> = basis.iter().map(|x| p.log_psi(x.sites())).collect();
        let psi = DVector::from_fn(dim, |i, _| logs[i].exp());
        let psi0 = psi.unscale(psi.norm());
        let ds: Vec<Vec<Complex64>> = basis.iter().map(|x| p.log_derivatives(x.sites())).collect();
        let n_var = p.n_params();
        let mut vecs = vec![psi0.clone()];
        for k in 0..n_var {
            let mean: Complex64 = (0..dim).map(|i| psi0[i].norm_sqr() * ds[i][k]).sum();
            vecs.push(DVector::from_fn(dim, |i, _| (ds[i][k] - mean) * psi0[i]));
        }
        let hb = DMatrix::from_fn(n_var + 1, n_var + 1, |a, b| vecs[a].dotc(&(&hd * &vecs[b])));
        let sb = DMatrix::from_fn(n_var + 1, n_var + 1, |a, b| vecs[a].dotc(&vecs[b]));
        (hb, sb)
    }

    #[test]
    fn exact_lm_matches_dense_algebra() {
        for (seed, h) in [(1, build_tfi(3, 1.0).unwrap()), (2, build_j1j2(4, 0.5).unwrap())] {
            let p = rbm(h.n_sites(), seed, 0.4);
            let ex = exact_expectations(&h, &p, ALL).unwrap();
            let (hb, sb) = dense_lm_oracle(&h, &p);
            assert!((&ex.lm.h_bar - hb).camax() < 1e-10);
            assert!((&ex.lm.s_bar - sb).camax() < 1e-10);
            // lower-right overlap block is the SR matrix itself
            let n = ex.lm.n_params();
            assert_eq!(ex.lm.s_bar.view((1, 1), (n, n)).clone_owned(), ex.sr.dense_s());
        }
    }

    #[test]
    fn zero_variance_at_eigenstate() {
        let h = build_tfi(4, 1.0).unwrap();
        let (t, e0) = ground_table(&h);
        let ex = exact_expectations(&h, &t, ALL).unwrap();
        assert!((ex.energy - e0).abs() < 1e-10);
        assert!(ex.sr.variance < 1e-20);
        assert!(ex.sr.f.norm() < 1e-10);
        let n = ex.lm.n_params();
        for k in 1..=n {
            assert!(ex.lm.h_bar[(0, k)].norm() < 1e-10);
            assert!(ex.lm.h_bar[(k, 0)].norm() < 1e-10);
        }
    }

    #[test]
    fn stochastic_estimates_approach_exact() {
        let h = build_tfi(4, 1.0).unwrap();
        let p = rbm(4, 12, 0.3);
        let ex = exact_expectations(&h, &p, ALL).unwrap();
        let cfg = SamplerConfig { n_samples: 200_000, ..SamplerConfig::default() };
        let batch = run_chain(&p, &h, &cfg, 5).unwrap();
        let lq = local_quantities(&h, &p, &batch, false).unwrap();
        let sr = assemble_sr(&lq).unwrap();
        let sigma = (lq.variance() / lq.len() as f64).sqrt();
        // 2 * tau_int allowance for chain autocorrelation
        assert!((sr.energy.re - ex.energy).abs() < 5.0 * 2.0 * sigma);
        let s = sr.dense_s();
        let se = ex.sr.dense_s();
        assert!((s - se).camax() < 0.02);
        assert!((&sr.f - &ex.sr.f).camax() < 0.02);
    }

    #[test]
    fn spikes_counted() {
        let mut v = vec![Complex64::new(1.0, 0.0); 100];
        v[3] = Complex64::new(5e3, 0.0);
        assert_eq!(count_spikes(&v, 1e3), 1);
        assert_eq!(count_spikes(&[], 1e3), 0);
    }

    #[test]
    fn lm_requires_derivatives() {
        let h = build_tfi(3, 1.0).unwrap();
        let p = rbm(3, 5, 0.2);
        let batch = exact_batch(&p, ALL).unwrap();
        let lq = local_quantities(&h, &p, &batch, false).unwrap();
        assert!(assemble_lm(&lq).is_err());
    }

    #[test]
    fn zero_amplitude_sample_is_flagged() {
        let h = build_tfi(2, 1.0).unwrap();
        let mut vals = vec![Complex64::new(0.0, 0.0); 4];
        vals[1] = Complex64::new(f64::NEG_INFINITY, 0.0);
        let t = LogAmplitudeTable::new(2, vals).unwrap();
        let basis = enumerate_basis(2, ALL).unwrap();
        let batch = SampleBatch::uniform(&t, basis);
        let lq = local_quantities(&h, &t, &batch, false).unwrap();
        assert_eq!(lq.n_flagged, 1);
        assert_eq!(lq.len(), 3);
    }
}
