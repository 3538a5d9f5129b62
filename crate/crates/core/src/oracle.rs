//! Exact ground states of small Hamiltonians by diagonalization.
//!
//! Sectors up to dimension 4096 are diagonalized densely. Larger ones (up to
//! `2^16`) use restarted Lanczos on a sparse matrix, with deflation against
//! converged vectors to count degenerate ground states.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, NqsError, Result};
use crate::hilbert::{enumerate_basis_with_cap, SpinConfiguration, SymmetrySector};
use crate::operators::PauliHamiltonian;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Largest sector dimension handled by the dense solver.
pub const DENSE_MAX_DIM: usize = 4096;

/// Largest number of sites accepted by [`exact_ground_state`].
pub const ORACLE_MAX_SITES: usize = 16;

/// Relative energy window within which eigenvalues count as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct ExactSolution {
    pub e0: f64,
    /// Ground-state amplitudes over `basis`.
    pub ground_vector: Option<DVector<Complex64>>,
    pub degeneracy: usize,
    pub basis: Vec<SpinConfiguration>,
}

impl ExactSolution {
    /// Ground vector scattered into the full `2^N` canonical basis.
    pub fn full_vector(&self) -> Option<Vec<Complex64>> {
        let v = self.ground_vector.as_ref()?;
        let n = self.basis.first()?.len();
        let mut out = vec![ZERO; 1 << n];
        for (x, a) in self.basis.iter().zip(v.iter()) {
            out[x.index()] = *a;
        }
        Some(out)
    }
}

/// Sector-restricted sparse Hamiltonian in CSR form. Elements leading out of
/// the sector are dropped, i.e. the operator is `P H P`.
struct SparseH {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl SparseH {
    fn build(h: &PauliHamiltonian, basis: &[SpinConfiguration]) -> Self {
        let n = h.n_sites();
        let mut pos = vec![usize::MAX; 1 << n];
        for (i, x) in basis.iter().enumerate() {
            pos[x.index()] = i;
        }
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for x in basis {
            let idx = x.index();
            h.for_each_connection(x.sites(), |flips, el| {
                let j = flips.iter().fold(idx, |acc, &s| acc ^ (1 << (n - 1 - s)));
                if pos[j] != usize::MAX {
                    cols.push(pos[j]);
                    vals.push(el);
                }
            });
            row_ptr.push(cols.len());
        }
        Self { row_ptr, cols, vals }
    }

    fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    fn apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        DVector::from_fn(self.dim(), |r, _| {
            (self.row_ptr[r]..self.row_ptr[r + 1])
                .map(|k| self.vals[k] * v[self.cols[k]])
                .sum()
        })
    }

    /// Frobenius norm, an upper bound on the spectral norm.
    fn norm(&self) -> f64 {
        self.vals.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }
}

pub fn exact_ground_state(h: &PauliHamiltonian, sector: SymmetrySector) -> Result<ExactSolution> {
    if !h.is_hermitian(1e-12) {
        return Err(NqsError::Validation("exact diagonalization needs a Hermitian operator".into()));
    }
    let basis = enumerate_basis_with_cap(h.n_sites(), sector, ORACLE_MAX_SITES)?;
    if basis.is_empty() {
        return domain("empty sector");
    }
    let sparse = SparseH::build(h, &basis);
    let (e0, v, degeneracy) = if basis.len() <= DENSE_MAX_DIM {
        dense_ground(&sparse)?
    } else {
        lanczos_ground(&sparse)?
    };
    Ok(ExactSolution { e0, ground_vector: Some(v), degeneracy, basis })
}

fn degenerate(e: f64, e0: f64) -> bool {
    (e - e0).abs() <= DEGENERACY_TOL * e0.abs().max(1.0)
}

fn dense_ground(sparse: &SparseH) -> Result<(f64, DVector<Complex64>, usize)> {
    let d = sparse.dim();
    let mut m = faer::Mat::<Complex64>::zeros(d, d);
    for r in 0..d {
        for k in sparse.row_ptr[r]..sparse.row_ptr[r + 1] {
            m[(r, sparse.cols[k])] += sparse.vals[k];
        }
    }
    let eig = m
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| NqsError::Solver(format!("dense eigensolver failed: {e:?}")))?;
    // eigenvalues come sorted in nondecreasing order
    let s = eig.S().column_vector();
    let e0 = s[0].re;
    let deg = (0..d).take_while(|&k| degenerate(s[k].re, e0)).count();
    let u = eig.U();
    Ok((e0, DVector::from_fn(d, |i, _| u[(i, 0)]), deg))
}

fn orthogonalize(v: &mut DVector<Complex64>, against: &[DVector<Complex64>]) {
    for _ in 0..2 {
        for q in against {
            let c = q.dotc(v);
            v.axpy(-c, q, Complex64::new(1.0, 0.0));
        }
    }
}

/// Lowest eigenpair of `h` restricted to the complement of `locked`.
fn lanczos_lowest(
    h: &SparseH,
    locked: &[DVector<Complex64>],
    seed: u64,
    tol: f64,
) -> Result<(f64, DVector<Complex64>)> {
    const KRYLOV: usize = 60;
    const RESTARTS: usize = 200;
    let dim = h.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = DVector::from_fn(dim, |_, _| {
        Complex64::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5))
    });
    let scale = h.norm().max(1e-300);
    for _ in 0..RESTARTS {
        orthogonalize(&mut v, locked);
        let nv = v.norm();
        if nv == 0.0 {
            return Err(NqsError::Solver("Lanczos start vector vanished".into()));
        }
        v.unscale_mut(nv);
        let mut qs: Vec<DVector<Complex64>> = vec![v.clone()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        for j in 0..KRYLOV.min(dim - locked.len()) {
            let mut w = h.apply(&qs[j]);
            alpha.push(qs[j].dotc(&w).re);
            orthogonalize(&mut w, locked);
            orthogonalize(&mut w, &qs);
            let b = w.norm();
            if b <= 1e-14 * scale || j + 1 == KRYLOV.min(dim - locked.len()) {
                break;
            }
            beta.push(b);
            qs.push(w.unscale(b));
        }
        let m = alpha.len();
        let mut t = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = t.symmetric_eigen();
        let k = eig.eigenvalues.imin();
        let theta = eig.eigenvalues[k];
        let mut ritz = DVector::from_element(dim, ZERO);
        for (i, q) in qs.iter().take(m).enumerate() {
            ritz.axpy(Complex64::new(eig.eigenvectors[(i, k)], 0.0), q, Complex64::new(1.0, 0.0));
        }
        orthogonalize(&mut ritz, locked);
        let nr = ritz.norm();
        ritz.unscale_mut(nr);
        let hr = h.apply(&ritz);
        let resid = (&hr - &ritz * Complex64::new(theta, 0.0)).norm();
        if resid <= tol * scale {
            let e = ritz.dotc(&hr).re;
            return Ok((e, ritz));
        }
        v = ritz;
    }
    Err(NqsError::Solver("Lanczos did not converge".into()))
}

fn lanczos_ground(h: &SparseH) -> Result<(f64, DVector<Complex64>, usize)> {
    let tol = 1e-11;
    let (e0, v0) = lanczos_lowest(h, &[], 1, tol)?;
    let mut locked = vec![v0.clone()];
    loop {
        if locked.len() == h.dim() {
            break;
        }
        let (e, v) = lanczos_lowest(h, &locked, locked.len() as u64 + 1, tol)?;
        if !degenerate(e, e0) {
            break;
        }
        locked.push(v);
    }
    Ok((e0, v0, locked.len()))
}

/// `|E0 - E_vmc| / |E0|`.
pub fn relative_error(e_vmc: f64, e0: f64) -> Result<f64> {
    if e0 == 0.0 {
        return domain("relative error undefined for E0 = 0");
    }
    Ok((e0 - e_vmc).abs() / e0.abs())
}

/// One row of the oracle fixture file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixtureRow {
    pub model: String,
    pub param: f64,
    #[serde(rename = "N")]
    pub n_sites: usize,
    #[serde(rename = "E0")]
    pub e0: f64,
    pub degeneracy: usize,
}

impl FixtureRow {
    pub const HEADER: &'static str = "model,param,N,E0,degeneracy";

    pub fn to_csv(&self) -> String {
        format!("{},{},{},{:.15},{}", self.model, self.param, self.n_sites, self.e0, self.degeneracy)
    }

    pub fn parse(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.trim().split(',').collect();
        let bad = || NqsError::Validation(format!("bad fixture line {line:?}"));
        if f.len() != 5 {
            return Err(bad());
        }
        Ok(Self {
            model: f[0].to_string(),
            param: f[1].parse().map_err(|_| bad())?,
            n_sites: f[2].parse().map_err(|_| bad())?,
            e0: f[3].parse().map_err(|_| bad())?,
            degeneracy: f[4].parse().map_err(|_| bad())?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{build_j1j2, build_tfi, marshall_transform};

    const ALL: SymmetrySector = SymmetrySector::Unrestricted;

    fn residual_ok(h: &PauliHamiltonian, sol: &ExactSolution) {
        let sp = SparseH::build(h, &sol.basis);
        let v = sol.ground_vector.as_ref().unwrap();
        let r = (sp.apply(v) - v * Complex64::new(sol.e0, 0.0)).norm();
        assert!(r <= 1e-9 * sp.norm(), "residual {r}");
    }

    #[test]
    fn classical_point_is_doubly_degenerate() {
        let h = build_tfi(4, 0.0).unwrap();
        let s = exact_ground_state(&h, ALL).unwrap();
        assert!((s.e0 + 4.0).abs() < 1e-12);
        assert_eq!(s.degeneracy, 2);
    }

    #[test]
    fn small_reference_values() {
        // H = -2 Z0 Z1 - 0.5 (X0 + X1) has E0 = -sqrt(5)
        let s = exact_ground_state(&build_tfi(2, 0.5).unwrap(), ALL).unwrap();
        assert!((s.e0 + 5f64.sqrt()).abs() < 1e-12);
        let s = exact_ground_state(&build_j1j2(4, 0.0).unwrap(), ALL).unwrap();
        assert!((s.e0 + 8.0).abs() < 1e-12);
        assert_eq!(s.degeneracy, 1);
        residual_ok(&build_j1j2(4, 0.0).unwrap(), &s);
    }

    #[test]
    fn sector_minimum_is_global_minimum() {
        let sector_min = |h: &PauliHamiltonian, n: usize| {
            (0..=n)
                .map(|k| exact_ground_state(h, SymmetrySector::FixedOccupation { n_up: k }).unwrap().e0)
                .fold(f64::INFINITY, f64::min)
        };
        for n in [4usize, 6, 8] {
            // magnetization is conserved: the sectors cover the spectrum
            let h = build_j1j2(n, 0.4).unwrap();
            assert!((sector_min(&h, n) - exact_ground_state(&h, ALL).unwrap().e0).abs() < 1e-9);
            // not conserved: projected blocks can only lie above
            let h = build_tfi(n, 0.7).unwrap();
            assert!(sector_min(&h, n) >= exact_ground_state(&h, ALL).unwrap().e0 - 1e-9);
        }
    }

    #[test]
    fn marshall_preserves_spectrum() {
        for j2 in [0.0, 0.5] {
            let h = build_j1j2(8, j2).unwrap();
            let m = marshall_transform(&h).unwrap();
            let a = exact_ground_state(&h, ALL).unwrap().e0;
            let b = exact_ground_state(&m, ALL).unwrap().e0;
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn lanczos_matches_dense() {
        let h = build_j1j2(10, 0.3).unwrap();
        let basis = enumerate_basis_with_cap(10, ALL, 16).unwrap();
        let sp = SparseH::build(&h, &basis);
        let (ed, _, gd) = dense_ground(&sp).unwrap();
        let (el, vl, gl) = lanczos_ground(&sp).unwrap();
        assert!((ed - el).abs() < 1e-9);
        assert_eq!(gd, gl);
        assert!((sp.apply(&vl) - &vl * Complex64::new(el, 0.0)).norm() < 1e-9 * sp.norm());
        let t = build_tfi(8, 0.0).unwrap();
        let sp = SparseH::build(&t, &enumerate_basis_with_cap(8, ALL, 16).unwrap());
        let (e, _, g) = lanczos_ground(&sp).unwrap();
        assert!((e + 8.0).abs() < 1e-9);
        assert_eq!(g, 2);
    }

    #[test]
    fn large_sector_uses_lanczos() {
        let h = build_tfi(13, 1.0).unwrap();
        let s = exact_ground_state(&h, ALL).unwrap();
        assert!(s.basis.len() > DENSE_MAX_DIM);
        assert_eq!(s.degeneracy, 1);
        residual_ok(&h, &s);
    }

    #[test]
    fn cap_enforced() {
        assert!(matches!(
            exact_ground_state(&build_tfi(17, 1.0).unwrap(), ALL),
            Err(NqsError::Resource(_))
        ));
    }

    #[test]
    fn relative_error_cases() {
        assert_eq!(relative_error(-4.0, -4.0).unwrap(), 0.0);
        assert!((relative_error(-3.992, -4.0).unwrap() - 0.002).abs() < 1e-15);
        assert!(relative_error(1.0, 0.0).is_err());
    }

    #[test]
    fn fixture_row_round_trip() {
        let r = FixtureRow { model: "tfi".into(), param: 1.0, n_sites: 2, e0: -2.5, degeneracy: 1 };
        assert_eq!(FixtureRow::parse(&r.to_csv()).unwrap(), r);
        assert!(FixtureRow::parse("tfi,1").is_err());
    }
}
