//! Lattice model builders on periodic chains.

use crate::error::{domain, Result};

use super::pauli::{Pauli, PauliHamiltonian, PauliString};

/// Transverse-field Ising chain `-sum_<ij> Z_i Z_j - h sum_i X_i`, periodic.
///
/// The ring has `N` bonds `(i, i+1 mod N)`; for `N = 2` both bonds join the
/// same pair and merge into a single `-2 Z0 Z1` term.
pub fn build_tfi(n_sites: usize, h: f64) -> Result<PauliHamiltonian> {
    if n_sites < 2 {
        return domain(format!("TFI chain needs N >= 2, got {n_sites}"));
    }
    let mut terms = Vec::with_capacity(2 * n_sites);
    for i in 0..n_sites {
        let j = (i + 1) % n_sites;
        terms.push(PauliString::real([(i, Pauli::Z), (j, Pauli::Z)], -1.0)?);
    }
    for i in 0..n_sites {
        terms.push(PauliString::real([(i, Pauli::X)], -h)?);
    }
    PauliHamiltonian::new(n_sites, terms)
}

/// J1-J2 Heisenberg chain with `J1 = 1`:
/// `sum_<ij> (XX+YY+ZZ) + j2 sum_<<ij>> (XX+YY+ZZ)`, periodic.
pub fn build_j1j2(n_sites: usize, j2: f64) -> Result<PauliHamiltonian> {
    if n_sites < 4 || !n_sites.is_multiple_of(2) {
        return domain(format!("J1J2 chain needs an even N >= 4, got {n_sites}"));
    }
    if !(j2 >= 0.0) {
        return domain(format!("j2 must be non-negative, got {j2}"));
    }
    let mut terms = Vec::with_capacity(6 * n_sites);
    for (dist, coupling) in [(1usize, 1.0), (2, j2)] {
        for i in 0..n_sites {
            let j = (i + dist) % n_sites;
            for p in [Pauli::X, Pauli::Y, Pauli::Z] {
                terms.push(PauliString::real([(i, p), (j, p)], coupling)?);
            }
        }
    }
    PauliHamiltonian::new(n_sites, terms)
}

/// Conjugates `H` by a pi rotation about Z on every odd site (Marshall sign rule).
/// X and Y factors on odd sites change sign; the spectrum is unchanged.
pub fn marshall_transform(h: &PauliHamiltonian) -> Result<PauliHamiltonian> {
    if !h.n_sites().is_multiple_of(2) {
        return domain("Marshall transform needs an even number of sites");
    }
    let terms = h
        .terms()
        .iter()
        .map(|t| {
            let odd_flips = t
                .factors()
                .iter()
                .filter(|(&s, p)| s % 2 == 1 && p.flips())
                .count();
            let mut t = t.clone();
            if odd_flips % 2 == 1 {
                t.coefficient = -t.coefficient;
            }
            t
        })
        .collect();
    PauliHamiltonian::new(h.n_sites(), terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn count(h: &PauliHamiltonian, pred: impl Fn(&PauliString) -> bool) -> usize {
        h.terms().iter().filter(|t| pred(t)).count()
    }

    #[test]
    fn tfi_term_structure() {
        let h = build_tfi(3, 0.0).unwrap();
        assert_eq!(h.terms().len(), 3);
        assert!(h.terms().iter().all(|t| t.weight() == 2 && t.coefficient.re == -1.0));

        let h = build_tfi(4, 1.0).unwrap();
        assert_eq!(count(&h, |t| t.weight() == 2), 4);
        assert_eq!(count(&h, |t| t.weight() == 1), 4);
        assert!(h.terms().iter().all(|t| t.coefficient == Complex64::new(-1.0, 0.0)));

        assert!(build_tfi(1, 1.0).is_err());
    }

    #[test]
    fn tfi_two_sites_merges_bonds() {
        let h = build_tfi(2, 0.5).unwrap();
        let zz: Vec<_> = h.terms().iter().filter(|t| t.weight() == 2).collect();
        assert_eq!(zz.len(), 1);
        assert_eq!(zz[0].coefficient.re, -2.0);
    }

    #[test]
    fn j1j2_term_structure() {
        let h = build_j1j2(4, 0.0).unwrap();
        assert_eq!(h.terms().len(), 12);
        assert!(build_j1j2(6, -0.1).is_err());
        assert!(build_j1j2(5, 0.1).is_err());
        assert!(build_j1j2(2, 0.1).is_err());
        assert_eq!(build_j1j2(8, 0.5).unwrap().terms().len(), 48);
    }

    #[test]
    fn j1j2_dense_is_real_symmetric() {
        let d = build_j1j2(6, 0.3).unwrap().to_dense().unwrap();
        assert!(d.iter().all(|z| z.im.abs() < 1e-15));
        assert!((d.transpose() - &d).norm() < 1e-14);
    }

    #[test]
    fn marshall_signs() {
        let zz = PauliHamiltonian::new(2, vec![PauliString::real([(0, Pauli::Z), (1, Pauli::Z)], 1.0).unwrap()]).unwrap();
        assert_eq!(marshall_transform(&zz).unwrap(), zz);

        let xx = PauliHamiltonian::new(2, vec![PauliString::real([(0, Pauli::X), (1, Pauli::X)], 1.0).unwrap()]).unwrap();
        let t = marshall_transform(&xx).unwrap();
        assert_eq!(t.terms()[0].coefficient.re, -1.0);

        // next-nearest bonds join same-parity sites and keep their sign
        let h = build_j1j2(6, 0.2).unwrap();
        let m = marshall_transform(&h).unwrap();
        for (a, b) in h.terms().iter().zip(m.terms()) {
            let sites: Vec<usize> = a.factors().keys().copied().collect();
            let nn = (sites[1] - sites[0]) % 2 == 1;
            let flips = a.factors().values().any(|p| p.flips());
            let expected = if nn && flips { -a.coefficient } else { a.coefficient };
            assert_eq!(b.coefficient, expected);
        }
        assert_eq!(marshall_transform(&m).unwrap(), h);
        assert!(marshall_transform(&build_tfi(3, 1.0).unwrap()).is_err());
    }
}
