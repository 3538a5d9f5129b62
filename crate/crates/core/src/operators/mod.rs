//! Pauli-string Hamiltonians, lattice models, basis transformations and file I/O.

mod io;
mod jordan_wigner;
mod models;
mod pauli;

pub use io::{
    load_pauli_file, load_pauli_file_with, parse_pauli_text, save_pauli_file, serialize_pauli,
    LoadOptions,
};
pub use jordan_wigner::{jordan_wigner, ladder_operator, FermionTerm};
pub use models::{build_j1j2, build_tfi, marshall_transform};
pub use pauli::{Pauli, PauliHamiltonian, PauliString, COEFF_EPS};

/// Kronecker-product construction of dense operators from single-site Pauli
/// matrices. Independent of the connected-state machinery; used as a test oracle.
pub mod dense {
    use nalgebra::DMatrix;
    use num_complex::Complex64;

    use super::{Pauli, PauliHamiltonian, PauliString};

    fn single(p: Option<Pauli>) -> DMatrix<Complex64> {
        let z = Complex64::new(0.0, 0.0);
        let o = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        // basis order: index 0 is Z = +1, index 1 is Z = -1
        match p {
            None => DMatrix::from_row_slice(2, 2, &[o, z, z, o]),
            Some(Pauli::X) => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
            Some(Pauli::Y) => DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
            Some(Pauli::Z) => DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        }
    }

    /// Site 0 is the leftmost (most significant) tensor factor.
    pub fn string_matrix(n_sites: usize, s: &PauliString) -> DMatrix<Complex64> {
        let mut m = DMatrix::from_element(1, 1, s.coefficient);
        for site in 0..n_sites {
            m = m.kronecker(&single(s.factors().get(&site).copied()));
        }
        m
    }

    pub fn hamiltonian_matrix(h: &PauliHamiltonian) -> DMatrix<Complex64> {
        let dim = 1usize << h.n_sites();
        h.terms()
            .iter()
            .fold(DMatrix::zeros(dim, dim), |acc, t| acc + string_matrix(h.n_sites(), t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{enumerate_basis, SpinConfiguration, SymmetrySector};
    use num_complex::Complex64;
    use proptest::prelude::*;

    #[test]
    fn tfi_classical_point_is_diagonal() {
        let h = build_tfi(4, 0.0).unwrap();
        let x = SpinConfiguration::uniform(4, 1).unwrap();
        let conn = h.connected_states(&x);
        assert_eq!(conn, vec![(x.clone(), Complex64::new(-4.0, 0.0))]);
    }

    #[test]
    fn tfi_connectivity() {
        let h = build_tfi(4, 1.0).unwrap();
        for x in enumerate_basis(4, SymmetrySector::Unrestricted).unwrap() {
            let conn = h.connected_states(&x);
            // the diagonal is omitted when the bond energies cancel
            let diag = x.sites().iter().enumerate().map(|(i, &s)| s * x.get((i + 1) % 4)).sum::<i8>();
            assert_eq!(conn.len(), 4 + usize::from(diag != 0));
            let off: Vec<_> = conn.iter().filter(|(xp, _)| *xp != x).collect();
            assert_eq!(off.len(), 4);
            assert!(off.iter().all(|(xp, el)| {
                x.diff_sites(xp).len() == 1 && *el == Complex64::new(-1.0, 0.0)
            }));
            assert_eq!(h.off_diagonal_count(x.sites()), 4);
        }
    }

    #[test]
    fn heisenberg_aligned_pair_has_no_exchange() {
        let h = build_j1j2(4, 0.0).unwrap();
        let x: SpinConfiguration = "++++".parse().unwrap();
        assert_eq!(h.connected_states(&x).len(), 1);
        let neel: SpinConfiguration = "+-+-".parse().unwrap();
        // four exchange moves plus the diagonal
        assert_eq!(h.connected_states(&neel).len(), 5);
    }

    #[test]
    fn tfi_three_sites_rows_match_kron() {
        let h = build_tfi(3, 0.7).unwrap();
        let a = h.to_dense().unwrap();
        let b = dense::hamiltonian_matrix(&h);
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn tfi_dense_is_real_symmetric() {
        let d = build_tfi(5, 1.3).unwrap().to_dense().unwrap();
        assert!(d.iter().all(|z| z.im == 0.0));
        assert_eq!(d.transpose(), d);
    }

    fn arb_hamiltonian() -> impl Strategy<Value = PauliHamiltonian> {
        (2usize..7).prop_flat_map(|n| {
            let term = (
                proptest::collection::btree_map(0..n, 0u8..3, 0..=n.min(4)),
                -2.0f64..2.0,
                -1.0f64..1.0,
            )
                .prop_map(|(m, re, im)| {
                    let f = m.into_iter().map(|(s, p)| (s, [Pauli::X, Pauli::Y, Pauli::Z][p as usize]));
                    PauliString::new(f, Complex64::new(re, im)).unwrap()
                });
            proptest::collection::vec(term, 1..10)
                .prop_map(move |terms| PauliHamiltonian::new(n, terms).unwrap())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn connected_states_match_kronecker_assembly(h in arb_hamiltonian()) {
            let a = h.to_dense().unwrap();
            let b = dense::hamiltonian_matrix(&h);
            for (x, y) in a.iter().zip(b.iter()) {
                prop_assert!((x - y).norm() < 1e-12);
            }
        }

        #[test]
        fn connected_states_are_unique(h in arb_hamiltonian(), idx in 0usize..64) {
            let n = h.n_sites();
            let x = SpinConfiguration::from_index(n, idx % (1 << n));
            let conn = h.connected_states(&x);
            let mut seen: Vec<usize> = conn.iter().map(|(xp, _)| xp.index()).collect();
            seen.sort_unstable();
            seen.dedup();
            prop_assert_eq!(seen.len(), conn.len());
        }

        #[test]
        fn hermitian_flag_matches_dense(h in arb_hamiltonian()) {
            let d = h.to_dense().unwrap();
            let dense_herm = (d.adjoint() - &d).norm() < 1e-10;
            prop_assert_eq!(dense_herm, h.is_hermitian(1e-12));
        }
    }
}
