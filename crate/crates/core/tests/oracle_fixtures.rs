use nqs_core::hilbert::SymmetrySector;
use nqs_core::operators::{build_j1j2, build_tfi, marshall_transform};
use nqs_core::oracle::{exact_ground_state, FixtureRow};

const ALL: SymmetrySector = SymmetrySector::Unrestricted;

fn fixtures() -> Vec<FixtureRow> {
    let text = include_str!("fixtures/oracle.csv");
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(FixtureRow::HEADER));
    lines.map(|l| FixtureRow::parse(l).unwrap()).collect()
}

#[test]
fn ground_energies_match_numpy_fixtures() {
    let rows = fixtures();
    assert_eq!(rows.len(), 48);
    for row in rows {
        let h = match row.model.as_str() {
            "tfi" => build_tfi(row.n_sites, row.param),
            "j1j2" => build_j1j2(row.n_sites, row.param),
            m => panic!("unknown model {m}"),
        }
        .unwrap();
        let sol = exact_ground_state(&h, ALL).unwrap();
        let tol = 1e-9 * row.e0.abs().max(1.0);
        assert!((sol.e0 - row.e0).abs() <= tol, "{row:?}: got {}", sol.e0);
        assert_eq!(sol.degeneracy, row.degeneracy, "{row:?}");
    }
}

#[test]
fn critical_ising_ring_matches_free_fermion_formula() {
    // even-parity sector of the periodic critical chain: E0 = -2 / sin(pi / 2N)
    for n in [4usize, 6, 8, 10] {
        let e0 = exact_ground_state(&build_tfi(n, 1.0).unwrap(), ALL).unwrap().e0;
        let exact = -2.0 / (std::f64::consts::PI / (2.0 * n as f64)).sin();
        assert!((e0 - exact).abs() < 1e-9, "N={n}: {e0} vs {exact}");
    }
}

#[test]
fn marshall_rotation_and_zero_magnetization_sector_keep_the_ground_energy() {
    for row in fixtures().into_iter().filter(|r| r.model == "j1j2" && r.n_sites <= 8) {
        let h = build_j1j2(row.n_sites, row.param).unwrap();
        let rotated = marshall_transform(&h).unwrap();
        let sector = SymmetrySector::FixedMagnetization { mz: 0 };
        for (hh, s) in [(&rotated, ALL), (&h, sector), (&rotated, sector)] {
            let e0 = exact_ground_state(hh, s).unwrap().e0;
            assert!((e0 - row.e0).abs() <= 1e-9 * row.e0.abs(), "{row:?}: {e0}");
        }
    }
}
