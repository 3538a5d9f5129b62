//! Sparse Pauli strings and weighted sums of them.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{domain, NqsError, Result};
use crate::hilbert::SpinConfiguration;

/// Coefficients below this magnitude are dropped during canonicalization.
pub const COEFF_EPS: f64 = 1e-14;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn symbol(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    /// `self * other = phase * result`, with `result == None` for the identity.
    pub fn mul(self, other: Pauli) -> (Complex64, Option<Pauli>) {
        use Pauli::*;
        match (self, other) {
            (a, b) if a == b => (Complex64::new(1.0, 0.0), None),
            (X, Y) => (I, Some(Z)),
            (Y, Z) => (I, Some(X)),
            (Z, X) => (I, Some(Y)),
            (Y, X) => (-I, Some(Z)),
            (Z, Y) => (-I, Some(X)),
            (X, Z) => (-I, Some(Y)),
            _ => unreachable!(),
        }
    }

    /// Flips the Z eigenvalue of the site it acts on.
    pub fn flips(self) -> bool {
        !matches!(self, Pauli::Z)
    }
}

/// A coefficient times a tensor product of single-site Pauli operators.
/// Sites without a factor carry the identity; no factors means the identity string.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliString {
    factors: BTreeMap<usize, Pauli>,
    pub coefficient: Complex64,
}

impl PauliString {
    pub fn new(
        factors: impl IntoIterator<Item = (usize, Pauli)>,
        coefficient: Complex64,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (site, p) in factors {
            if map.insert(site, p).is_some() {
                return domain(format!("site {site} appears twice in a Pauli string"));
            }
        }
        Ok(Self { factors: map, coefficient })
    }

    pub fn identity(coefficient: Complex64) -> Self {
        Self { factors: BTreeMap::new(), coefficient }
    }

    pub(crate) fn from_map(factors: BTreeMap<usize, Pauli>, coefficient: Complex64) -> Self {
        Self { factors, coefficient }
    }

    pub fn real(factors: impl IntoIterator<Item = (usize, Pauli)>, coefficient: f64) -> Result<Self> {
        Self::new(factors, Complex64::new(coefficient, 0.0))
    }

    pub fn factors(&self) -> &BTreeMap<usize, Pauli> {
        &self.factors
    }

    pub fn weight(&self) -> usize {
        self.factors.len()
    }

    pub fn max_site(&self) -> Option<usize> {
        self.factors.keys().next_back().copied()
    }

    /// Sites flipped by this string (X or Y factors), ascending.
    pub fn flip_sites(&self) -> Vec<usize> {
        self.factors
            .iter()
            .filter_map(|(&s, p)| p.flips().then_some(s))
            .collect()
    }

    /// `<x| P |x'>` where `x'` is `x` flipped on [`Self::flip_sites`], excluding the coefficient.
    ///
    /// Z contributes `x_i`; Y contributes `-i x_i`; X contributes 1.
    pub fn phase(&self, x: &[i8]) -> Complex64 {
        let mut sign = 1i8;
        let mut n_y = 0usize;
        for (&site, &p) in &self.factors {
            match p {
                Pauli::X => {}
                Pauli::Y => {
                    sign *= x[site];
                    n_y += 1;
                }
                Pauli::Z => sign *= x[site],
            }
        }
        minus_i_pow(n_y) * f64::from(sign)
    }

    /// Product `self * other`, including the phase from single-site products.
    pub fn mul(&self, other: &PauliString) -> PauliString {
        let mut factors = self.factors.clone();
        let mut phase = self.coefficient * other.coefficient;
        for (&site, &q) in &other.factors {
            match factors.remove(&site) {
                None => {
                    factors.insert(site, q);
                }
                Some(p) => {
                    let (ph, r) = p.mul(q);
                    phase *= ph;
                    if let Some(r) = r {
                        factors.insert(site, r);
                    }
                }
            }
        }
        PauliString { factors, coefficient: phase }
    }

    fn key(&self) -> Vec<(usize, Pauli)> {
        self.factors.iter().map(|(&s, &p)| (s, p)).collect()
    }
}

pub(crate) fn minus_i_pow(n: usize) -> Complex64 {
    match n % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.coefficient;
        if c.im == 0.0 {
            write!(f, "({})", c.re)?;
        } else {
            write!(f, "({},{})", c.re, c.im)?;
        }
        for (site, p) in &self.factors {
            write!(f, " {}{}", p.symbol(), site)?;
        }
        Ok(())
    }
}

/// One diagonal-phase contribution inside a [`FlipGroup`].
#[derive(Clone, Debug)]
struct SignedTerm {
    /// Coefficient already multiplied by `(-i)^{#Y}`.
    coefficient: Complex64,
    /// Sites whose spin value multiplies the element (Z and Y factors).
    sign_sites: Vec<usize>,
}

/// All terms that connect `x` to the same `x'`.
#[derive(Clone, Debug)]
struct FlipGroup {
    flips: Vec<usize>,
    terms: Vec<SignedTerm>,
}

impl FlipGroup {
    fn element(&self, x: &[i8]) -> Complex64 {
        self.terms
            .iter()
            .map(|t| {
                let sign: i8 = t.sign_sites.iter().map(|&s| x[s]).product();
                t.coefficient * f64::from(sign)
            })
            .sum()
    }
}

/// A weighted sum of Pauli strings on `n_sites` sites, kept canonical:
/// no two terms share a factor set and negligible coefficients are dropped.
#[derive(Clone, Debug)]
pub struct PauliHamiltonian {
    n_sites: usize,
    terms: Vec<PauliString>,
    groups: Vec<FlipGroup>,
}

impl PartialEq for PauliHamiltonian {
    fn eq(&self, other: &Self) -> bool {
        self.n_sites == other.n_sites && self.terms == other.terms
    }
}

impl PauliHamiltonian {
    /// Builds and canonicalizes. Terms may not reference sites `>= n_sites`.
    pub fn new(n_sites: usize, terms: Vec<PauliString>) -> Result<Self> {
        if n_sites == 0 {
            return domain("Hamiltonian needs at least one site");
        }
        if let Some(t) = terms.iter().find(|t| t.max_site().is_some_and(|m| m >= n_sites)) {
            return domain(format!("term {t} references a site outside 0..{n_sites}"));
        }
        let mut merged: BTreeMap<Vec<(usize, Pauli)>, PauliString> = BTreeMap::new();
        for t in terms {
            merged
                .entry(t.key())
                .and_modify(|e| e.coefficient += t.coefficient)
                .or_insert(t);
        }
        let terms: Vec<PauliString> = merged
            .into_values()
            .filter(|t| t.coefficient.norm() >= COEFF_EPS)
            .collect();
        let groups = build_groups(&terms);
        Ok(Self { n_sites, terms, groups })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn terms(&self) -> &[PauliString] {
        &self.terms
    }

    /// Pauli strings are Hermitian and linearly independent, so the sum is
    /// Hermitian exactly when every canonical coefficient is real.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.iter().all(|t| t.coefficient.im.abs() <= tol)
    }

    /// Calls `f(flips, <x|H|x'>)` once per connected state `x'` with a nonzero
    /// element; `flips` lists the sites where `x'` differs from `x` (empty for the diagonal).
    pub fn for_each_connection(&self, x: &[i8], mut f: impl FnMut(&[usize], Complex64)) {
        for g in &self.groups {
            let el = g.element(x);
            if el.norm() >= COEFF_EPS {
                f(&g.flips, el);
            }
        }
    }

    /// Every `x'` with nonzero `<x|H|x'>`, each exactly once, with the element.
    pub fn connected_states(&self, x: &SpinConfiguration) -> Vec<(SpinConfiguration, Complex64)> {
        let mut out = Vec::new();
        self.for_each_connection(x.sites(), |flips, el| out.push((x.flipped(flips), el)));
        out
    }

    /// Number of off-diagonal connections of `x`.
    pub fn off_diagonal_count(&self, x: &[i8]) -> usize {
        let mut n = 0;
        self.for_each_connection(x, |flips, _| n += usize::from(!flips.is_empty()));
        n
    }

    /// Dense matrix in the canonical basis order, assembled from connected states.
    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        if self.n_sites > 14 {
            return Err(NqsError::Resource(format!(
                "dense matrix for {} sites is too large",
                self.n_sites
            )));
        }
        let dim = 1usize << self.n_sites;
        let mut m = DMatrix::zeros(dim, dim);
        for row in 0..dim {
            let x = SpinConfiguration::from_index(self.n_sites, row);
            for (xp, el) in self.connected_states(&x) {
                m[(row, xp.index())] += el;
            }
        }
        Ok(m)
    }

    /// Sum of two operators on the same number of sites.
    pub fn add(&self, other: &PauliHamiltonian) -> Result<PauliHamiltonian> {
        if self.n_sites != other.n_sites {
            return domain("cannot add Hamiltonians on different site counts");
        }
        let terms = self.terms.iter().chain(&other.terms).cloned().collect();
        PauliHamiltonian::new(self.n_sites, terms)
    }

    /// Operator product, canonicalized.
    pub fn mul(&self, other: &PauliHamiltonian) -> Result<PauliHamiltonian> {
        if self.n_sites != other.n_sites {
            return domain("cannot multiply Hamiltonians on different site counts");
        }
        let terms = self
            .terms
            .iter()
            .flat_map(|a| other.terms.iter().map(move |b| a.mul(b)))
            .collect();
        PauliHamiltonian::new(self.n_sites, terms)
    }

    pub fn scale(&self, factor: Complex64) -> Result<PauliHamiltonian> {
        let terms = self
            .terms
            .iter()
            .map(|t| PauliString::from_map(t.factors.clone(), t.coefficient * factor))
            .collect();
        PauliHamiltonian::new(self.n_sites, terms)
    }

    /// Hermitian conjugate (conjugates every coefficient).
    pub fn adjoint(&self) -> PauliHamiltonian {
        let terms = self
            .terms
            .iter()
            .map(|t| PauliString::from_map(t.factors.clone(), t.coefficient.conj()))
            .collect();
        PauliHamiltonian::new(self.n_sites, terms).expect("adjoint keeps the site range")
    }
}

fn build_groups(terms: &[PauliString]) -> Vec<FlipGroup> {
    let mut map: BTreeMap<Vec<usize>, Vec<SignedTerm>> = BTreeMap::new();
    for t in terms {
        let n_y = t.factors.values().filter(|&&p| p == Pauli::Y).count();
        let sign_sites = t
            .factors
            .iter()
            .filter_map(|(&s, &p)| (p != Pauli::X).then_some(s))
            .collect();
        map.entry(t.flip_sites()).or_default().push(SignedTerm {
            coefficient: t.coefficient * minus_i_pow(n_y),
            sign_sites,
        });
    }
    map.into_iter()
        .map(|(flips, terms)| FlipGroup { flips, terms })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn single_site_products() {
        assert_eq!(Pauli::X.mul(Pauli::Y), (I, Some(Pauli::Z)));
        assert_eq!(Pauli::Y.mul(Pauli::X), (-I, Some(Pauli::Z)));
        assert_eq!(Pauli::Z.mul(Pauli::Z), (c(1.0), None));
    }

    #[test]
    fn duplicate_site_rejected() {
        assert!(PauliString::real([(0, Pauli::X), (0, Pauli::Z)], 1.0).is_err());
    }

    #[test]
    fn canonicalization_merges_and_drops() {
        let h = PauliHamiltonian::new(
            2,
            vec![
                PauliString::real([(0, Pauli::Z)], 1.0).unwrap(),
                PauliString::real([(0, Pauli::Z)], -1.0).unwrap(),
                PauliString::real([(1, Pauli::X)], 0.5).unwrap(),
                PauliString::real([(1, Pauli::X)], 0.25).unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(h.terms().len(), 1);
        assert_eq!(h.terms()[0].coefficient, c(0.75));
    }

    #[test]
    fn site_out_of_range() {
        let t = PauliString::real([(3, Pauli::Z)], 1.0).unwrap();
        assert!(PauliHamiltonian::new(3, vec![t]).is_err());
    }

    #[test]
    fn y_phase_convention() {
        // Y|+> = i|->, so <-|Y|+> = i.
        let y = PauliString::real([(0, Pauli::Y)], 1.0).unwrap();
        assert_eq!(y.phase(&[-1]), I);
        assert_eq!(y.phase(&[1]), -I);
    }

    #[test]
    fn string_product_matches_dense() {
        let a = PauliString::real([(0, Pauli::X), (1, Pauli::Z)], 2.0).unwrap();
        let b = PauliString::real([(0, Pauli::Y), (1, Pauli::Z)], 1.0).unwrap();
        let ha = PauliHamiltonian::new(2, vec![a.clone()]).unwrap();
        let hb = PauliHamiltonian::new(2, vec![b.clone()]).unwrap();
        let hab = PauliHamiltonian::new(2, vec![a.mul(&b)]).unwrap();
        let lhs = ha.to_dense().unwrap() * hb.to_dense().unwrap();
        assert!((lhs - hab.to_dense().unwrap()).norm() < 1e-14);
    }

    #[test]
    fn hermiticity_flag_matches_dense_check() {
        let herm = PauliHamiltonian::new(
            2,
            vec![PauliString::real([(0, Pauli::Y), (1, Pauli::X)], 0.3).unwrap()],
        )
        .unwrap();
        let d = herm.to_dense().unwrap();
        assert!(herm.is_hermitian(0.0));
        assert!((d.adjoint() - &d).norm() < 1e-15);

        let non = PauliHamiltonian::new(
            1,
            vec![PauliString::new([(0, Pauli::X)], Complex64::new(0.0, 1.0)).unwrap()],
        )
        .unwrap();
        let d = non.to_dense().unwrap();
        assert!(!non.is_hermitian(1e-12));
        assert!((d.adjoint() - &d).norm() > 1.0);
    }

    #[test]
    fn display_format() {
        let t = PauliString::new([(2, Pauli::Y), (0, Pauli::X)], Complex64::new(0.5, -1.0)).unwrap();
        assert_eq!(t.to_string(), "(0.5,-1) X0 Y2");
        assert_eq!(PauliString::identity(c(-2.0)).to_string(), "(-2)");
    }
}
