//! Jordan–Wigner mapping of one- and two-body fermionic terms to Pauli sums.
//!
//! Mode `j` is occupied when site `j` holds `-1` (Z = -1), so
//!
//! ```text
//! a_j  -> Z_0 ... Z_{j-1} (X_j + i Y_j) / 2
//! a†_j -> Z_0 ... Z_{j-1} (X_j - i Y_j) / 2
//! ```
//!
//! and the number operator becomes `(1 - Z_j) / 2`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

use super::pauli::{Pauli, PauliHamiltonian, PauliString};

/// `coefficient * a†_{c0} a†_{c1} ... a_{a0} a_{a1} ...`, operators applied
/// in the listed order (creation operators to the left).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FermionTerm {
    pub creation: Vec<usize>,
    pub annihilation: Vec<usize>,
    pub coefficient: Complex64,
}

impl FermionTerm {
    pub fn new(creation: Vec<usize>, annihilation: Vec<usize>, coefficient: Complex64) -> Self {
        Self { creation, annihilation, coefficient }
    }

    /// `c a†_i a_j`.
    pub fn one_body(i: usize, j: usize, coefficient: f64) -> Self {
        Self::new(vec![i], vec![j], Complex64::new(coefficient, 0.0))
    }
}

fn ladder(modes: usize, j: usize, dagger: bool) -> Result<PauliHamiltonian> {
    let half = Complex64::new(0.5, 0.0);
    let y_coeff = if dagger {
        Complex64::new(0.0, -0.5)
    } else {
        Complex64::new(0.0, 0.5)
    };
    let string = |p: Pauli, c: Complex64| {
        PauliString::new((0..j).map(|i| (i, Pauli::Z)).chain([(j, p)]), c)
    };
    PauliHamiltonian::new(modes, vec![string(Pauli::X, half)?, string(Pauli::Y, y_coeff)?])
}

/// Pauli image of a single annihilation (`dagger = false`) or creation operator.
pub fn ladder_operator(modes: usize, j: usize, dagger: bool) -> Result<PauliHamiltonian> {
    if j >= modes {
        return domain(format!("mode {j} out of range for {modes} modes"));
    }
    ladder(modes, j, dagger)
}

pub fn jordan_wigner(modes: usize, terms: &[FermionTerm]) -> Result<PauliHamiltonian> {
    if modes == 0 {
        return domain("need at least one mode");
    }
    let mut total = PauliHamiltonian::new(modes, Vec::new())?;
    for term in terms {
        if term.creation.len() > 2 || term.annihilation.len() > 2 {
            return domain(format!(
                "only one- and two-body terms are supported, got {} creation / {} annihilation operators",
                term.creation.len(),
                term.annihilation.len()
            ));
        }
        let mut product = PauliHamiltonian::new(modes, vec![PauliString::identity(term.coefficient)])?;
        let ops = term
            .creation
            .iter()
            .map(|&j| (j, true))
            .chain(term.annihilation.iter().map(|&j| (j, false)));
        for (j, dagger) in ops {
            product = product.mul(&ladder_operator(modes, j, dagger)?)?;
        }
        total = total.add(&product)?;
    }
    Ok(total)
}
