//! Spin-1/2 basis states, symmetry sectors and basis enumeration.
//!
//! A configuration stores the Z eigenvalue (`+1` or `-1`) of every site.
//! The canonical enumeration order treats `+1` as bit 0 and `-1` as bit 1,
//! with site 0 as the most significant bit, and lists states by increasing
//! integer value. `[+,+]`, `[+,-]`, `[-,+]`, `[-,-]` is the order for `N = 2`.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, NqsError, Result};

/// Default cap on the number of sites accepted by [`enumerate_basis`].
pub const DEFAULT_BASIS_CAP: usize = 16;

/// A basis state of `N` spin-1/2 sites, each holding `+1` or `-1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinConfiguration(Vec<i8>);

impl SpinConfiguration {
    pub fn new(sites: Vec<i8>) -> Result<Self> {
        if sites.is_empty() {
            return domain("configuration must have at least one site");
        }
        if let Some(bad) = sites.iter().find(|&&s| s != 1 && s != -1) {
            return domain(format!("spin value {bad} is not +1 or -1"));
        }
        Ok(Self(sites))
    }

    /// All sites set to `value` (which must be `+1` or `-1`).
    pub fn uniform(n_sites: usize, value: i8) -> Result<Self> {
        Self::new(vec![value; n_sites])
    }

    /// Decodes a basis index in the canonical order.
    pub fn from_index(n_sites: usize, index: usize) -> Self {
        let sites = (0..n_sites)
            .map(|i| {
                if (index >> (n_sites - 1 - i)) & 1 == 1 {
                    -1
                } else {
                    1
                }
            })
            .collect();
        Self(sites)
    }

    /// Position of this state in the canonical unrestricted enumeration.
    pub fn index(&self) -> usize {
        self.0
            .iter()
            .fold(0usize, |acc, &s| (acc << 1) | usize::from(s == -1))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sites(&self) -> &[i8] {
        &self.0
    }

    pub fn get(&self, site: usize) -> i8 {
        self.0[site]
    }

    pub fn flip(&mut self, site: usize) {
        self.0[site] = -self.0[site];
    }

    pub fn flip_all(&mut self, sites: &[usize]) {
        for &s in sites {
            self.flip(s);
        }
    }

    pub fn flipped(&self, sites: &[usize]) -> Self {
        let mut out = self.clone();
        out.flip_all(sites);
        out
    }

    /// Total magnetization `sum_i x_i`.
    pub fn magnetization(&self) -> i64 {
        self.0.iter().map(|&s| i64::from(s)).sum()
    }

    /// Number of sites holding `-1`; under Jordan–Wigner these are the occupied modes.
    pub fn occupation(&self) -> usize {
        self.0.iter().filter(|&&s| s == -1).count()
    }

    /// Sites where `self` and `other` differ, in increasing order.
    pub fn diff_sites(&self, other: &Self) -> Vec<usize> {
        self.0
            .iter()
            .zip(&other.0)
            .enumerate()
            .filter_map(|(i, (a, b))| (a != b).then_some(i))
            .collect()
    }
}

impl fmt::Display for SpinConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.0 {
            f.write_str(if s == 1 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

impl FromStr for SpinConfiguration {
    type Err = NqsError;

    fn from_str(s: &str) -> Result<Self> {
        let sites = s
            .trim()
            .chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                other => domain(format!("unexpected character {other:?} in configuration")),
            })
            .collect::<Result<Vec<i8>>>()?;
        Self::new(sites)
    }
}

/// Conserved-quantity sector used to restrict enumeration and sampling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SymmetrySector {
    #[default]
    Unrestricted,
    /// Fixed total magnetization `sum_i x_i`.
    FixedMagnetization { mz: i64 },
    /// Fixed number of sites holding `-1` (occupied modes after Jordan–Wigner).
    FixedOccupation { n_up: usize },
}

impl SymmetrySector {
    pub fn validate(&self, n_sites: usize) -> Result<()> {
        match *self {
            SymmetrySector::Unrestricted => Ok(()),
            SymmetrySector::FixedMagnetization { mz } => {
                let n = n_sites as i64;
                if mz.abs() > n || (n - mz).rem_euclid(2) != 0 {
                    domain(format!("magnetization {mz} impossible for {n_sites} sites"))
                } else {
                    Ok(())
                }
            }
            SymmetrySector::FixedOccupation { n_up } => {
                if n_up > n_sites {
                    domain(format!("occupation {n_up} exceeds {n_sites} sites"))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Number of sites holding `-1` in every member state, if fixed.
    fn down_count(&self, n_sites: usize) -> Option<usize> {
        match *self {
            SymmetrySector::Unrestricted => None,
            SymmetrySector::FixedMagnetization { mz } => {
                Some(((n_sites as i64 - mz) / 2) as usize)
            }
            SymmetrySector::FixedOccupation { n_up } => Some(n_up),
        }
    }

    pub fn contains(&self, x: &SpinConfiguration) -> bool {
        match self.down_count(x.len()) {
            None => true,
            Some(k) => self.validate(x.len()).is_ok() && x.occupation() == k,
        }
    }

    /// Number of basis states in the sector.
    pub fn dimension(&self, n_sites: usize) -> Result<u128> {
        self.validate(n_sites)?;
        Ok(match self.down_count(n_sites) {
            None => 1u128 << n_sites,
            Some(k) => binomial(n_sites, k),
        })
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// All configurations of the sector in canonical order, for `N <= DEFAULT_BASIS_CAP`.
pub fn enumerate_basis(n_sites: usize, sector: SymmetrySector) -> Result<Vec<SpinConfiguration>> {
    enumerate_basis_with_cap(n_sites, sector, DEFAULT_BASIS_CAP)
}

pub fn enumerate_basis_with_cap(
    n_sites: usize,
    sector: SymmetrySector,
    cap: usize,
) -> Result<Vec<SpinConfiguration>> {
    if n_sites == 0 {
        return domain("basis needs at least one site");
    }
    if n_sites > cap {
        return Err(NqsError::Resource(format!(
            "basis enumeration for {n_sites} sites exceeds cap of {cap}"
        )));
    }
    sector.validate(n_sites)?;
    let down = sector.down_count(n_sites);
    Ok((0..1usize << n_sites)
        .filter(|idx| down.is_none_or(|k| idx.count_ones() as usize == k))
        .map(|idx| SpinConfiguration::from_index(n_sites, idx))
        .collect())
}

/// Cyclic shift: `translate(x, s)[i] = x[(i - s) mod N]`.
pub fn translate(x: &SpinConfiguration, shift: i64) -> SpinConfiguration {
    let n = x.len() as i64;
    let sites = (0..n)
        .map(|i| x.0[(i - shift).rem_euclid(n) as usize])
        .collect();
    SpinConfiguration(sites)
}

/// Uniform draw from the sector.
pub fn random_config<R: Rng + ?Sized>(
    n_sites: usize,
    sector: SymmetrySector,
    rng: &mut R,
) -> Result<SpinConfiguration> {
    if n_sites == 0 {
        return domain("configuration needs at least one site");
    }
    sector.validate(n_sites)?;
    let sites = match sector.down_count(n_sites) {
        None => (0..n_sites)
            .map(|_| if rng.random::<bool>() { 1 } else { -1 })
            .collect(),
        Some(k) => {
            let mut sites = vec![1i8; n_sites];
            sites[..k].fill(-1);
            sites.shuffle(rng);
            sites
        }
    };
    Ok(SpinConfiguration(sites))
}
