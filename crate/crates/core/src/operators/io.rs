//! Line-oriented text format for Pauli Hamiltonians.
//!
//! ```text
//! # H2 in a minimal basis (comments start with '#')
//! sites 4
//! (-1.05) Z0
//! (0.39) X0 X1; (0.1,-0.2) Y2 Z3
//! (0.5)
//! ```
//!
//! Each term is `(re[,im])` followed by zero or more whitespace separated
//! factors `<P><site>` with `P` one of `X`, `Y`, `Z`. Several terms may share
//! a line when separated by `;`. The optional `sites N` directive declares
//! the site count; without it the count is one past the largest site index.
//! LF and CRLF line endings are both accepted.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{NqsError, Result};

use super::pauli::{Pauli, PauliHamiltonian, PauliString};

/// Parse options for [`parse_pauli_text`].
#[derive(Clone, Copy, Debug, Default)]
pub struct LoadOptions {
    /// Accept operators with complex canonical coefficients.
    pub allow_non_hermitian: bool,
}

pub fn load_pauli_file(path: impl AsRef<Path>) -> Result<PauliHamiltonian> {
    load_pauli_file_with(path, LoadOptions::default())
}

pub fn load_pauli_file_with(path: impl AsRef<Path>, opts: LoadOptions) -> Result<PauliHamiltonian> {
    let text = std::fs::read_to_string(path)?;
    parse_pauli_text(&text, opts)
}

fn parse_err<T>(line: usize, message: impl Into<String>) -> Result<T> {
    Err(NqsError::Parse { line, message: message.into() })
}

pub fn parse_pauli_text(text: &str, opts: LoadOptions) -> Result<PauliHamiltonian> {
    let mut declared: Option<usize> = None;
    let mut terms = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.trim_end_matches('\r');
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("sites") {
            let n = rest
                .trim()
                .parse::<usize>()
                .or_else(|_| parse_err(lineno, format!("bad site count {:?}", rest.trim())))?;
            if declared.replace(n).is_some() {
                return parse_err(lineno, "duplicate 'sites' directive");
            }
            continue;
        }
        for chunk in line.split(';') {
            let chunk = chunk.trim();
            if chunk.is_empty() {
                continue;
            }
            terms.push(parse_term(chunk, lineno)?);
        }
    }
    if terms.is_empty() {
        return Err(NqsError::Validation("Hamiltonian file contains no terms".into()));
    }
    let inferred = terms.iter().filter_map(PauliString::max_site).max().map_or(1, |m| m + 1);
    let n_sites = match declared {
        Some(n) if n < inferred => {
            return Err(NqsError::Validation(format!(
                "declared {n} sites but terms reference site {}",
                inferred - 1
            )))
        }
        Some(n) => n,
        None => inferred,
    };
    let h = PauliHamiltonian::new(n_sites, terms)?;
    if h.terms().is_empty() {
        return Err(NqsError::Validation("all terms cancel".into()));
    }
    if !opts.allow_non_hermitian && !h.is_hermitian(1e-12) {
        return Err(NqsError::Validation(
            "Hamiltonian is not Hermitian (complex canonical coefficient)".into(),
        ));
    }
    Ok(h)
}

fn parse_term(chunk: &str, line: usize) -> Result<PauliString> {
    let Some(rest) = chunk.strip_prefix('(') else {
        return parse_err(line, format!("term {chunk:?} must start with '(coefficient)'"));
    };
    let Some(close) = rest.find(')') else {
        return parse_err(line, "missing ')' after coefficient");
    };
    let coeff_text = &rest[..close];
    let mut parts = coeff_text.split(',');
    let re = parse_float(parts.next().unwrap_or(""), line)?;
    let im = match parts.next() {
        Some(p) => parse_float(p, line)?,
        None => 0.0,
    };
    if parts.next().is_some() {
        return parse_err(line, format!("coefficient {coeff_text:?} has too many components"));
    }
    let mut factors = Vec::new();
    for tok in rest[close + 1..].split_whitespace() {
        let mut chars = tok.chars();
        let p = chars
            .next()
            .and_then(Pauli::from_symbol)
            .map_or_else(|| parse_err(line, format!("bad Pauli factor {tok:?}")), Ok)?;
        let site = chars
            .as_str()
            .parse::<usize>()
            .or_else(|_| parse_err(line, format!("bad site index in {tok:?}")))?;
        factors.push((site, p));
    }
    PauliString::new(factors, Complex64::new(re, im)).or_else(|e| parse_err(line, e.to_string()))
}

fn parse_float(s: &str, line: usize) -> Result<f64> {
    let s = s.trim();
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .map_or_else(|| parse_err(line, format!("bad number {s:?}")), Ok)
}

/// Canonical text: a `sites` header and one term per line in canonical order.
pub fn serialize_pauli(h: &PauliHamiltonian) -> String {
    let mut out = format!("sites {}\n", h.n_sites());
    for t in h.terms() {
        let _ = writeln!(out, "{t}");
    }
    out
}

pub fn save_pauli_file(h: &PauliHamiltonian, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, serialize_pauli(h))?;
    Ok(())
}
