//! Convergence, reliability and timing comparisons between optimizers.

use serde::{Deserialize, Serialize};

use super::record::{EpochRow, RunRecord};
use crate::error::{domain, Result};
use crate::oracle::relative_error;

/// First 1-indexed epoch with `eps[i] <= b`.
pub fn first_below(eps: &[f64], b: f64) -> Option<usize> {
    eps.iter().position(|&e| e <= b).map(|i| i + 1)
}

/// First epoch whose batch energy satisfies `|E0 - E| / |E0| <= b`.
pub fn convergence_epoch(rows: &[EpochRow], e0: f64, b: f64) -> Result<Option<usize>> {
    let eps = rows.iter().map(|r| relative_error(r.energy_re, e0)).collect::<Result<Vec<_>>>()?;
    Ok(first_below(&eps, b).map(|i| rows[i - 1].epoch))
}

/// Convergence ratio with a Wald interval of two standard errors, clipped to `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reliability {
    pub runs: usize,
    pub converged: usize,
    pub ratio: f64,
    pub sigma: f64,
    pub lower: f64,
    pub upper: f64,
}

pub fn reliability(converged: &[bool]) -> Result<Reliability> {
    if converged.is_empty() {
        return domain("reliability of an empty run set");
    }
    let runs = converged.len();
    let k = converged.iter().filter(|&&c| c).count();
    let ratio = k as f64 / runs as f64;
    let sigma = (ratio * (1.0 - ratio) / runs as f64).sqrt();
    Ok(Reliability {
        runs,
        converged: k,
        ratio,
        sigma,
        lower: (ratio - 2.0 * sigma).max(0.0),
        upper: (ratio + 2.0 * sigma).min(1.0),
    })
}

/// Reliability of `records` judged against `e0` at threshold `b`.
pub fn reliability_of(records: &[RunRecord], e0: f64, b: f64) -> Result<Reliability> {
    let flags = records
        .iter()
        .map(|r| convergence_epoch(&r.rows, e0, b).map(|n| n.is_some()))
        .collect::<Result<Vec<_>>>()?;
    reliability(&flags)
}

/// Per-epoch sampling time at which both optimizers need the same total time:
/// `(n_lm t_u_lm - n_sr t_u_sr) / (n_sr - n_lm)`.
///
/// For `n_sr > n_lm`, larger sampling times favor LM; for `n_sr < n_lm`,
/// smaller ones do.
pub fn transition_time(n_lm: f64, t_u_lm: f64, n_sr: f64, t_u_sr: f64) -> Result<f64> {
    if n_sr == n_lm {
        return domain("transition time undefined for equal epoch counts");
    }
    Ok((n_lm * t_u_lm - n_sr * t_u_sr) / (n_sr - n_lm))
}

/// Total time of `n` epochs at fixed per-epoch costs.
pub fn total_time(n: f64, t_s: f64, t_u: f64) -> f64 {
    n * (t_s + t_u)
}

/// Aggregated timing of one optimizer in one grid cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellTiming {
    pub t_u_total: f64,
    pub t_total: f64,
}

impl CellTiming {
    /// Mean totals over `records`; `None` when empty.
    pub fn mean_of<'a>(records: impl IntoIterator<Item = &'a RunRecord>) -> Option<Self> {
        let (mut n, mut tu, mut t) = (0usize, 0.0, 0.0);
        for r in records {
            n += 1;
            tu += r.summary.t_u_total;
            t += r.summary.t_total;
        }
        (n > 0).then(|| Self { t_u_total: tu / n as f64, t_total: t / n as f64 })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub n_sites: usize,
    pub param: f64,
    pub sr: Option<CellTiming>,
    pub lm: Option<CellTiming>,
}

/// One phase-diagram row. Positive differences favor LM.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    #[serde(rename = "N")]
    pub n_sites: usize,
    pub param: f64,
    pub delta_t_u: Option<f64>,
    pub delta_t: Option<f64>,
    pub complete: bool,
}

pub fn phase_diagram(cells: &[PhaseCell]) -> Vec<PhaseRow> {
    cells
        .iter()
        .map(|c| match (c.sr, c.lm) {
            (Some(sr), Some(lm)) => PhaseRow {
                n_sites: c.n_sites,
                param: c.param,
                delta_t_u: Some(sr.t_u_total - lm.t_u_total),
                delta_t: Some(sr.t_total - lm.t_total),
                complete: true,
            },
            _ => PhaseRow { n_sites: c.n_sites, param: c.param, delta_t_u: None, delta_t: None, complete: false },
        })
        .collect()
}

pub fn phase_csv(rows: &[PhaseRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(["N", "param", "delta_t_u", "delta_t", "complete"])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| crate::NqsError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// Epochs to convergence with non-converged runs counted as infinite, so that
/// the median stays meaningful while fewer than half the runs fail.
pub fn n_conv_or_inf(records: &[RunRecord]) -> Vec<f64> {
    records.iter().map(|r| r.summary.n_conv.map_or(f64::INFINITY, |n| n as f64)).collect()
}
