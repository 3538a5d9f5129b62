//! Grids of runs and aggregation of written run directories.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::analysis::{
    first_below, mean, median, phase_diagram, reliability, transition_time, CellTiming, PhaseCell,
    PhaseRow, Reliability,
};
use super::config::{ExperimentConfig, OptimizerKind};
use super::record::RunRecord;
use super::train::{train_problem, Problem};
use crate::error::Result;
use crate::hilbert::SymmetrySector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n_sites: Vec<usize>,
    /// Values of the model scalar (`h` or `j2`). Empty keeps the configured value.
    pub params: Vec<f64>,
    pub optimizers: Vec<OptimizerKind>,
    pub seeds: Vec<u64>,
}

impl Grid {
    /// Every configuration of the grid, seeds excluded.
    pub fn configs(&self, base: &ExperimentConfig) -> Vec<ExperimentConfig> {
        let ns = if self.n_sites.is_empty() { vec![base.n_sites] } else { self.n_sites.clone() };
        let ps: Vec<Option<f64>> =
            if self.params.is_empty() { vec![None] } else { self.params.iter().map(|&p| Some(p)).collect() };
        let opts = if self.optimizers.is_empty() { vec![base.optimizer] } else { self.optimizers.clone() };
        let mut out = Vec::new();
        for &n in &ns {
            for &p in &ps {
                for &opt in &opts {
                    let mut c = base.clone();
                    c.n_sites = n;
                    if let Some(p) = p {
                        c.model = c.model.with_param(p);
                    }
                    if opt != base.optimizer {
                        c.optimizer = opt;
                        c.max_epochs = ExperimentConfig::preset(c.model.clone(), n, opt).max_epochs;
                    }
                    if let SymmetrySector::FixedMagnetization { .. } = c.sampler.sector {
                        c.sampler.sector = SymmetrySector::FixedMagnetization { mz: (n % 2) as i64 };
                    }
                    out.push(c);
                }
            }
        }
        out
    }
}

/// Runs every (configuration, seed) cell. With `parallel`, cells run
/// concurrently, which distorts wall-clock timings; leave it off when the
/// timings are the object of study. Records are written to `out_dir` when given.
pub fn sweep(
    base: &ExperimentConfig,
    grid: &Grid,
    parallel: bool,
    out_dir: Option<&Path>,
) -> Result<Vec<RunRecord>> {
    let seeds = if grid.seeds.is_empty() { base.seeds.clone() } else { grid.seeds.clone() };
    let configs = grid.configs(base);
    let problems = configs
        .iter()
        .map(|c| Problem::new(c).map(|p| (c, p)))
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<(&ExperimentConfig, &Problem, u64)> =
        problems.iter().flat_map(|(c, p)| seeds.iter().map(move |&s| (*c, p, s))).collect();
    let run = |&(c, p, s): &(&ExperimentConfig, &Problem, u64)| -> Result<RunRecord> {
        let rec = train_problem(c, p, s);
        if let Some(dir) = out_dir {
            rec.write(dir)?;
        }
        Ok(rec)
    };
    if parallel {
        cells.par_iter().map(run).collect()
    } else {
        cells.iter().map(run).collect()
    }
}

/// Reliability and epoch statistics for one (model, param, N, optimizer) group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityRow {
    pub model: String,
    pub param: Option<f64>,
    #[serde(rename = "N")]
    pub n_sites: usize,
    pub optimizer: String,
    pub runs: usize,
    pub converged: usize,
    pub c_r: f64,
    pub lower_2sigma: f64,
    pub upper_2sigma: f64,
    pub mean_n_conv: Option<f64>,
    pub median_n_conv: Option<f64>,
    pub mean_t_u_epoch: Option<f64>,
}

/// Transition sampling time per (model, N), from epoch counts averaged over
/// the model parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionRow {
    pub model: String,
    #[serde(rename = "N")]
    pub n_sites: usize,
    pub t_s_trans_mean: Option<f64>,
    pub t_s_trans_median: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub reliability: Vec<ReliabilityRow>,
    pub phase: Vec<PhaseRow>,
    pub transition: Vec<TransitionRow>,
}

type GroupKey = (String, Option<u64>, usize);
/// `(mean n_conv, median n_conv, mean t_u per epoch)` of one group.
type GroupStats = (Option<f64>, Option<f64>, Option<f64>);
/// Per (model, N): `(n_conv, t_u)` pairs for SR and LM.
type SizeTable = BTreeMap<(String, usize), [Vec<(f64, f64)>; 2]>;

fn key(r: &RunRecord) -> GroupKey {
    let c = &r.summary.config;
    (c.model.name().to_string(), c.model.param().map(f64::to_bits), c.n_sites)
}

/// Epoch of first convergence at `b`, recomputed from the stored relative errors.
fn n_conv_at(r: &RunRecord, b: f64) -> Option<usize> {
    let eps: Vec<f64> = r.rows.iter().map(|row| row.eps_rel.unwrap_or(f64::INFINITY)).collect();
    first_below(&eps, b)
}

/// Aggregates records by model, parameter, size and optimizer. Runs stopped
/// early at a threshold tighter than `b` still report their first crossing
/// of `b`; crossings of a tighter `b` after the stop are not observable.
pub fn report(records: &[RunRecord], b: f64) -> Result<Report> {
    let mut groups: BTreeMap<(GroupKey, OptimizerKind), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((key(r), r.summary.config.optimizer)).or_default().push(r);
    }
    let mut reliability_rows = Vec::new();
    let mut stats: BTreeMap<(GroupKey, OptimizerKind), GroupStats> = BTreeMap::new();
    for ((k, opt), runs) in &groups {
        let n_conv: Vec<Option<usize>> = runs.iter().map(|r| n_conv_at(r, b)).collect();
        let rel: Reliability = reliability(&n_conv.iter().map(Option::is_some).collect::<Vec<_>>())?;
        let conv: Vec<f64> = n_conv.iter().flatten().map(|&n| n as f64).collect();
        let t_u_epoch: Vec<f64> = runs
            .iter()
            .filter(|r| !r.rows.is_empty())
            .map(|r| r.summary.t_u_total / r.rows.len() as f64)
            .collect();
        let row = ReliabilityRow {
            model: k.0.clone(),
            param: k.1.map(f64::from_bits),
            n_sites: k.2,
            optimizer: opt.name().into(),
            runs: rel.runs,
            converged: rel.converged,
            c_r: rel.ratio,
            lower_2sigma: rel.lower,
            upper_2sigma: rel.upper,
            mean_n_conv: mean(&conv),
            median_n_conv: median(&conv),
            mean_t_u_epoch: mean(&t_u_epoch),
        };
        stats.insert((k.clone(), *opt), (row.mean_n_conv, row.median_n_conv, row.mean_t_u_epoch));
        reliability_rows.push(row);
    }

    let mut cells: BTreeMap<GroupKey, PhaseCell> = BTreeMap::new();
    for ((k, opt), runs) in &groups {
        let cell = cells.entry(k.clone()).or_insert_with(|| PhaseCell {
            n_sites: k.2,
            param: k.1.map(f64::from_bits).unwrap_or(f64::NAN),
            sr: None,
            lm: None,
        });
        let timing = CellTiming::mean_of(runs.iter().copied());
        match opt {
            OptimizerKind::Sr => cell.sr = timing,
            OptimizerKind::Lm => cell.lm = timing,
        }
    }
    let phase = phase_diagram(&cells.into_values().collect::<Vec<_>>());

    let mut by_size = SizeTable::new();
    let mut medians = SizeTable::new();
    for ((k, opt), (mean_n, median_n, t_u)) in &stats {
        let idx = matches!(opt, OptimizerKind::Lm) as usize;
        if let (Some(n), Some(t)) = (mean_n, t_u) {
            by_size.entry((k.0.clone(), k.2)).or_default()[idx].push((*n, *t));
        }
        if let (Some(n), Some(t)) = (median_n, t_u) {
            medians.entry((k.0.clone(), k.2)).or_default()[idx].push((*n, *t));
        }
    }
    let trans = |m: &SizeTable, k: &(String, usize)| {
        let [sr, lm] = m.get(k)?;
        let avg = |v: &[(f64, f64)]| Some((mean(&v.iter().map(|x| x.0).collect::<Vec<_>>())?, mean(&v.iter().map(|x| x.1).collect::<Vec<_>>())?));
        let (n_sr, t_sr) = avg(sr)?;
        let (n_lm, t_lm) = avg(lm)?;
        transition_time(n_lm, t_lm, n_sr, t_sr).ok()
    };
    let keys: BTreeSet<(String, usize)> = groups.keys().map(|(k, _)| (k.0.clone(), k.2)).collect();
    let transition = keys
        .iter()
        .map(|k| TransitionRow {
            model: k.0.clone(),
            n_sites: k.1,
            t_s_trans_mean: trans(&by_size, k),
            t_s_trans_median: trans(&medians, k),
        })
        .collect();
    Ok(Report { reliability: reliability_rows, phase, transition })
}

pub fn report_dir(dir: impl AsRef<Path>, b: f64) -> Result<Report> {
    report(&RunRecord::read_dir(dir)?, b)
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| crate::NqsError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ModelSpec;

    fn base() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::preset(ModelSpec::Tfi { h: 1.0 }, 4, OptimizerKind::Lm);
        cfg.sampler.n_samples = 100;
        cfg.sampler.burn_in_sweeps = 5;
        cfg.max_epochs = 3;
        cfg
    }

    #[test]
    fn grid_expands_cells() {
        let g = Grid {
            n_sites: vec![4, 6],
            params: vec![0.5, 1.0, 2.0],
            optimizers: vec![OptimizerKind::Sr, OptimizerKind::Lm],
            seeds: vec![1],
        };
        let cs = g.configs(&base());
        assert_eq!(cs.len(), 12);
        assert_eq!(cs[0].model, ModelSpec::Tfi { h: 0.5 });
        assert_eq!(cs[0].optimizer, OptimizerKind::Sr);
        assert_eq!(cs[0].max_epochs, 750);
        assert_eq!(cs[11].n_sites, 6);
        assert_eq!(cs[11].max_epochs, 3);
    }

    #[test]
    fn sweep_then_report() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid {
            n_sites: vec![4, 6],
            params: vec![0.5, 1.0],
            optimizers: vec![OptimizerKind::Sr, OptimizerKind::Lm],
            seeds: vec![1, 2],
        };
        let mut b = base();
        b.early_stop = false;
        let recs = sweep(&b, &g, true, Some(dir.path())).unwrap();
        assert_eq!(recs.len(), 16);
        let rep = report_dir(dir.path(), 0.5).unwrap();
        assert_eq!(rep.reliability.len(), 8);
        assert!(rep.reliability.iter().all(|r| r.runs == 2));
        assert_eq!(rep.phase.len(), 4);
        assert!(rep.phase.iter().all(|r| r.complete));
        assert_eq!(rep.transition.len(), 2);
        let direct = report(&recs, 0.5).unwrap();
        assert_eq!(direct.reliability, rep.reliability);
        assert!(to_csv(&rep.reliability).unwrap().starts_with("model,param,N,optimizer,runs"));
    }

    #[test]
    fn missing_optimizer_flags_incomplete() {
        let g = Grid { n_sites: vec![], params: vec![], optimizers: vec![OptimizerKind::Lm], seeds: vec![3] };
        let recs = sweep(&base(), &g, false, None).unwrap();
        let rep = report(&recs, 2e-3).unwrap();
        assert_eq!(rep.phase.len(), 1);
        assert!(!rep.phase[0].complete);
        assert_eq!(rep.transition[0].t_s_trans_mean, None);
    }
}
