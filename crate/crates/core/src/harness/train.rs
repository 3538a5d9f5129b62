//! The training loop: sample, estimate, solve, update.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentConfig, OptimizerKind};
use super::record::{build_id, EpochRow, HostInfo, RunRecord, RunSummary};
use crate::error::Result;
use crate::estimators::{assemble_lm, assemble_sr, local_quantities};
use crate::operators::PauliHamiltonian;
use crate::optimizers::{lm_step, sr_step};
use crate::oracle::{exact_ground_state, relative_error, ORACLE_MAX_SITES};
use crate::sampling::run_chain;
use crate::wavefunction::{init_params, RbmParameters, Wavefunction};

/// Hamiltonian and reference energy shared by all seeds of a configuration.
#[derive(Clone, Debug)]
pub struct Problem {
    pub hamiltonian: PauliHamiltonian,
    pub e0: Option<f64>,
}

impl Problem {
    /// Builds the Hamiltonian and resolves the reference energy: the
    /// configured value, else exact diagonalization in the sampler's sector
    /// when `n_sites <= ORACLE_MAX_SITES`.
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let hamiltonian = cfg.build_hamiltonian()?;
        let e0 = match cfg.e0 {
            Some(e) => Some(e),
            None if cfg.n_sites <= ORACLE_MAX_SITES => {
                let e = exact_ground_state(&hamiltonian, cfg.sampler.sector)?.e0;
                (e != 0.0).then_some(e)
            }
            None => None,
        };
        Ok(Self { hamiltonian, e0 })
    }
}

pub fn train(cfg: &ExperimentConfig, seed: u64) -> Result<RunRecord> {
    let problem = Problem::new(cfg)?;
    Ok(train_problem(cfg, &problem, seed))
}

/// Runs one seed. Errors after setup end the run early; the partial record
/// carries the message in `summary.failed`.
pub fn train_problem(cfg: &ExperimentConfig, problem: &Problem, seed: u64) -> RunRecord {
    let mut rows = Vec::new();
    let mut params = None;
    let failed = run_epochs(cfg, problem, seed, &mut rows, &mut params).err().map(|e| {
        log::error!("run {} failed: {e}", cfg.run_stem(seed));
        e.to_string()
    });
    finish(cfg, problem, seed, rows, params, failed)
}

fn run_epochs(
    cfg: &ExperimentConfig,
    problem: &Problem,
    seed: u64,
    rows: &mut Vec<EpochRow>,
    out: &mut Option<RbmParameters>,
) -> Result<()> {
    let h = &problem.hamiltonian;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = init_params(&mut rng, cfg.init_scale, cfg.shape())?;
    *out = Some(p.clone());
    let delay = Duration::from_secs_f64(cfg.sampling_delay);
    let lm = cfg.optimizer == OptimizerKind::Lm;
    for epoch in 1..=cfg.max_epochs {
        let sample_seed: u64 = rng.random();
        let t0 = Instant::now();
        let batch = run_chain(&p, h, &cfg.sampler, sample_seed)?;
        if !delay.is_zero() {
            std::thread::sleep(delay);
        }
        let t_s = t0.elapsed().as_secs_f64();

        let t1 = Instant::now();
        let lq = local_quantities(h, &p, &batch, lm)?;
        let energy = lq.energy().re;
        let energy_var = lq.variance();
        let update = if lm {
            lm_step(&assemble_lm(&lq)?, &cfg.lm, &batch, &p, h)?
        } else {
            sr_step(&assemble_sr(&lq)?, &cfg.sr)?
        };
        p = p.shifted(&update.delta)?;
        let t_u = t1.elapsed().as_secs_f64();
        *out = Some(p.clone());

        let eps_rel = problem.e0.map(|e0| relative_error(energy, e0)).transpose()?;
        let d = update.diagnostics;
        log::debug!("epoch {epoch}: E = {energy:.8} eps = {eps_rel:?} t_s = {t_s:.4} t_u = {t_u:.4}");
        rows.push(EpochRow {
            epoch,
            energy_re: energy,
            energy_var,
            eps_rel,
            accept_rate: batch.acceptance_rate(),
            t_s_seconds: t_s,
            t_u_seconds: t_u,
            kappa: d.kappa,
            lambda0_re: d.lambda0.map(|l| l.re),
            c_abs: d.c_abs,
            cg_iters: d.cg_iters,
            ess: d.ess,
            skipped: d.skipped,
        });
        if cfg.early_stop && eps_rel.is_some_and(|e| e <= cfg.threshold) {
            break;
        }
    }
    Ok(())
}

fn finish(
    cfg: &ExperimentConfig,
    problem: &Problem,
    seed: u64,
    rows: Vec<EpochRow>,
    params: Option<RbmParameters>,
    failed: Option<String>,
) -> RunRecord {
    let n_conv = rows.iter().find(|r| r.eps_rel.is_some_and(|e| e <= cfg.threshold)).map(|r| r.epoch);
    let t_u_total: f64 = rows.iter().map(|r| r.t_u_seconds).sum();
    let t_total: f64 = rows.iter().map(|r| r.t_s_seconds + r.t_u_seconds).sum();
    let best_eps_rel = rows.iter().filter_map(|r| r.eps_rel).reduce(f64::min);
    RunRecord {
        summary: RunSummary {
            config: cfg.clone(),
            seed,
            e0: problem.e0,
            n_conv,
            converged: n_conv.is_some(),
            epochs_run: rows.len(),
            t_u_total,
            t_total,
            final_energy: rows.last().map(|r| r.energy_re),
            best_eps_rel,
            failed,
            build_id: build_id(),
            host: HostInfo::current(),
        },
        rows,
        final_params: params.map(|p| p.snapshot()),
    }
}

/// Parameters of a finished run, rebuilt from its snapshot.
pub fn final_parameters(record: &RunRecord) -> Result<Option<RbmParameters>> {
    record.final_params.as_ref().map(RbmParameters::from_snapshot).transpose()
}

/// Energies of `record` relative to `e0`, in epoch order.
pub fn relative_errors(record: &RunRecord, e0: f64) -> Result<Vec<f64>> {
    record.rows.iter().map(|r| relative_error(r.energy_re, e0)).collect()
}
