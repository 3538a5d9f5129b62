use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use nqs_core::harness::analysis::phase_csv;
use nqs_core::harness::sweep::to_csv;
use nqs_core::harness::{report_dir, sweep, train_problem, ExperimentConfig, Grid, ModelSpec, OptimizerKind, Problem};
use nqs_core::hilbert::SymmetrySector;
use nqs_core::operators::{build_j1j2, build_tfi, load_pauli_file, marshall_transform};
use nqs_core::oracle::{exact_ground_state, FixtureRow};
use nqs_core::{validate, NqsError, Result};

/// Variational Monte Carlo with complex RBM wavefunctions.
#[derive(Parser)]
#[command(name = "nqs", version, about)]
struct Cli {
    /// Worker threads for sampling and estimators (default: all cores).
    #[arg(long, global = true, env = "NQS_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a single run and write its CSV and summary JSON.
    Train(TrainArgs),
    /// Run a grid of sizes, model parameters, optimizers and seeds.
    Sweep(SweepArgs),
    /// Print exact ground-state energies as fixture lines.
    Oracle(OracleArgs),
    /// Aggregate a run directory into reliability, phase-diagram and transition tables.
    Report(ReportArgs),
    /// Run the exact-mode property suite.
    Validate {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Tfi,
    J1j2,
    Pauli,
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// TOML configuration; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    model: Option<Model>,
    /// Number of sites.
    #[arg(long = "N", visible_alias = "n-sites")]
    n_sites: Option<usize>,
    /// Transverse field of the Ising chain.
    #[arg(long)]
    h: Option<f64>,
    /// Next-nearest-neighbour coupling of the J1-J2 chain.
    #[arg(long)]
    j2: Option<f64>,
    /// Skip the sublattice sign rotation of the J1-J2 chain.
    #[arg(long)]
    no_marshall: bool,
    /// Pauli-string Hamiltonian file.
    #[arg(long)]
    file: Option<PathBuf>,
    /// Number of occupied modes for file Hamiltonians.
    #[arg(long)]
    n_up: Option<usize>,
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long, value_parser = parse_opt)]
    opt: Option<OptimizerKind>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    n_samples: Option<usize>,
    #[arg(long)]
    alpha: Option<usize>,
    /// Convergence threshold on the relative error.
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    kappa0: Option<f64>,
    #[arg(long)]
    a_diag: Option<f64>,
    #[arg(long)]
    init_scale: Option<f64>,
    /// Extra seconds added to every sampling phase.
    #[arg(long)]
    delay: Option<f64>,
    /// Reference ground energy.
    #[arg(long)]
    e0: Option<f64>,
    /// Keep training after the threshold is reached.
    #[arg(long)]
    no_early_stop: bool,
    /// Output directory.
    #[arg(long, env = "NQS_OUT_DIR", default_value = "runs")]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    run: RunArgs,
    /// Sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    /// Model parameter values (h or j2), comma separated.
    #[arg(long, value_delimiter = ',')]
    params: Vec<f64>,
    /// Optimizers, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_opt)]
    opts: Vec<OptimizerKind>,
    /// Seeds, comma separated.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    /// Run cells concurrently (timings become unreliable).
    #[arg(long)]
    parallel: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, value_enum)]
    model: Model,
    #[arg(long = "N", visible_alias = "n-sites", value_delimiter = ',', required = true)]
    n_sites: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    h: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    j2: Vec<f64>,
    #[arg(long)]
    file: Option<PathBuf>,
    #[arg(long)]
    n_up: Option<usize>,
    /// Print the CSV header first.
    #[arg(long)]
    header: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory of run files.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = nqs_core::harness::DEFAULT_THRESHOLD)]
    b: f64,
    /// Directory for the CSV tables (default: the input directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_opt(s: &str) -> Result<OptimizerKind> {
    s.parse()
}

fn build_config(m: &ModelArgs, r: &RunArgs) -> Result<ExperimentConfig> {
    let opt = r.opt.unwrap_or_default();
    let mut cfg = match &m.config {
        Some(path) => ExperimentConfig::from_toml_file(path)?,
        None => {
            let model = match m.model.unwrap_or(Model::Tfi) {
                Model::Tfi => ModelSpec::Tfi { h: m.h.unwrap_or(1.0) },
                Model::J1j2 => ModelSpec::J1j2 { j2: m.j2.unwrap_or(0.0), marshall: !m.no_marshall },
                Model::Pauli => ModelSpec::PauliFile {
                    path: m.file.clone().ok_or_else(|| NqsError::Config("--file is required".into()))?,
                    n_up: m.n_up,
                },
            };
            let n = match (&model, m.n_sites) {
                (_, Some(n)) => n,
                (ModelSpec::PauliFile { path, .. }, None) => load_pauli_file(path)?.n_sites(),
                _ => return Err(NqsError::Config("--N is required".into())),
            };
            ExperimentConfig::preset(model, n, opt)
        }
    };
    if m.config.is_some() {
        if let Some(n) = m.n_sites {
            cfg.n_sites = n;
        }
        if let Some(v) = m.h.or(m.j2) {
            cfg.model = cfg.model.with_param(v);
        }
        if let Some(o) = r.opt {
            cfg.optimizer = o;
        }
    }
    if let Some(s) = r.seed {
        cfg.seeds = vec![s];
    }
    macro_rules! set {
        ($($flag:expr => $field:expr),* $(,)?) => {
            $(if let Some(v) = $flag { $field = v; })*
        };
    }
    set!(
        r.max_epochs => cfg.max_epochs,
        r.n_samples => cfg.sampler.n_samples,
        r.alpha => cfg.alpha,
        r.b => cfg.threshold,
        r.eta => cfg.sr.eta,
        r.kappa0 => cfg.lm.kappa0,
        r.init_scale => cfg.init_scale,
        r.delay => cfg.sampling_delay,
    );
    if let Some(a) = r.a_diag {
        cfg.sr.a_diag = a;
        cfg.lm.a_diag = a;
    }
    if r.e0.is_some() {
        cfg.e0 = r.e0;
    }
    if r.no_early_stop {
        cfg.early_stop = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(a) => {
            let cfg = build_config(&a.model, &a.run)?;
            let problem = Problem::new(&cfg)?;
            for &seed in &cfg.seeds {
                let rec = train_problem(&cfg, &problem, seed);
                let path = rec.write(&a.run.out)?;
                let s = &rec.summary;
                println!(
                    "{}: epochs {} n_conv {:?} final E {:?} E0 {:?} T_u {:.3}s T {:.3}s -> {}",
                    rec.stem(),
                    s.epochs_run,
                    s.n_conv,
                    s.final_energy,
                    s.e0,
                    s.t_u_total,
                    s.t_total,
                    path.display()
                );
                if let Some(msg) = &s.failed {
                    return Err(NqsError::Solver(format!("run failed: {msg}")));
                }
            }
        }
        Command::Sweep(mut a) => {
            if a.model.n_sites.is_none() {
                a.model.n_sites = a.sizes.first().copied();
            }
            let cfg = build_config(&a.model, &a.run)?;
            let grid = Grid { n_sites: a.sizes, params: a.params, optimizers: a.opts, seeds: a.seeds };
            let recs = sweep(&cfg, &grid, a.parallel, Some(&a.run.out))?;
            let failed = recs.iter().filter(|r| r.summary.failed.is_some()).count();
            println!("{} runs written to {} ({failed} failed)", recs.len(), a.run.out.display());
        }
        Command::Oracle(a) => {
            if a.header {
                println!("{}", FixtureRow::HEADER);
            }
            for &n in &a.n_sites {
                let jobs: Vec<(String, f64, _, SymmetrySector)> = match a.model {
                    Model::Tfi => a
                        .h
                        .iter()
                        .map(|&h| Ok(("tfi".to_string(), h, build_tfi(n, h)?, SymmetrySector::Unrestricted)))
                        .collect::<Result<_>>()?,
                    Model::J1j2 => a
                        .j2
                        .iter()
                        .map(|&j| {
                            let sector = SymmetrySector::FixedMagnetization { mz: (n % 2) as i64 };
                            Ok(("j1j2".to_string(), j, marshall_transform(&build_j1j2(n, j)?)?, sector))
                        })
                        .collect::<Result<_>>()?,
                    Model::Pauli => {
                        let path = a.file.as_ref().ok_or_else(|| NqsError::Config("--file is required".into()))?;
                        let sector = a
                            .n_up
                            .map_or(SymmetrySector::Unrestricted, |n_up| SymmetrySector::FixedOccupation { n_up });
                        vec![("pauli".to_string(), f64::NAN, load_pauli_file(path)?, sector)]
                    }
                };
                if jobs.is_empty() {
                    return Err(NqsError::Config("no model parameter given (--h or --j2)".into()));
                }
                for (model, param, h, sector) in jobs {
                    if h.n_sites() != n {
                        return Err(NqsError::Config(format!("file has {} sites, --N is {n}", h.n_sites())));
                    }
                    let sol = exact_ground_state(&h, sector)?;
                    let row = FixtureRow { model, param, n_sites: n, e0: sol.e0, degeneracy: sol.degeneracy };
                    println!("{}", row.to_csv());
                }
            }
        }
        Command::Report(a) => {
            let rep = report_dir(&a.input, a.b)?;
            let out = a.out.unwrap_or_else(|| a.input.clone());
            std::fs::create_dir_all(&out)?;
            let rel = to_csv(&rep.reliability)?;
            let phase = phase_csv(&rep.phase)?;
            let trans = to_csv(&rep.transition)?;
            std::fs::write(out.join("reliability.csv"), &rel)?;
            std::fs::write(out.join("phase_diagram.csv"), &phase)?;
            std::fs::write(out.join("transition.csv"), &trans)?;
            println!("# reliability (b = {})\n{rel}\n# phase diagram\n{phase}\n# transition\n{trans}", a.b);
        }
        Command::Validate { seed } => {
            let checks = validate::run_suite(seed)?;
            let failed = checks.iter().filter(|c| !c.passed).count();
            for c in &checks {
                println!("{c}");
            }
            if failed > 0 {
                return Err(NqsError::Validation(format!("{failed} of {} checks failed", checks.len())));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
