//! Experiment configuration and per-model presets.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{NqsError, Result};
use crate::hilbert::SymmetrySector;
use crate::operators::{build_j1j2, build_tfi, load_pauli_file, marshall_transform, PauliHamiltonian};
use crate::optimizers::{LmConfig, SrConfig};
use crate::sampling::{Kernel, SamplerConfig};
use crate::wavefunction::RbmShape;

/// Default convergence threshold on the relative energy error.
pub const DEFAULT_THRESHOLD: f64 = 2e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    /// Periodic transverse-field Ising chain.
    Tfi { h: f64 },
    /// Periodic J1-J2 Heisenberg chain with `J1 = 1`.
    J1j2 {
        j2: f64,
        #[serde(default = "yes")]
        marshall: bool,
    },
    /// Hamiltonian read from a Pauli-string file. `n_up` fixes the number of
    /// occupied modes (sites holding `-1`).
    PauliFile {
        path: PathBuf,
        #[serde(default)]
        n_up: Option<usize>,
    },
}

fn yes() -> bool {
    true
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Tfi { .. } => "tfi",
            ModelSpec::J1j2 { .. } => "j1j2",
            ModelSpec::PauliFile { .. } => "pauli",
        }
    }

    /// The swept scalar (`h` or `j2`); `None` for file models.
    pub fn param(&self) -> Option<f64> {
        match *self {
            ModelSpec::Tfi { h } => Some(h),
            ModelSpec::J1j2 { j2, .. } => Some(j2),
            ModelSpec::PauliFile { .. } => None,
        }
    }

    /// Same model with the swept scalar replaced. File models are unchanged.
    pub fn with_param(&self, value: f64) -> Self {
        match self {
            ModelSpec::Tfi { .. } => ModelSpec::Tfi { h: value },
            ModelSpec::J1j2 { marshall, .. } => ModelSpec::J1j2 { j2: value, marshall: *marshall },
            other => other.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sr,
    #[default]
    Lm,
}

impl OptimizerKind {
    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Sr => "sr",
            OptimizerKind::Lm => "lm",
        }
    }
}

impl std::str::FromStr for OptimizerKind {
    type Err = NqsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sr" => Ok(OptimizerKind::Sr),
            "lm" => Ok(OptimizerKind::Lm),
            other => Err(NqsError::Config(format!("unknown optimizer '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    /// Chain length. For file models it must match the file's site count.
    pub n_sites: usize,
    pub alpha: usize,
    pub symmetric: bool,
    pub visible_bias: bool,
    pub optimizer: OptimizerKind,
    pub sampler: SamplerConfig,
    pub sr: SrConfig,
    pub lm: LmConfig,
    pub max_epochs: usize,
    pub seeds: Vec<u64>,
    /// Convergence threshold `b` on the relative error.
    pub threshold: f64,
    /// Standard deviation of the real and imaginary parts of initial parameters.
    pub init_scale: f64,
    /// Extra wall-clock time added to every sampling phase, in seconds.
    pub sampling_delay: f64,
    /// Stop at the first epoch whose relative error is at most `threshold`.
    pub early_stop: bool,
    /// Reference ground energy. Computed by exact diagonalization when absent
    /// and the system is small enough.
    pub e0: Option<f64>,
}

impl ExperimentConfig {
    /// Defaults for a model: symmetric alpha = 2 RBM, 10^3 samples and local
    /// (TFI) or exchange (J1-J2) moves for chains; dense alpha = 2 RBM,
    /// 10^4 samples and Hamiltonian moves for file models.
    pub fn preset(model: ModelSpec, n_sites: usize, optimizer: OptimizerKind) -> Self {
        let mut cfg = Self {
            model: model.clone(),
            n_sites,
            alpha: 2,
            symmetric: true,
            visible_bias: true,
            optimizer,
            sampler: SamplerConfig::default(),
            sr: SrConfig::default(),
            lm: LmConfig::default(),
            max_epochs: match optimizer {
                OptimizerKind::Sr => 750,
                OptimizerKind::Lm => 150,
            },
            seeds: vec![0],
            threshold: DEFAULT_THRESHOLD,
            init_scale: 0.05,
            sampling_delay: 0.0,
            early_stop: true,
            e0: None,
        };
        match model {
            ModelSpec::Tfi { .. } => {}
            ModelSpec::J1j2 { .. } => {
                cfg.sampler.kernel = Kernel::Exchange;
                cfg.sampler.sector = SymmetrySector::FixedMagnetization { mz: (n_sites % 2) as i64 };
            }
            ModelSpec::PauliFile { n_up, .. } => {
                cfg.symmetric = false;
                cfg.sampler.kernel = Kernel::Hamiltonian;
                cfg.sampler.n_samples = 10_000;
                cfg.sampler.downsample_interval = Some(10 * n_sites.max(1));
                if let Some(n_up) = n_up {
                    cfg.sampler.sector = SymmetrySector::FixedOccupation { n_up };
                }
                cfg.sr.eta = 0.05;
                cfg.lm.kappa0 = 0.1;
            }
        }
        cfg
    }

    /// Reads a TOML file. Keys absent from the file take the preset values of
    /// the file's `model`, `n_sites` and `optimizer`.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table =
            text.parse().map_err(|e: toml::de::Error| NqsError::Config(e.to_string()))?;
        let model: ModelSpec = table
            .get("model")
            .cloned()
            .ok_or_else(|| NqsError::Config("missing 'model'".into()))?
            .try_into()
            .map_err(|e: toml::de::Error| NqsError::Config(format!("model: {e}")))?;
        let n_sites = match table.get("n_sites") {
            Some(v) => v
                .as_integer()
                .filter(|&n| n > 0)
                .ok_or_else(|| NqsError::Config("n_sites must be a positive integer".into()))?
                as usize,
            None => match &model {
                ModelSpec::PauliFile { path, .. } => load_pauli_file(path)?.n_sites(),
                _ => return Err(NqsError::Config("missing 'n_sites'".into())),
            },
        };
        let optimizer = match table.get("optimizer") {
            Some(v) => v
                .as_str()
                .ok_or_else(|| NqsError::Config("optimizer must be a string".into()))?
                .parse()?,
            None => OptimizerKind::default(),
        };
        let preset = Self::preset(model, n_sites, optimizer);
        let mut merged = toml::Table::try_from(&preset).map_err(|e| NqsError::Config(e.to_string()))?;
        merge(&mut merged, table);
        let cfg: Self = toml::Value::Table(merged)
            .try_into()
            .map_err(|e: toml::de::Error| NqsError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| NqsError::Config(e.to_string()))
    }

    pub fn shape(&self) -> RbmShape {
        RbmShape { visible_bias: self.visible_bias, ..RbmShape::new(self.n_sites, self.alpha, self.symmetric) }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(NqsError::Config(m));
        if self.n_sites == 0 {
            return bad("n_sites must be positive".into());
        }
        self.shape().validate().map_err(|e| NqsError::Config(e.to_string()))?;
        self.sampler.validate(self.n_sites)?;
        self.sr.validate()?;
        self.lm.validate()?;
        if !(self.threshold > 0.0) {
            return bad(format!("threshold must be positive, got {}", self.threshold));
        }
        if !(self.init_scale >= 0.0) || !self.init_scale.is_finite() {
            return bad(format!("init_scale must be >= 0, got {}", self.init_scale));
        }
        if !(self.sampling_delay >= 0.0) || !self.sampling_delay.is_finite() {
            return bad(format!("sampling_delay must be >= 0, got {}", self.sampling_delay));
        }
        if self.e0 == Some(0.0) {
            return bad("reference energy must be nonzero".into());
        }
        if let ModelSpec::Tfi { h } | ModelSpec::J1j2 { j2: h, .. } = self.model {
            if !h.is_finite() {
                return bad("model parameter must be finite".into());
            }
        }
        Ok(())
    }

    /// Builds the Hamiltonian in the computational basis the sampler uses.
    pub fn build_hamiltonian(&self) -> Result<PauliHamiltonian> {
        let h = match &self.model {
            ModelSpec::Tfi { h } => build_tfi(self.n_sites, *h)?,
            ModelSpec::J1j2 { j2, marshall } => {
                let h = build_j1j2(self.n_sites, *j2)?;
                if *marshall {
                    marshall_transform(&h)?
                } else {
                    h
                }
            }
            ModelSpec::PauliFile { path, .. } => load_pauli_file(path)?,
        };
        if h.n_sites() != self.n_sites {
            return Err(NqsError::Config(format!(
                "Hamiltonian acts on {} sites but n_sites = {}",
                h.n_sites(),
                self.n_sites
            )));
        }
        Ok(h)
    }

    /// File-name stem identifying model, size, optimizer and seed.
    pub fn run_stem(&self, seed: u64) -> String {
        let param = match self.model.param() {
            Some(p) => format!("{p}"),
            None => match &self.model {
                ModelSpec::PauliFile { path, .. } => path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "file".into()),
                _ => unreachable!(),
            },
        };
        format!("{}_{}_N{}_{}_seed{}", self.model.name(), param, self.n_sites, self.optimizer.name(), seed)
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) if k != "model" => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
