//! Per-run records: epoch rows (CSV) and a JSON summary.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{NqsError, Result};
use crate::wavefunction::RbmSnapshot;

/// One optimization epoch. Column order is the CSV order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRow {
    pub epoch: usize,
    pub energy_re: f64,
    pub energy_var: f64,
    pub eps_rel: Option<f64>,
    pub accept_rate: f64,
    pub t_s_seconds: f64,
    pub t_u_seconds: f64,
    pub kappa: Option<f64>,
    pub lambda0_re: Option<f64>,
    pub c_abs: Option<f64>,
    pub cg_iters: Option<usize>,
    pub ess: Option<f64>,
    pub skipped: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HostInfo {
    pub threads: usize,
    pub os: String,
    pub arch: String,
    pub hostname: Option<String>,
}

impl HostInfo {
    pub fn current() -> Self {
        let hostname = std::env::var("HOSTNAME").ok().or_else(|| {
            std::fs::read_to_string("/etc/hostname").ok().map(|s| s.trim().to_string())
        });
        Self {
            threads: rayon::current_num_threads(),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            hostname: hostname.filter(|h| !h.is_empty()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub e0: Option<f64>,
    pub n_conv: Option<usize>,
    pub converged: bool,
    pub epochs_run: usize,
    /// Total update time in seconds.
    pub t_u_total: f64,
    /// Total training time in seconds.
    pub t_total: f64,
    pub final_energy: Option<f64>,
    pub best_eps_rel: Option<f64>,
    pub failed: Option<String>,
    pub build_id: String,
    pub host: HostInfo,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub summary: RunSummary,
    pub rows: Vec<EpochRow>,
    /// Parameters after the last executed update.
    pub final_params: Option<RbmSnapshot>,
}

pub fn build_id() -> String {
    format!("{}+{}", env!("CARGO_PKG_VERSION"), env!("NQS_GIT_REV"))
}

impl RunRecord {
    pub fn energies(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.energy_re).collect()
    }

    pub fn stem(&self) -> String {
        self.summary.config.run_stem(self.summary.seed)
    }

    pub fn rows_to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        if self.rows.is_empty() {
            w.write_record(CSV_HEADER)?;
        }
        for r in &self.rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| NqsError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    pub fn rows_from_csv(text: &str) -> Result<Vec<EpochRow>> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        r.deserialize().map(|row| row.map_err(NqsError::from)).collect()
    }

    /// Writes `<stem>.csv`, `<stem>.json` and, when present,
    /// `<stem>.params.json` into `dir`. Returns the CSV path.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<PathBuf> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let stem = self.stem();
        let csv_path = dir.join(format!("{stem}.csv"));
        std::fs::write(&csv_path, self.rows_to_csv()?)?;
        std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&self.summary)?)?;
        if let Some(p) = &self.final_params {
            std::fs::write(dir.join(format!("{stem}.params.json")), serde_json::to_string(p)?)?;
        }
        Ok(csv_path)
    }

    /// Reads a record written by [`RunRecord::write`] from its summary path.
    pub fn read(summary_path: impl AsRef<Path>) -> Result<Self> {
        let path = summary_path.as_ref();
        let summary: RunSummary = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let csv_path = path.with_extension("csv");
        let rows = Self::rows_from_csv(&std::fs::read_to_string(csv_path)?)?;
        let params_path = path.with_extension("params.json");
        let final_params = match std::fs::read_to_string(params_path) {
            Ok(t) => Some(serde_json::from_str(&t)?),
            Err(_) => None,
        };
        Ok(Self { summary, rows, final_params })
    }

    /// All records in `dir`, sorted by stem.
    pub fn read_dir(dir: impl AsRef<Path>) -> Result<Vec<Self>> {
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension().is_some_and(|e| e == "json")
                    && !p.to_string_lossy().ends_with(".params.json")
            })
            .collect();
        paths.sort();
        paths.iter().map(Self::read).collect()
    }
}

const CSV_HEADER: [&str; 13] = [
    "epoch",
    "energy_re",
    "energy_var",
    "eps_rel",
    "accept_rate",
    "t_s_seconds",
    "t_u_seconds",
    "kappa",
    "lambda0_re",
    "c_abs",
    "cg_iters",
    "ess",
    "skipped",
];
