//! CSV records and writers.

use crate::config::{CliError, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const ROW_HEADER: &str =
    "realization,seed,nt,k,r_min,xi_profile,beta_opt,tau_opt_W,feasible,rank_ratio_w,rank_ratio_sigma,wallclock_s";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XiProfile {
    Robust,
    Perfect,
}

/// One solved realization. Every column except `wallclock_s` is a pure
/// function of the configuration and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub realization: u64,
    pub seed: u64,
    pub nt: usize,
    pub k: usize,
    pub r_min: f64,
    pub xi_profile: XiProfile,
    pub beta_opt: Option<f64>,
    #[serde(rename = "tau_opt_W")]
    pub tau_opt_w: Option<f64>,
    pub feasible: bool,
    pub rank_ratio_w: Option<f64>,
    pub rank_ratio_sigma: Option<f64>,
    pub wallclock_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub nt: usize,
    pub k: usize,
    pub r_min: f64,
    pub xi_profile: XiProfile,
    pub realizations: usize,
    pub feasible: usize,
    pub feasibility_rate: f64,
    /// Mean over feasible realizations only.
    #[serde(rename = "mean_tau_opt_W")]
    pub mean_tau_opt_w: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfRow {
    pub nt: usize,
    pub xi_profile: XiProfile,
    pub rank: usize,
    #[serde(rename = "tau_opt_W")]
    pub tau_opt_w: f64,
    pub cdf: f64,
}

/// Whether `tau_opt` is nonincreasing along the sweep for one realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneRow {
    pub realization: u64,
    pub seed: u64,
    pub nt: usize,
    pub nonincreasing: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub rows: Vec<Row>,
    pub summary: Vec<SummaryRow>,
    pub cdf: Vec<CdfRow>,
    pub monotone: Vec<MonotoneRow>,
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}_{suffix}.csv"))
}

pub fn write_csv<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    Ok(())
}

impl ExperimentOutput {
    pub fn all_infeasible(&self) -> bool {
        self.rows.iter().all(|r| !r.feasible)
    }

    /// Writes the rows to `path` and the tables to `<stem>_summary.csv`,
    /// `<stem>_cdf.csv` and `<stem>_monotone.csv` beside it. Returns the files written.
    pub fn write(&self, path: &Path) -> Result<Vec<PathBuf>> {
        let mut written = vec![path.to_path_buf()];
        if self.rows.is_empty() {
            std::fs::write(path, format!("{ROW_HEADER}\n")).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        } else {
            write_csv(path, &self.rows)?;
        }
        let s = sibling(path, "summary");
        write_csv(&s, &self.summary)?;
        written.push(s);
        if !self.cdf.is_empty() {
            let c = sibling(path, "cdf");
            write_csv(&c, &self.cdf)?;
            written.push(c);
        }
        if !self.monotone.is_empty() {
            let m = sibling(path, "monotone");
            write_csv(&m, &self.monotone)?;
            written.push(m);
        }
        Ok(written)
    }
}
