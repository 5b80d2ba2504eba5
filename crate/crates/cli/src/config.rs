//! Experiment configuration: system parameters plus Monte Carlo settings.

use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use swipt_core::params::{convert_units, RawConfig};
use swipt_core::{BetaGrid, SwiptError, SystemParams};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Swipt(#[from] SwiptError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Process exit code: 2 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Swipt(SwiptError::Config(_) | SwiptError::InvalidInput(_)) => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

pub(crate) fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub const DESK_REALIZATIONS: usize = 100;
pub const DESK_GRID_POINTS: usize = 50;
pub const FULL_REALIZATIONS: usize = 1000;
pub const FULL_NT: [usize; 3] = [10, 15, 20];

/// Optional `"experiment"` object of a config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub realizations: Option<usize>,
    pub seed: Option<u64>,
    pub nt_list: Option<Vec<usize>>,
    pub r_min_list: Option<Vec<f64>>,
    pub k_list: Option<Vec<usize>>,
    pub grid_step: Option<f64>,
    pub grid_points: Option<usize>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigFile {
    pub params: SystemParams,
    pub experiment: ExperimentSection,
}

/// Parses a config document. System keys sit at the top level with unit
/// suffixes; Monte Carlo settings go in an optional `"experiment"` object.
pub fn load_config(text: &str) -> Result<ConfigFile> {
    let mut doc: serde_json::Value = serde_json::from_str(text).map_err(|e| config_err(e.to_string()))?;
    let obj = doc.as_object_mut().ok_or_else(|| config_err("config must be a JSON object"))?;
    let experiment = match obj.remove("experiment") {
        Some(v) => serde_json::from_value(v).map_err(|e| config_err(format!("experiment: {e}")))?,
        None => ExperimentSection::default(),
    };
    let raw: RawConfig = serde_json::from_value(doc).map_err(|e| config_err(e.to_string()))?;
    let params = convert_units(&raw).map_err(|e| config_err(e.to_string()))?;
    Ok(ConfigFile { params, experiment })
}

pub fn read_config(path: &std::path::Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    load_config(&text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sweep {
    Cdf,
    RminSweep(Vec<f64>),
    KSweep(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Cdf,
    RminSweep,
    KSweep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub base: SystemParams,
    pub num_realizations: usize,
    pub seed: u64,
    pub sweep: Sweep,
    pub nt_list: Vec<usize>,
    pub grid: BetaGrid,
    pub output_path: PathBuf,
}

impl ExperimentConfig {
    /// Desk-scale defaults, or the full simulation scale when `full` is set.
    pub fn new(kind: SweepKind, base: SystemParams, full: bool) -> Self {
        let mut base = base;
        let sweep = match kind {
            SweepKind::Cdf => Sweep::Cdf,
            SweepKind::RminSweep => Sweep::RminSweep(vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5]),
            SweepKind::KSweep => {
                if full {
                    base.r_min = 2.0;
                }
                Sweep::KSweep((1..=7).collect())
            }
        };
        let nt_list = match (full, kind) {
            (false, _) => vec![base.nt],
            (true, SweepKind::RminSweep) => FULL_NT.to_vec(),
            (true, _) => vec![FULL_NT[0]],
        };
        let name = match kind {
            SweepKind::Cdf => "cdf",
            SweepKind::RminSweep => "rmin_sweep",
            SweepKind::KSweep => "k_sweep",
        };
        ExperimentConfig {
            base,
            num_realizations: if full { FULL_REALIZATIONS } else { DESK_REALIZATIONS },
            seed: 1,
            sweep,
            nt_list,
            grid: BetaGrid::Points(DESK_GRID_POINTS),
            output_path: PathBuf::from(format!("{name}.csv")),
        }
    }

    /// Overrides defaults with the values present in a config file section.
    pub fn apply(&mut self, s: &ExperimentSection) -> Result<()> {
        if let Some(n) = s.realizations {
            self.num_realizations = n;
        }
        if let Some(seed) = s.seed {
            self.seed = seed;
        }
        if let Some(l) = &s.nt_list {
            self.nt_list = l.clone();
        }
        match (&mut self.sweep, &s.r_min_list, &s.k_list) {
            (Sweep::RminSweep(r), Some(l), _) => *r = l.clone(),
            (Sweep::KSweep(k), _, Some(l)) => *k = l.clone(),
            _ => {}
        }
        match (s.grid_step, s.grid_points) {
            (Some(_), Some(_)) => return Err(config_err("grid_step and grid_points are exclusive")),
            (Some(st), None) => self.grid = BetaGrid::Step(st),
            (None, Some(n)) => self.grid = BetaGrid::Points(n),
            (None, None) => {}
        }
        if let Some(p) = &s.out {
            self.output_path = p.clone();
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate().map_err(|e| config_err(e.to_string()))?;
        if self.num_realizations == 0 {
            return Err(config_err("realizations must be at least 1"));
        }
        if self.nt_list.is_empty() || self.nt_list.contains(&0) {
            return Err(config_err("nt_list must be nonempty with positive entries"));
        }
        if !self.nt_list.windows(2).all(|w| w[0] < w[1]) {
            return Err(config_err("nt_list must be sorted ascending"));
        }
        match &self.sweep {
            Sweep::Cdf => {}
            Sweep::RminSweep(r) => {
                if r.is_empty() || r.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(config_err("r_min_list must be nonempty and nonnegative"));
                }
                if !r.windows(2).all(|w| w[0] < w[1]) {
                    return Err(config_err("r_min_list must be sorted ascending"));
                }
            }
            Sweep::KSweep(k) => {
                if k.is_empty() || k.contains(&0) {
                    return Err(config_err("k_list must be nonempty with positive entries"));
                }
                if !k.windows(2).all(|w| w[0] < w[1]) {
                    return Err(config_err("k_list must be sorted ascending"));
                }
            }
        }
        match self.grid {
            BetaGrid::Points(0) => Err(config_err("grid_points must be at least 1")),
            BetaGrid::Step(s) if !(s.is_finite() && s > 0.0) => Err(config_err("grid_step must be positive")),
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn experiment_section_is_split_off() {
        let c = load_config(r#"{"nt": 4, "r_min": 0.5, "experiment": {"realizations": 7, "k_list": [1, 3]}}"#).unwrap();
        assert_eq!(c.params.nt, 4);
        assert_eq!(c.experiment.realizations, Some(7));
        let mut e = ExperimentConfig::new(SweepKind::KSweep, c.params, false);
        e.apply(&c.experiment).unwrap();
        assert_eq!(e.sweep, Sweep::KSweep(vec![1, 3]));
        assert_eq!(e.nt_list, vec![4]);
        e.validate().unwrap();
    }

    #[test]
    fn bad_configs() {
        assert!(load_config("[1, 2]").is_err());
        assert!(load_config(r#"{"bogus_w": 1.0}"#).is_err());
        assert!(load_config(r#"{"experiment": {"bogus": 1}}"#).is_err());
        let base = SystemParams::simulation_preset(6, 1.5);
        let mut e = ExperimentConfig::new(SweepKind::RminSweep, base.clone(), false);
        e.sweep = Sweep::RminSweep(vec![1.0, 0.5]);
        assert!(e.validate().is_err());
        let mut e = ExperimentConfig::new(SweepKind::Cdf, base, false);
        e.num_realizations = 0;
        assert_eq!(e.validate().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn presets() {
        let base = SystemParams::simulation_preset(6, 1.5);
        let d = ExperimentConfig::new(SweepKind::Cdf, base.clone(), false);
        assert_eq!((d.num_realizations, d.nt_list.clone(), d.grid), (100, vec![6], BetaGrid::Points(50)));
        let p = ExperimentConfig::new(SweepKind::RminSweep, base.clone(), true);
        assert_eq!((p.num_realizations, p.nt_list), (1000, vec![10, 15, 20]));
        let k = ExperimentConfig::new(SweepKind::KSweep, base, true);
        assert_eq!(k.base.r_min, 2.0);
    }
}
