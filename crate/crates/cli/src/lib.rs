//! Experiment harness behind the `swipt` command-line tool.

pub mod config;
pub mod experiments;
pub mod output;

pub use config::{load_config, read_config, CliError, ConfigFile, ExperimentConfig, ExperimentSection, Result, Sweep, SweepKind};
pub use experiments::{nonincreasing, run, run_cdf, run_job, run_jobs, run_k_sweep, run_rmin_sweep, Job};
pub use output::{CdfRow, ExperimentOutput, MonotoneRow, Row, SummaryRow, XiProfile, ROW_HEADER};

/// Exit code when every realization of an experiment is infeasible.
pub const EXIT_ALL_INFEASIBLE: i32 = 3;

/// Reads `SWIPT_THREADS`; `None` when unset.
pub fn thread_cap() -> Result<Option<usize>> {
    match std::env::var("SWIPT_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("SWIPT_THREADS must be a positive integer, got {v:?}"))),
        },
    }
}
