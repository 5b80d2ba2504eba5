//! Monte Carlo drivers for the CDF, `R_min` and EHR-count experiments.

use crate::config::{ExperimentConfig, Result, Sweep};
use crate::output::{CdfRow, ExperimentOutput, MonotoneRow, Row, SummaryRow, XiProfile};
use rayon::prelude::*;
use swipt_core::{design, generate_channels_indexed, DesignOutcome, DesignSettings, SystemParams};

/// Relative slack allowed when checking `tau_opt` for monotonicity.
pub const MONOTONE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Job {
    pub realization: u64,
    pub nt: usize,
    pub k: usize,
    pub r_min: f64,
    pub profile: XiProfile,
}

impl Job {
    pub fn params(&self, base: &SystemParams) -> SystemParams {
        let p = base.with_nt(self.nt).with_num_ehr(self.k).with_r_min(self.r_min);
        match self.profile {
            XiProfile::Robust => p,
            XiProfile::Perfect => p.perfect_csi(),
        }
    }
}

pub fn settings(config: &ExperimentConfig) -> DesignSettings {
    DesignSettings { grid: config.grid, ..DesignSettings::default() }
}

/// Solves one job; channels depend only on `(seed, realization)`.
pub fn run_job(config: &ExperimentConfig, job: &Job) -> Result<(Row, DesignOutcome)> {
    let params = job.params(&config.base);
    let channels = generate_channels_indexed(&params, config.seed, job.realization);
    let out = design(&params, &channels, &settings(config))?;
    let row = Row {
        realization: job.realization,
        seed: config.seed,
        nt: job.nt,
        k: job.k,
        r_min: job.r_min,
        xi_profile: job.profile,
        beta_opt: out.beta_opt,
        tau_opt_w: out.tau_opt,
        feasible: out.feasible,
        rank_ratio_w: out.rank.map(|r| r.ratio_w),
        rank_ratio_sigma: out.rank.map(|r| r.ratio_sigma),
        wallclock_s: out.wallclock_s,
    };
    Ok((row, out))
}

/// Runs jobs in parallel and returns rows in job order.
pub fn run_jobs(config: &ExperimentConfig, jobs: &[Job]) -> Result<Vec<Row>> {
    jobs.par_iter().map(|j| run_job(config, j).map(|(r, _)| r)).collect()
}

fn summarize(rows: &[Row]) -> Vec<SummaryRow> {
    let mut groups: Vec<(SummaryRow, f64)> = Vec::new();
    for r in rows {
        let pos = groups.iter().position(|(g, _)| {
            g.nt == r.nt && g.k == r.k && g.r_min.to_bits() == r.r_min.to_bits() && g.xi_profile == r.xi_profile
        });
        let idx = match pos {
            Some(i) => i,
            None => {
                groups.push((
                    SummaryRow {
                        nt: r.nt,
                        k: r.k,
                        r_min: r.r_min,
                        xi_profile: r.xi_profile,
                        realizations: 0,
                        feasible: 0,
                        feasibility_rate: 0.0,
                        mean_tau_opt_w: None,
                    },
                    0.0,
                ));
                groups.len() - 1
            }
        };
        let (g, sum) = &mut groups[idx];
        g.realizations += 1;
        if let (true, Some(t)) = (r.feasible, r.tau_opt_w) {
            g.feasible += 1;
            *sum += t;
        }
    }
    groups
        .into_iter()
        .map(|(mut g, sum)| {
            g.feasibility_rate = g.feasible as f64 / g.realizations as f64;
            g.mean_tau_opt_w = (g.feasible > 0).then(|| sum / g.feasible as f64);
            g
        })
        .collect()
}

/// True when each value is at most the previous one (infeasible ranks lowest).
pub fn nonincreasing(values: &[Option<f64>]) -> bool {
    values.windows(2).all(|w| match (w[0], w[1]) {
        (_, None) => true,
        (None, Some(_)) => false,
        (Some(a), Some(b)) => b <= a + MONOTONE_TOL * a.abs().max(1.0),
    })
}

/// Per-realization monotonicity over consecutive blocks of `len` rows.
fn monotone_flags(rows: &[Row], len: usize) -> Vec<MonotoneRow> {
    rows.chunks(len)
        .map(|c| MonotoneRow {
            realization: c[0].realization,
            seed: c[0].seed,
            nt: c[0].nt,
            nonincreasing: nonincreasing(&c.iter().map(|r| r.tau_opt_w).collect::<Vec<_>>()),
        })
        .collect()
}

fn cdf_rows(rows: &[Row], nt: usize, profile: XiProfile) -> Vec<CdfRow> {
    let mut v: Vec<f64> = rows
        .iter()
        .filter(|r| r.nt == nt && r.xi_profile == profile)
        .filter_map(|r| r.tau_opt_w)
        .collect();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    v.into_iter()
        .enumerate()
        .map(|(i, t)| CdfRow { nt, xi_profile: profile, rank: i + 1, tau_opt_w: t, cdf: (i + 1) as f64 / n as f64 })
        .collect()
}

/// Robust and perfect-CSI designs for every realization, with empirical CDFs
/// over the feasible realizations of each arm.
pub fn run_cdf(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let mut jobs = Vec::new();
    for &nt in &config.nt_list {
        for r in 0..config.num_realizations as u64 {
            for profile in [XiProfile::Robust, XiProfile::Perfect] {
                jobs.push(Job { realization: r, nt, k: config.base.num_ehr, r_min: config.base.r_min, profile });
            }
        }
    }
    let rows = run_jobs(config, &jobs)?;
    let mut cdf = Vec::new();
    for &nt in &config.nt_list {
        for profile in [XiProfile::Robust, XiProfile::Perfect] {
            cdf.extend(cdf_rows(&rows, nt, profile));
        }
    }
    Ok(ExperimentOutput { summary: summarize(&rows), cdf, monotone: Vec::new(), rows })
}

/// Robust designs over the `R_min` list for every realization and antenna count.
pub fn run_rmin_sweep(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let Sweep::RminSweep(list) = &config.sweep else {
        return Err(crate::config::config_err("run_rmin_sweep needs an R_min sweep"));
    };
    let mut jobs = Vec::new();
    for &nt in &config.nt_list {
        for r in 0..config.num_realizations as u64 {
            for &r_min in list {
                jobs.push(Job { realization: r, nt, k: config.base.num_ehr, r_min, profile: XiProfile::Robust });
            }
        }
    }
    let rows = run_jobs(config, &jobs)?;
    let monotone = monotone_flags(&rows, list.len());
    let mut summary = summarize(&rows);
    summary.sort_by(|a, b| (a.nt, a.r_min).partial_cmp(&(b.nt, b.r_min)).expect("finite r_min"));
    Ok(ExperimentOutput { summary, cdf: Vec::new(), monotone, rows })
}

/// Robust designs over nested EHR sets for every realization and antenna count.
pub fn run_k_sweep(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let Sweep::KSweep(list) = &config.sweep else {
        return Err(crate::config::config_err("run_k_sweep needs a K sweep"));
    };
    let mut jobs = Vec::new();
    for &nt in &config.nt_list {
        for r in 0..config.num_realizations as u64 {
            for &k in list {
                jobs.push(Job { realization: r, nt, k, r_min: config.base.r_min, profile: XiProfile::Robust });
            }
        }
    }
    let rows = run_jobs(config, &jobs)?;
    let monotone = monotone_flags(&rows, list.len());
    let mut summary = summarize(&rows);
    summary.sort_by_key(|s| (s.nt, s.k));
    Ok(ExperimentOutput { summary, cdf: Vec::new(), monotone, rows })
}

/// Dispatches on the configured sweep.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    match config.sweep {
        Sweep::Cdf => run_cdf(config),
        Sweep::RminSweep(_) => run_rmin_sweep(config),
        Sweep::KSweep(_) => run_k_sweep(config),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SweepKind;
    use swipt_core::BetaGrid;

    #[test]
    fn monotone_rule() {
        assert!(nonincreasing(&[Some(3.0), Some(2.0), None, None]));
        assert!(!nonincreasing(&[None, Some(1.0)]));
        assert!(!nonincreasing(&[Some(1.0), Some(1.1)]));
        assert!(nonincreasing(&[Some(1.0), Some(1.0 + 1e-9)]));
    }

    #[test]
    fn zero_radius_arms_coincide() {
        let base = SystemParams::simulation_preset(3, 0.5).perfect_csi();
        let mut c = ExperimentConfig::new(SweepKind::Cdf, base, false);
        c.num_realizations = 2;
        c.grid = BetaGrid::Points(6);
        let out = run_cdf(&c).unwrap();
        assert_eq!(out.rows.len(), 4);
        for pair in out.rows.chunks(2) {
            assert_eq!(pair[0].tau_opt_w, pair[1].tau_opt_w);
            assert_eq!(pair[0].beta_opt, pair[1].beta_opt);
        }
        let robust: Vec<f64> = out.cdf.iter().filter(|r| r.xi_profile == XiProfile::Robust).map(|r| r.tau_opt_w).collect();
        let perfect: Vec<f64> = out.cdf.iter().filter(|r| r.xi_profile == XiProfile::Perfect).map(|r| r.tau_opt_w).collect();
        assert_eq!(robust, perfect);
        assert!(out.cdf.windows(2).all(|w| w[0].xi_profile != w[1].xi_profile || w[0].tau_opt_w <= w[1].tau_opt_w));
    }
}
