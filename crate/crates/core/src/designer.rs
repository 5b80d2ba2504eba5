//! One-dimensional search over `beta` and rank-one extraction.

use crate::channels::{CVec, ChannelSet};
use crate::error::{invalid, Result};
use crate::model::{hermitian_eigenvalues, CMat, TransmitDesign};
use crate::params::SystemParams;
use crate::sdr::{beta_search_bounds, build_p4, map_solution, min_trace_problem, rate_screened, P4Solution, DEFAULT_EPS_T};
use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use swipt_conic::{solve, SolveStatus, SolverSettings};

/// Eigenvalue ratio above which `W` is flagged as not rank one.
pub const RANK_FLAG_RATIO: f64 = 1e-3;

/// Relative slack on `tau` in the minimum-trace tie-break solve.
pub const TIE_BREAK_SLACK: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaGrid {
    /// `n` evenly spaced points including both ends.
    Points(usize),
    /// Spacing `s` starting at 1; the upper end is included when it falls on the grid.
    Step(f64),
}

impl BetaGrid {
    pub fn points(&self, lo: f64, hi: f64) -> Result<Vec<f64>> {
        match *self {
            BetaGrid::Points(n) => {
                if n == 0 {
                    return Err(invalid("beta grid needs at least one point"));
                }
                if n == 1 {
                    return Ok(vec![lo]);
                }
                let step = (hi - lo) / (n - 1) as f64;
                Ok((0..n).map(|j| if j + 1 == n { hi } else { lo + j as f64 * step }).collect())
            }
            BetaGrid::Step(s) => {
                if !(s.is_finite() && s > 0.0) {
                    return Err(invalid(format!("beta grid step {s} must be positive")));
                }
                let n = ((hi - lo) / s * (1.0 + 1e-12)).floor() as usize + 1;
                if n > 1_000_000 {
                    return Err(invalid(format!("beta grid step {s} gives {n} points")));
                }
                Ok((0..n).map(|j| lo + j as f64 * s).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignSettings {
    pub grid: BetaGrid,
    pub eps_t: f64,
    pub solver: SolverSettings,
    /// Golden-section polish of `beta` around the best grid point.
    pub refine: bool,
    /// Relative eigenvalue threshold used when counting the rank of `Sigma`.
    pub rank_tol: f64,
    /// Re-solve at `beta_opt` for the least-trace `W` with `tau` held at its optimum.
    pub tie_break: bool,
}

impl Default for DesignSettings {
    fn default() -> Self {
        DesignSettings {
            grid: BetaGrid::Points(50),
            eps_t: DEFAULT_EPS_T,
            solver: SolverSettings::default(),
            refine: false,
            rank_tol: 1e-5,
            tie_break: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Optimal,
    /// Solver stalled within 100 times its tolerance; the point is used.
    AlmostOptimal,
    Infeasible,
    Screened,
    Failed(SolveStatus),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub beta: f64,
    pub status: PointStatus,
    pub tau: Option<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    /// `lambda_2 / lambda_1` of `W`.
    pub ratio_w: f64,
    /// `lambda_2 / lambda_1` of `Sigma`.
    pub ratio_sigma: f64,
    pub rank_w: usize,
    pub rank_sigma: usize,
    pub w_flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignOutcome {
    pub feasible: bool,
    pub tau_opt: Option<f64>,
    pub beta_opt: Option<f64>,
    pub design: Option<TransmitDesign>,
    pub w_extracted: Option<CVec>,
    pub rank: Option<RankReport>,
    pub trace: Vec<TracePoint>,
    /// True when the design comes from the tie-break solve.
    pub tie_break: bool,
    pub wallclock_s: f64,
}

/// Result of one fixed-`beta` solve.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub point: TracePoint,
    pub solution: Option<P4Solution>,
}

/// Solves the relaxation at one `beta`, screening hopeless points first.
pub fn solve_point(params: &SystemParams, channels: &ChannelSet, beta: f64, settings: &DesignSettings) -> Result<PointResult> {
    if rate_screened(params, &channels.h, beta, settings.eps_t) {
        return Ok(PointResult {
            point: TracePoint { beta, status: PointStatus::Screened, tau: None, iterations: 0 },
            solution: None,
        });
    }
    let p4 = build_p4(params, channels, beta, settings.eps_t)?;
    let sol = solve(&p4.problem, &settings.solver)?;
    let status = match sol.status {
        SolveStatus::Optimal => PointStatus::Optimal,
        SolveStatus::AlmostOptimal => PointStatus::AlmostOptimal,
        SolveStatus::PrimalInfeasible => PointStatus::Infeasible,
        other => PointStatus::Failed(other),
    };
    let solution = match status {
        PointStatus::Optimal | PointStatus::AlmostOptimal => Some(map_solution(&sol, &p4.layout)?),
        _ => None,
    };
    Ok(PointResult {
        point: TracePoint { beta, status, tau: solution.as_ref().map(|s| s.tau), iterations: sol.iterations },
        solution,
    })
}

/// `sqrt(lambda_1) u_1` with the largest-magnitude entry made real and
/// nonnegative, plus `lambda_2 / lambda_1`.
pub fn extract_beamformer(w: &CMat) -> (CVec, f64) {
    let n = w.nrows();
    if n == 0 {
        return (DVector::zeros(0), 0.0);
    }
    let eig = w.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let l1 = eig.eigenvalues[order[0]];
    let l2 = if n > 1 { eig.eigenvalues[order[1]] } else { 0.0 };
    let ratio = if l1 > 0.0 { (l2.max(0.0)) / l1 } else { 0.0 };
    let mut u: CVec = eig.eigenvectors.column(order[0]).into_owned();
    let pivot = (0..n).max_by(|&a, &b| u[a].norm().total_cmp(&u[b].norm())).unwrap_or(0);
    if u[pivot].norm() > 0.0 {
        let phase = u[pivot].conj() / u[pivot].norm();
        u *= phase;
        u[pivot] = Complex64::new(u[pivot].re, 0.0);
    }
    (u * Complex64::new(l1.max(0.0).sqrt(), 0.0), ratio)
}

fn ratio_and_rank(m: &CMat, tol: f64) -> (f64, usize) {
    let ev = hermitian_eigenvalues(m);
    let l1 = ev.first().copied().unwrap_or(0.0);
    if l1 <= 0.0 {
        return (0.0, 0);
    }
    let l2 = ev.get(1).copied().unwrap_or(0.0).max(0.0);
    (l2 / l1, ev.iter().filter(|&&l| l > tol * l1).count())
}

pub fn rank_report(w: &CMat, sigma: &CMat, tol: f64) -> RankReport {
    let (ratio_w, rank_w) = ratio_and_rank(w, tol);
    let (ratio_sigma, rank_sigma) = ratio_and_rank(sigma, tol);
    RankReport { ratio_w, ratio_sigma, rank_w, rank_sigma, w_flagged: ratio_w > RANK_FLAG_RATIO }
}

/// Index of the largest `tau`; ties go to the smallest `beta`.
fn argmax(results: &[PointResult]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (j, r) in results.iter().enumerate() {
        if let Some(tau) = r.point.tau {
            let better = match best {
                None => true,
                Some(b) => {
                    let (bt, bb) = (results[b].point.tau.unwrap_or(f64::NEG_INFINITY), results[b].point.beta);
                    tau > bt || (tau == bt && r.point.beta < bb)
                }
            };
            if better {
                best = Some(j);
            }
        }
    }
    best
}

/// Runs the `beta` search and returns the best design found.
///
/// Grid points are solved in parallel on the current rayon pool and reduced
/// in grid order, so the outcome does not depend on the thread count.
pub fn design(params: &SystemParams, channels: &ChannelSet, settings: &DesignSettings) -> Result<DesignOutcome> {
    let start = std::time::Instant::now();
    params.validate()?;
    channels.check(params)?;
    settings.solver.validate()?;
    if !(settings.eps_t > 0.0 && settings.eps_t < 1.0) {
        return Err(invalid("eps_t must lie in (0, 1)"));
    }
    let (lo, hi) = beta_search_bounds(params, &channels.h, settings.eps_t);
    let betas = settings.grid.points(lo, hi)?;
    let mut results: Vec<PointResult> = betas
        .par_iter()
        .map(|&b| solve_point(params, channels, b, settings))
        .collect::<Result<_>>()?;

    let mut best = argmax(&results);
    if settings.refine {
        if let Some(j) = best {
            let a = if j > 0 { betas[j - 1] } else { betas[j] };
            let b = if j + 1 < betas.len() { betas[j + 1] } else { betas[j] };
            let extra = golden_section(params, channels, settings, a, b)?;
            let gain = extra.iter().any(|r| r.point.tau > results[j].point.tau);
            results.extend(extra);
            if gain {
                best = argmax(&results);
            }
        }
    }

    let trace: Vec<TracePoint> = results.iter().map(|r| r.point.clone()).collect();
    let Some(j) = best else {
        return Ok(DesignOutcome {
            feasible: false,
            tau_opt: None,
            beta_opt: None,
            design: None,
            w_extracted: None,
            rank: None,
            trace,
            tie_break: false,
            wallclock_s: start.elapsed().as_secs_f64(),
        });
    };
    let beta = results[j].point.beta;
    let first = results[j].solution.as_ref().expect("optimal point carries a solution");
    let mut sol = first;
    let second = if settings.tie_break { tie_break(params, channels, beta, first.tau, settings)? } else { None };
    let mut used = false;
    if let Some(s) = &second {
        if extract_beamformer(&s.w).1 < extract_beamformer(&first.w).1 {
            sol = s;
            used = true;
        }
    }
    let (w_ext, _) = extract_beamformer(&sol.w);
    let mut d = sol.design(settings.eps_t);
    d.w_opt = Some(w_ext.clone());
    Ok(DesignOutcome {
        feasible: true,
        tau_opt: Some(first.tau),
        beta_opt: Some(beta),
        rank: Some(rank_report(&sol.w, &sol.sigma, settings.rank_tol)),
        design: Some(d),
        w_extracted: Some(w_ext),
        trace,
        tie_break: used,
        wallclock_s: start.elapsed().as_secs_f64(),
    })
}

/// Least-trace `W` among the points of P4 at `beta` whose `tau` is within
/// [`TIE_BREAK_SLACK`] of `tau_opt`. `None` if that solve does not converge.
fn tie_break(
    params: &SystemParams,
    channels: &ChannelSet,
    beta: f64,
    tau_opt: f64,
    settings: &DesignSettings,
) -> Result<Option<P4Solution>> {
    let p4 = build_p4(params, channels, beta, settings.eps_t)?;
    let floor = tau_opt - TIE_BREAK_SLACK * tau_opt.abs().max(1.0);
    let p = min_trace_problem(&p4, floor)?;
    let sol = solve(&p.problem, &settings.solver)?;
    match sol.status {
        SolveStatus::Optimal | SolveStatus::AlmostOptimal => Ok(Some(map_solution(&sol, &p.layout)?)),
        _ => Ok(None),
    }
}

const GOLDEN_ITERS: usize = 20;

fn golden_section(
    params: &SystemParams,
    channels: &ChannelSet,
    settings: &DesignSettings,
    mut a: f64,
    mut b: f64,
) -> Result<Vec<PointResult>> {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let value = |p: &PointResult| p.point.tau.unwrap_or(f64::NEG_INFINITY);
    let mut out = Vec::new();
    if b - a <= 0.0 {
        return Ok(out);
    }
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = solve_point(params, channels, x1, settings)?;
    let mut f2 = solve_point(params, channels, x2, settings)?;
    for _ in 0..GOLDEN_ITERS {
        if value(&f1) >= value(&f2) {
            b = x2;
            x2 = x1;
            x1 = b - r * (b - a);
            let next = solve_point(params, channels, x1, settings)?;
            out.push(std::mem::replace(&mut f2, std::mem::replace(&mut f1, next)));
        } else {
            a = x1;
            x1 = x2;
            x2 = a + r * (b - a);
            let next = solve_point(params, channels, x2, settings)?;
            out.push(std::mem::replace(&mut f1, std::mem::replace(&mut f2, next)));
        }
    }
    out.push(f1);
    out.push(f2);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_points() {
        let p = BetaGrid::Points(5).points(1.0, 3.0).unwrap();
        assert_eq!(p, vec![1.0, 1.5, 2.0, 2.5, 3.0]);
        let s = BetaGrid::Step(0.5).points(1.0, 2.2).unwrap();
        assert_eq!(s, vec![1.0, 1.5, 2.0]);
        assert_eq!(BetaGrid::Points(1).points(1.0, 9.0).unwrap(), vec![1.0]);
        assert!(BetaGrid::Points(0).points(1.0, 2.0).is_err());
        assert!(BetaGrid::Step(-1.0).points(1.0, 2.0).is_err());
    }

    #[test]
    fn extraction_of_rank_one() {
        let v = DVector::from_vec(vec![Complex64::new(0.3, -0.4), Complex64::new(0.0, 1.2), Complex64::new(-0.5, 0.1)]);
        let w = &v * v.adjoint();
        let (x, ratio) = extract_beamformer(&w);
        assert!(ratio < 1e-12);
        assert!((&x * x.adjoint() - &w).norm() < 1e-12);
        // pivot is entry 1, which must come out real and nonnegative
        assert!(x[1].im.abs() < 1e-14 && x[1].re > 0.0);
        let r = rank_report(&w, &CMat::identity(3, 3), 1e-5);
        assert_eq!((r.rank_w, r.rank_sigma), (1, 3));
        assert!(!r.w_flagged);
        assert!((r.ratio_sigma - 1.0).abs() < 1e-12);
    }

    #[test]
    fn argmax_prefers_smallest_beta_on_ties() {
        let pt = |beta: f64, tau: Option<f64>| PointResult {
            point: TracePoint { beta, status: PointStatus::Optimal, tau, iterations: 0 },
            solution: None,
        };
        let rs = vec![pt(1.0, None), pt(2.0, Some(0.5)), pt(3.0, Some(0.5)), pt(4.0, Some(0.4))];
        assert_eq!(argmax(&rs), Some(1));
        assert_eq!(argmax(&rs[..1]), None);
    }
}
