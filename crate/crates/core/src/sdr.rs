//! Conic form of the relaxed problem for a fixed `beta`.
//!
//! Variables, in order: `svec(W)`, `svec(Sigma)`, `t`, `tau`, `omega_1..K`,
//! `mu_1..K`, `delta_1..M`. Hermitian matrices use the complex svec of
//! [`swipt_conic::field`] (`Nt^2` real coordinates) and every LMI is a native
//! Hermitian PSD block, so reported block sides are the complex sides.
//!
//! Cone order: one nonnegative block holding the rate constraint, the power
//! cap, `t - 1 - eps_t`, `u`, then `omega`, `mu`, `delta`; one second-order
//! cone for `u (t - 1) >= psi_s / eta`; then the PSD blocks `W`, `Sigma`,
//! K eavesdropper-SINR LMIs, M interference LMIs and K energy LMIs.
//! The energy LMIs carry the nominal `g_k` in both off-diagonal blocks.

use crate::channels::{CVec, ChannelSet};
use crate::error::{invalid, Result, SwiptError};
use crate::model::{CMat, TransmitDesign};
use crate::params::SystemParams;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::ops::Range;
use swipt_conic::field::{hermitize, smat, svec, svec_dim};
use swipt_conic::{Cone, ConicProblem, ConicSolution, SolveStatus, Triplet};

pub const DEFAULT_EPS_T: f64 = 1e-6;

/// Index map of the decision vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub nt: usize,
    pub w: Range<usize>,
    pub sigma: Range<usize>,
    pub t: usize,
    pub tau: usize,
    pub omega: Range<usize>,
    pub mu: Range<usize>,
    pub delta: Range<usize>,
    pub num_vars: usize,
}

impl Layout {
    pub fn new(nt: usize, k: usize, m: usize) -> Self {
        let d = svec_dim(nt, true);
        let w = 0..d;
        let sigma = d..2 * d;
        let t = 2 * d;
        let tau = t + 1;
        let omega = tau + 1..tau + 1 + k;
        let mu = omega.end..omega.end + k;
        let delta = mu.end..mu.end + m;
        let num_vars = delta.end;
        Layout { nt, w, sigma, t, tau, omega, mu, delta, num_vars }
    }

    /// Writes a solution back into a decision vector.
    pub fn embed(&self, sol: &P4Solution) -> Vec<f64> {
        let mut x = vec![0.0; self.num_vars];
        x[self.w.clone()].copy_from_slice(&svec(&sol.w));
        x[self.sigma.clone()].copy_from_slice(&svec(&sol.sigma));
        x[self.t] = sol.t;
        x[self.tau] = sol.tau;
        x[self.omega.clone()].copy_from_slice(&sol.omega);
        x[self.mu.clone()].copy_from_slice(&sol.mu);
        x[self.delta.clone()].copy_from_slice(&sol.delta);
        x
    }

    /// Reads a decision vector; matrices are re-Hermitized.
    pub fn extract(&self, x: &[f64]) -> P4Solution {
        P4Solution {
            w: hermitize(&smat(&x[self.w.clone()], self.nt)),
            sigma: hermitize(&smat(&x[self.sigma.clone()], self.nt)),
            t: x[self.t],
            tau: x[self.tau],
            omega: x[self.omega.clone()].to_vec(),
            mu: x[self.mu.clone()].to_vec(),
            delta: x[self.delta.clone()].to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct P4Solution {
    pub w: CMat,
    pub sigma: CMat,
    pub t: f64,
    pub tau: f64,
    pub omega: Vec<f64>,
    pub mu: Vec<f64>,
    pub delta: Vec<f64>,
}

impl P4Solution {
    /// Design with `rho = 1/t` clamped into `[eps, 1 - eps]`.
    pub fn design(&self, eps: f64) -> TransmitDesign {
        TransmitDesign {
            w: self.w.clone(),
            sigma: self.sigma.clone(),
            rho: (1.0 / self.t).clamp(eps, 1.0 - eps),
            w_opt: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct P4Problem {
    pub problem: ConicProblem,
    pub layout: Layout,
    pub beta: f64,
}

/// `[1, 1 + P_th ||h||^2 / sigma_sp^2]`.
pub fn beta_bounds(params: &SystemParams, h: &CVec) -> (f64, f64) {
    (1.0, 1.0 + params.p_th * h.norm_squared() / params.sigma_sp2)
}

/// Part of [`beta_bounds`] that can satisfy the rate constraint for some
/// `R_min >= 0`: `1 + SINR_s <= 1 + P_th ||h||^2 / (sigma_s^2 + sigma_sp^2 t)`
/// with `t >= 1 + eps_t`. Independent of `R_min`, `K` and the uncertainty
/// radii, so sweeps over those share one grid.
pub fn beta_search_bounds(params: &SystemParams, h: &CVec, eps_t: f64) -> (f64, f64) {
    let (lo, hi) = beta_bounds(params, h);
    let cap = 1.0 + params.p_th * h.norm_squared() / (params.sigma_s2 + params.sigma_sp2 * (1.0 + eps_t));
    (lo, hi.min(cap))
}

/// True when the rate constraint cannot hold at `beta`: with `t >= 1 + eps_t`
/// and `Tr(W H) <= P_th ||h||^2` it needs
/// `(2^R_min beta - 1)(sigma_s^2 + sigma_sp^2 (1 + eps_t)) <= P_th ||h||^2`.
pub fn rate_screened(params: &SystemParams, h: &CVec, beta: f64, eps_t: f64) -> bool {
    let need = (params.r_min.exp2() * beta - 1.0) * (params.sigma_s2 + params.sigma_sp2 * (1.0 + eps_t));
    need > params.p_th * h.norm_squared() * (1.0 + 1e-9)
}

struct Rows {
    a: Vec<Triplet>,
    b: Vec<f64>,
    cones: Vec<Cone>,
}

impl Rows {
    /// Appends rows `s = b0 + sum_j x_j coef_j` for one cone.
    fn push(&mut self, cone: Cone, b0: Vec<f64>, cols: &[(usize, Vec<f64>)]) {
        let row0 = self.b.len();
        debug_assert_eq!(b0.len(), cone.dim());
        for (col, coef) in cols {
            debug_assert_eq!(coef.len(), b0.len());
            for (i, v) in coef.iter().enumerate() {
                if *v != 0.0 {
                    self.a.push(Triplet { row: row0 + i, col: *col, val: -v });
                }
            }
        }
        self.b.extend(b0);
        self.cones.push(cone);
    }

    /// Appends one nonnegative cone, one row per `(b0, coefficients)`.
    fn push_scalars(&mut self, scalars: Vec<(f64, Vec<(usize, f64)>)>) {
        let n = scalars.len();
        for (b0, cols) in scalars {
            let row = self.b.len();
            for (col, v) in cols {
                if v != 0.0 {
                    self.a.push(Triplet { row, col, val: -v });
                }
            }
            self.b.push(b0);
        }
        self.cones.push(Cone::NonNeg(n));
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `[X, X g; g^H X, g^H X g]`
fn lift(x: &CMat, g: &CVec) -> CMat {
    let n = x.nrows();
    let xg = x * g;
    let mut out = CMat::zeros(n + 1, n + 1);
    out.view_mut((0, 0), (n, n)).copy_from(x);
    for i in 0..n {
        out[(i, n)] = xg[i];
        out[(n, i)] = xg[i].conj();
    }
    out[(n, n)] = g.dotc(&xg);
    out
}

/// `diag(1, .., 1, -xi^2)` of side `n + 1`.
fn ball_multiplier(n: usize, xi: f64) -> Vec<f64> {
    let mut m = CMat::identity(n + 1, n + 1);
    m[(n, n)] = c(-xi * xi);
    svec(&m)
}

fn corner(n: usize, v: f64) -> Vec<f64> {
    let mut m = CMat::zeros(n + 1, n + 1);
    m[(n, n)] = c(v);
    svec(&m)
}

fn scaled(v: &[f64], f: f64) -> Vec<f64> {
    v.iter().map(|x| x * f).collect()
}

/// Builds the conic program for fixed `beta` (maximize `tau`, posed as
/// minimizing `-tau`).
pub fn build_p4(params: &SystemParams, channels: &ChannelSet, beta: f64, eps_t: f64) -> Result<P4Problem> {
    params.validate()?;
    channels.check(params)?;
    let (lo, hi) = beta_bounds(params, &channels.h);
    if !(beta.is_finite() && beta >= lo && beta <= hi * (1.0 + 1e-12)) {
        return Err(invalid(format!("beta {beta} outside [{lo}, {hi}]")));
    }
    if !(eps_t > 0.0) {
        return Err(invalid("eps_t must be positive"));
    }
    let n = params.nt;
    let k = params.num_ehr;
    let m = params.num_pu;
    let layout = Layout::new(n, k, m);
    let d = svec_dim(n, true);
    let basis: Vec<CMat> = (0..d)
        .map(|p| {
            let mut e = vec![0.0; d];
            e[p] = 1.0;
            smat(&e, n)
        })
        .collect();
    let h = &channels.h;
    let hh = svec(&(h * h.adjoint()));
    let eye = svec(&CMat::identity(n, n));
    let kappa = 1.0 - params.r_min.exp2() * beta;
    let psi = params.psi_s / params.eta;
    let wcol = |p: usize| layout.w.start + p;
    let scol = |p: usize| layout.sigma.start + p;

    let mut rows = Rows { a: Vec::new(), b: Vec::new(), cones: Vec::new() };

    // nonnegative block
    let mut scalars: Vec<(f64, Vec<(usize, f64)>)> = Vec::new();
    // rate: Tr(W H) + kappa (Tr(Sigma H) + sigma_s^2 + sigma_sp^2 t) >= 0
    let mut cols = Vec::new();
    for p in 0..d {
        cols.push((wcol(p), hh[p]));
        cols.push((scol(p), kappa * hh[p]));
    }
    cols.push((layout.t, kappa * params.sigma_sp2));
    scalars.push((kappa * params.sigma_s2, cols));
    // power: P_th - Tr(W) - Tr(Sigma) >= 0
    let mut cols = Vec::new();
    for p in 0..d {
        cols.push((wcol(p), -eye[p]));
        cols.push((scol(p), -eye[p]));
    }
    scalars.push((params.p_th, cols));
    scalars.push((-1.0 - eps_t, vec![(layout.t, 1.0)]));
    // u = Tr((W + Sigma) H) + sigma_s^2 - psi_s/eta >= 0
    let u0 = params.sigma_s2 - psi.max(0.0);
    let mut cols = Vec::new();
    for p in 0..d {
        cols.push((wcol(p), hh[p]));
        cols.push((scol(p), hh[p]));
    }
    scalars.push((u0, cols));
    for j in layout.omega.clone().chain(layout.mu.clone()).chain(layout.delta.clone()) {
        scalars.push((0.0, vec![(j, 1.0)]));
    }
    rows.push_scalars(scalars);

    // u (t - 1) >= psi as ||(2 sqrt(psi), u - v)|| <= u + v with v = t - 1
    if psi > 0.0 {
        let mut cols: Vec<(usize, Vec<f64>)> = Vec::new();
        for p in 0..d {
            let v = vec![hh[p], 0.0, hh[p]];
            cols.push((wcol(p), v.clone()));
            cols.push((scol(p), v));
        }
        cols.push((layout.t, vec![1.0, 0.0, -1.0]));
        rows.push(Cone::SecondOrder(3), vec![u0 - 1.0, 2.0 * psi.sqrt(), u0 + 1.0], &cols);
    }

    // W, Sigma >= 0
    let ident_cols = |start: usize| -> Vec<(usize, Vec<f64>)> {
        (0..d)
            .map(|p| {
                let mut e = vec![0.0; d];
                e[p] = 1.0;
                (start + p, e)
            })
            .collect()
    };
    rows.push(Cone::HermitianPsd(n), vec![0.0; d], &ident_cols(layout.w.start));
    rows.push(Cone::HermitianPsd(n), vec![0.0; d], &ident_cols(layout.sigma.start));

    let lifted = |g: &CVec| -> Vec<Vec<f64>> { basis.iter().map(|bp| svec(&lift(bp, g))).collect() };
    let lifts_g: Vec<Vec<Vec<f64>>> = channels.g_bar.iter().map(lifted).collect();

    // eavesdropper SINR: omega E - lift(W - (beta - 1) Sigma) + (beta - 1) sigma_e^2 e e'
    for kk in 0..k {
        let mut cols = Vec::with_capacity(2 * d + 1);
        for p in 0..d {
            cols.push((wcol(p), scaled(&lifts_g[kk][p], -1.0)));
            cols.push((scol(p), scaled(&lifts_g[kk][p], beta - 1.0)));
        }
        cols.push((layout.omega.start + kk, ball_multiplier(n, params.xi_e[kk])));
        rows.push(Cone::HermitianPsd(n + 1), corner(n, (beta - 1.0) * params.sigma_e2), &cols);
    }
    // interference: delta E - lift(W + Sigma) + P_In e e'
    for i in 0..m {
        let lq = lifted(&channels.q_bar[i]);
        let mut cols = Vec::with_capacity(2 * d + 1);
        for p in 0..d {
            cols.push((wcol(p), scaled(&lq[p], -1.0)));
            cols.push((scol(p), scaled(&lq[p], -1.0)));
        }
        cols.push((layout.delta.start + i, ball_multiplier(n, params.xi_p[i])));
        rows.push(Cone::HermitianPsd(n + 1), corner(n, params.p_in[i]), &cols);
    }
    // energy: mu E + lift(W + Sigma) + (sigma_e^2 - tau / eta) e e'
    for kk in 0..k {
        let mut cols = Vec::with_capacity(2 * d + 2);
        for p in 0..d {
            cols.push((wcol(p), lifts_g[kk][p].clone()));
            cols.push((scol(p), lifts_g[kk][p].clone()));
        }
        cols.push((layout.mu.start + kk, ball_multiplier(n, params.xi_e[kk])));
        cols.push((layout.tau, corner(n, -1.0 / params.eta)));
        rows.push(Cone::HermitianPsd(n + 1), corner(n, params.sigma_e2), &cols);
    }

    let mut cvec = vec![0.0; layout.num_vars];
    cvec[layout.tau] = -1.0;
    let problem = ConicProblem {
        num_vars: layout.num_vars,
        c: cvec,
        a: rows.a,
        b: rows.b,
        cones: rows.cones,
    };
    problem.validate()?;
    Ok(P4Problem { problem, layout, beta })
}

/// Extracts primal variables from an optimal solution.
pub fn map_solution(sol: &ConicSolution, layout: &Layout) -> Result<P4Solution> {
    if !matches!(sol.status, SolveStatus::Optimal | SolveStatus::AlmostOptimal) {
        return Err(SwiptError::Status(sol.status));
    }
    Ok(layout.extract(&sol.x))
}

/// P4 with `tau >= tau_floor` appended and objective `min tr(W)`.
///
/// When the secrecy constraints are slack the optimal `W` of P4 is not
/// unique, and an interior-point method returns a high-rank point of the
/// optimal face. This problem picks the least-power beam on that face.
pub fn min_trace_problem(p4: &P4Problem, tau_floor: f64) -> Result<P4Problem> {
    if !tau_floor.is_finite() {
        return Err(invalid("tau floor must be finite"));
    }
    let mut problem = p4.problem.clone();
    let row = problem.num_rows();
    problem.a.push(Triplet { row, col: p4.layout.tau, val: -1.0 });
    problem.b.push(-tau_floor);
    problem.cones.push(Cone::NonNeg(1));
    problem.c = vec![0.0; problem.num_vars];
    let trace = svec(&CMat::identity(p4.layout.nt, p4.layout.nt));
    for (i, v) in p4.layout.w.clone().zip(trace) {
        problem.c[i] = v;
    }
    Ok(P4Problem { problem, layout: p4.layout.clone(), beta: p4.beta })
}
