//! Homogeneous self-dual interior-point method.
//!
//! Solves the embedding
//!
//! ```text
//! A'z + c tau = 0,   A x + s - b tau = 0,   c'x + b'z + kappa = 0,
//! s in K, z in K*, tau, kappa >= 0
//! ```
//!
//! with Nesterov-Todd scaling and a Mehrotra predictor-corrector. A solution
//! with `tau > 0` yields primal-dual optimal `(x, s, z) / tau`; `kappa > 0`
//! yields a certificate of primal or dual infeasibility.

use crate::cones::{add_identity, circ, max_step, min_eig, Kernel};
use crate::error::ConicError;
use crate::kkt::KktSystem;
use crate::problem::{Cone, ConicProblem};
use serde::{Deserialize, Serialize};

/// Fraction of the distance to the boundary taken by each combined step.
const STEP_FRACTION: f64 = 0.99;
/// Combined steps shorter than this are treated as a stall.
const MIN_STEP: f64 = 1e-10;
/// A best iterate within this factor of every tolerance is reported as
/// `AlmostOptimal` when the method stalls.
const REDUCED_FACTOR: f64 = 100.0;
/// Iterations without a better iterate before the method gives up.
const STALL_ITERS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    /// Stalled with residuals and gap within 100 times the tolerance.
    AlmostOptimal,
    PrimalInfeasible,
    DualInfeasible,
    MaxIterations,
    NumericalError,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::AlmostOptimal => "almost_optimal",
            SolveStatus::PrimalInfeasible => "primal_infeasible",
            SolveStatus::DualInfeasible => "dual_infeasible",
            SolveStatus::MaxIterations => "max_iterations",
            SolveStatus::NumericalError => "numerical_error",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Relative tolerance for residuals, gap and infeasibility certificates.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol: 1e-8,
            max_iter: 200,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<(), ConicError> {
        if !(1e-10..=1e-4).contains(&self.tol) {
            return Err(ConicError::Setting(format!("tol {} outside [1e-10, 1e-4]", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(ConicError::Setting("max_iter must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConicSolution {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub z: Vec<f64>,
    pub pobj: f64,
    pub dobj: f64,
    /// `|pobj - dobj| / max(1, min(|pobj|, |dobj|))`
    pub gap: f64,
    /// `||A x + s - b||`
    pub prim_res: f64,
    /// `||A' z + c||`
    pub dual_res: f64,
    pub iterations: usize,
    /// Primal infeasibility: `z` with `b'z = -1`, `A'z ~ 0`.
    /// Dual infeasibility: `x` with `c'x = -1`, `A x + s ~ 0` for some `s` in K.
    pub certificate: Option<Vec<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

struct Direction {
    dx: Vec<f64>,
    ds: Vec<f64>,
    dz: Vec<f64>,
    dtau: f64,
    dkappa: f64,
    /// `W^{-T} ds` and `W dz`, kept for the second-order correction.
    ds_scaled: Vec<f64>,
    w_dz: Vec<f64>,
}

struct Engine<'a> {
    p: &'a ConicProblem,
    offsets: Vec<usize>,
    kernels: Vec<Kernel>,
    kkt: KktSystem,
}

impl<'a> Engine<'a> {
    fn blocks(&self) -> impl Iterator<Item = (usize, Cone, std::ops::Range<usize>)> + '_ {
        self.p
            .cones
            .iter()
            .enumerate()
            .map(move |(k, c)| (k, *c, self.offsets[k]..self.offsets[k + 1]))
    }

    /// Shifts `v` into the interior of K (zero-cone blocks are left alone).
    fn shift_interior(&self, v: &mut [f64]) {
        let mut worst = f64::NEG_INFINITY;
        for (_, cone, r) in self.blocks() {
            if !matches!(cone, Cone::Zero(_)) {
                worst = worst.max(-min_eig(cone, &v[r]));
            }
        }
        if worst >= -1e-8 {
            for (_, cone, r) in self.blocks() {
                add_identity(cone, &mut v[r], 1.0 + worst);
            }
        }
    }

    fn step_length(&self, s: &[f64], z: &[f64], tau: f64, kappa: f64, d: &Direction) -> f64 {
        let mut a = f64::INFINITY;
        for (_, cone, r) in self.blocks() {
            if matches!(cone, Cone::Zero(_)) {
                continue;
            }
            a = a.min(max_step(cone, &s[r.clone()], &d.ds[r.clone()]));
            a = a.min(max_step(cone, &z[r.clone()], &d.dz[r]));
        }
        if d.dtau < 0.0 {
            a = a.min(-tau / d.dtau);
        }
        if d.dkappa < 0.0 {
            a = a.min(-kappa / d.dkappa);
        }
        a
    }

    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        eta: f64,
        rhs_s: &[f64],
        rhs_k: f64,
        res: &Residuals,
        tau: f64,
        kappa: f64,
        x1: &[f64],
        z1: &[f64],
    ) -> Direction {
        let m = self.p.num_rows();
        let n = self.p.num_vars;
        let mut u = vec![0.0; m];
        let mut wtu = vec![0.0; m];
        for (k, _, r) in self.blocks() {
            let ker = &self.kernels[k];
            ker.lambda_inv_circ(&rhs_s[r.clone()], &mut u[r.clone()]);
            ker.wt_mul(&u[r.clone()], &mut wtu[r]);
        }
        let r1: Vec<f64> = res.rx.iter().map(|v| -eta * v).collect();
        let r2: Vec<f64> = (0..m).map(|i| -eta * res.rz[i] - wtu[i]).collect();
        let (x2, z2) = self.kkt.solve(&self.kernels, &r1, &r2);
        let c = &self.p.c;
        let b = &self.p.b;
        let num = -eta * res.rt - dot(c, &x2) - dot(b, &z2) - rhs_k / tau;
        let den = dot(c, x1) + dot(b, z1) - kappa / tau;
        let dtau = num / den;
        let dx: Vec<f64> = (0..n).map(|i| x2[i] + dtau * x1[i]).collect();
        let dz: Vec<f64> = (0..m).map(|i| z2[i] + dtau * z1[i]).collect();
        let mut w_dz = vec![0.0; m];
        let mut ds_scaled = vec![0.0; m];
        let mut ds = vec![0.0; m];
        for (k, _, r) in self.blocks() {
            let ker = &self.kernels[k];
            if ker.is_zero() {
                continue;
            }
            ker.w_mul(&dz[r.clone()], &mut w_dz[r.clone()]);
            for i in r.clone() {
                ds_scaled[i] = u[i] - w_dz[i];
            }
            ker.wt_mul(&ds_scaled[r.clone()], &mut ds[r]);
        }
        let dkappa = (rhs_k - kappa * dtau) / tau;
        Direction {
            dx,
            ds,
            dz,
            dtau,
            dkappa,
            ds_scaled,
            w_dz,
        }
    }
}

struct Residuals {
    rx: Vec<f64>,
    rz: Vec<f64>,
    rt: f64,
}

/// Solves `min c'x s.t. b - A x in K`.
pub fn solve(p: &ConicProblem, settings: &SolverSettings) -> Result<ConicSolution, ConicError> {
    p.validate()?;
    settings.validate()?;
    let n = p.num_vars;
    let m = p.num_rows();
    let tol = settings.tol;
    let degree: usize = p.cones.iter().map(Cone::degree).sum();
    let nb = norm(&p.b);
    let nc = norm(&p.c);

    let mut eng = Engine {
        p,
        offsets: p.cone_offsets(),
        kernels: p.cones.iter().map(|c| Kernel::new(*c)).collect(),
        kkt: KktSystem::new(p),
    };
    let zero_rows: Vec<usize> = eng
        .blocks()
        .filter(|(_, c, _)| matches!(c, Cone::Zero(_)))
        .flat_map(|(_, _, r)| r)
        .collect();

    let fail = |status, x: Vec<f64>, s: Vec<f64>, z: Vec<f64>, iters| ConicSolution {
        status,
        x,
        s,
        z,
        pobj: f64::NAN,
        dobj: f64::NAN,
        gap: f64::INFINITY,
        prim_res: f64::INFINITY,
        dual_res: f64::INFINITY,
        iterations: iters,
        certificate: None,
    };

    // Starting point from two least-squares solves with identity scaling.
    if eng.kkt.factor(&eng.kernels).is_err() {
        return Ok(fail(SolveStatus::NumericalError, vec![0.0; n], vec![0.0; m], vec![0.0; m], 0));
    }
    let (mut x, neg_s) = eng.kkt.solve(&eng.kernels, &vec![0.0; n], &p.b);
    let mut s: Vec<f64> = neg_s.iter().map(|v| -v).collect();
    for &i in &zero_rows {
        s[i] = 0.0;
    }
    let neg_c: Vec<f64> = p.c.iter().map(|v| -v).collect();
    let (_, mut z) = eng.kkt.solve(&eng.kernels, &neg_c, &vec![0.0; m]);
    eng.shift_interior(&mut s);
    eng.shift_interior(&mut z);
    let mut tau = 1.0;
    let mut kappa = 1.0;

    let mut iter = 0;
    let mut best: Option<(f64, usize, ConicSolution)> = None;
    loop {
        let atz = p.at_mul(&z);
        let ax = p.a_mul(&x);
        let res = Residuals {
            rx: (0..n).map(|i| atz[i] + p.c[i] * tau).collect(),
            rz: (0..m).map(|i| ax[i] + s[i] - p.b[i] * tau).collect(),
            rt: dot(&p.c, &x) + dot(&p.b, &z) + kappa,
        };
        let mu = (dot(&s, &z) + tau * kappa) / (degree as f64 + 1.0);

        let prim_res = norm(&res.rz) / tau;
        let dual_res = norm(&res.rx) / tau;
        let cx = dot(&p.c, &x);
        let bz = dot(&p.b, &z);
        let pobj = cx / tau;
        let dobj = -bz / tau;
        let gap = (pobj - dobj).abs() / pobj.abs().min(dobj.abs()).max(1.0);

        let finish = |status, certificate| {
            let inv = 1.0 / tau;
            ConicSolution {
                status,
                x: x.iter().map(|v| v * inv).collect(),
                s: s.iter().map(|v| v * inv).collect(),
                z: z.iter().map(|v| v * inv).collect(),
                pobj,
                dobj,
                gap,
                prim_res,
                dual_res,
                iterations: iter,
                certificate,
            }
        };

        let merit = (prim_res / (1.0 + nb)).max(dual_res / (1.0 + nc)).max(gap) / tol;
        if merit <= 1.0 {
            return Ok(finish(SolveStatus::Optimal, None));
        }
        if merit.is_finite() && merit <= REDUCED_FACTOR && best.as_ref().is_none_or(|b| merit < b.0) {
            best = Some((merit, iter, finish(SolveStatus::AlmostOptimal, None)));
        }
        let stalled = best.as_ref().is_some_and(|b| iter >= b.1 + STALL_ITERS);
        let mut give_up = |status| match best.take() {
            Some((_, _, sol)) => sol,
            None => finish(status, None),
        };
        if bz < 0.0 && norm(&atz) <= tol * -bz {
            let cert = z.iter().map(|v| v / -bz).collect();
            return Ok(finish(SolveStatus::PrimalInfeasible, Some(cert)));
        }
        if cx < 0.0 {
            let axs: Vec<f64> = (0..m).map(|i| ax[i] + s[i]).collect();
            if norm(&axs) <= tol * -cx {
                let cert = x.iter().map(|v| v / -cx).collect();
                return Ok(finish(SolveStatus::DualInfeasible, Some(cert)));
            }
        }
        if iter >= settings.max_iter || stalled {
            return Ok(give_up(SolveStatus::MaxIterations));
        }
        if !(mu.is_finite() && tau.is_finite() && kappa.is_finite()) {
            return Ok(give_up(SolveStatus::NumericalError));
        }

        let mut scaled_ok = true;
        for (k, _, r) in eng.blocks().collect::<Vec<_>>() {
            if eng.kernels[k].update(&s[r.clone()], &z[r]).is_err() {
                scaled_ok = false;
                break;
            }
        }
        if !scaled_ok || eng.kkt.factor(&eng.kernels).is_err() {
            return Ok(give_up(SolveStatus::NumericalError));
        }
        let (x1, z1) = eng.kkt.solve(&eng.kernels, &neg_c, &p.b);

        // predictor
        let mut lam_sq = vec![0.0; m];
        for (k, cone, r) in eng.blocks() {
            let lam = eng.kernels[k].lambda();
            circ(cone, lam, lam, &mut lam_sq[r]);
        }
        let rhs_aff: Vec<f64> = lam_sq.iter().map(|v| -v).collect();
        let aff = eng.direction(1.0, &rhs_aff, -tau * kappa, &res, tau, kappa, &x1, &z1);
        let alpha_aff = eng.step_length(&s, &z, tau, kappa, &aff).min(1.0);
        let sigma = (1.0 - alpha_aff).powi(3).clamp(0.0, 1.0);

        // corrector
        let mut rhs = rhs_aff;
        let mut corr = vec![0.0; m];
        for (_, cone, r) in eng.blocks() {
            circ(cone, &aff.ds_scaled[r.clone()], &aff.w_dz[r.clone()], &mut corr[r.clone()]);
            let mut e = vec![0.0; r.len()];
            add_identity(cone, &mut e, sigma * mu);
            for (j, i) in r.enumerate() {
                rhs[i] += e[j] - corr[i];
            }
        }
        let rhs_k = -tau * kappa + sigma * mu - aff.dtau * aff.dkappa;
        let dir = eng.direction(1.0 - sigma, &rhs, rhs_k, &res, tau, kappa, &x1, &z1);
        let alpha = (STEP_FRACTION * eng.step_length(&s, &z, tau, kappa, &dir)).min(1.0);
        if !(alpha.is_finite() && alpha > MIN_STEP) {
            return Ok(give_up(SolveStatus::NumericalError));
        }

        for i in 0..n {
            x[i] += alpha * dir.dx[i];
        }
        for i in 0..m {
            s[i] += alpha * dir.ds[i];
            z[i] += alpha * dir.dz[i];
        }
        for &i in &zero_rows {
            s[i] = 0.0;
        }
        tau += alpha * dir.dtau;
        kappa += alpha * dir.dkappa;
        iter += 1;
    }
}
