//! Independent recomputation of residuals and cone memberships.

use crate::cones::min_eig;
use crate::problem::{Cone, ConicProblem};
use crate::solver::{ConicSolution, SolveStatus};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateMargins {
    /// `||A x + s - b||`
    pub prim_res: f64,
    /// `||A' z + c||`
    pub dual_res: f64,
    pub pobj: f64,
    pub dobj: f64,
    /// `|pobj - dobj| / max(1, min(|pobj|, |dobj|))`
    pub gap: f64,
    /// Largest amount by which `s` leaves K (0 when inside).
    pub s_cone_violation: f64,
    /// Largest amount by which `z` leaves K* (0 when inside).
    pub z_cone_violation: f64,
    /// For infeasibility certificates: `||A'y||` (primal) or `||A d + s_d||`
    /// (dual, with the best cone slack); `None` otherwise.
    pub farkas_residual: Option<f64>,
    /// `b'y` for a primal certificate or `c'd` for a dual one (should be -1).
    pub farkas_objective: Option<f64>,
    pub farkas_cone_violation: Option<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cone violation of `v`, treating zero cones as `{0}` when `primal` and as
/// the whole space otherwise.
fn violation(p: &ConicProblem, v: &[f64], primal: bool) -> f64 {
    let offs = p.cone_offsets();
    let mut worst: f64 = 0.0;
    for (k, cone) in p.cones.iter().enumerate() {
        let blk = &v[offs[k]..offs[k + 1]];
        let viol = match cone {
            Cone::Zero(_) if primal => blk.iter().fold(0.0, |a: f64, x| a.max(x.abs())),
            Cone::Zero(_) => 0.0,
            c => (-min_eig(*c, blk)).max(0.0),
        };
        worst = worst.max(viol);
    }
    worst
}

/// Recomputes every residual of `sol` from the problem data alone.
pub fn check_certificate(p: &ConicProblem, sol: &ConicSolution) -> CertificateMargins {
    let ax = p.a_mul(&sol.x);
    let atz = p.at_mul(&sol.z);
    let rz: Vec<f64> = (0..p.num_rows()).map(|i| ax[i] + sol.s[i] - p.b[i]).collect();
    let rx: Vec<f64> = (0..p.num_vars).map(|i| atz[i] + p.c[i]).collect();
    let pobj = dot(&p.c, &sol.x);
    let dobj = -dot(&p.b, &sol.z);
    let gap = (pobj - dobj).abs() / pobj.abs().min(dobj.abs()).max(1.0);
    let mut out = CertificateMargins {
        prim_res: norm(&rz),
        dual_res: norm(&rx),
        pobj,
        dobj,
        gap,
        s_cone_violation: violation(p, &sol.s, true),
        z_cone_violation: violation(p, &sol.z, false),
        farkas_residual: None,
        farkas_objective: None,
        farkas_cone_violation: None,
    };
    match (sol.status, &sol.certificate) {
        (SolveStatus::PrimalInfeasible, Some(y)) => {
            out.farkas_residual = Some(norm(&p.at_mul(y)));
            out.farkas_objective = Some(dot(&p.b, y));
            out.farkas_cone_violation = Some(violation(p, y, false));
        }
        (SolveStatus::DualInfeasible, Some(d)) => {
            // best slack: s_d = -A d, measured by its cone violation
            let sd: Vec<f64> = p.a_mul(d).iter().map(|v| -v).collect();
            out.farkas_residual = Some(0.0);
            out.farkas_objective = Some(dot(&p.c, d));
            out.farkas_cone_violation = Some(violation(p, &sd, true));
        }
        _ => {}
    }
    out
}
