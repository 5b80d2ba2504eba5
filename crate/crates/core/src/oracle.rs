//! Exact worst cases of quadratic forms over complex Euclidean balls.
//!
//! For a Hermitian `A`, nominal vector `g` and radius `xi`, the extremum of
//! `(g + d)^H A (g + d)` over `||d|| <= xi` is a trust-region subproblem. It is
//! solved through a full eigendecomposition: with `B = +-A` (so the problem is
//! always a minimization) and `b = B g`, optimal `d` and multiplier `nu` obey
//!
//! ```text
//! (B + nu I) d = -b,   B + nu I >= 0,   nu >= 0,   nu (xi - ||d||) = 0
//! ```
//!
//! The boundary root of `||d(nu)|| = xi` is found by safeguarded Newton on
//! `1/xi - 1/||d(nu)||`; the hard case (no weight of `b` on the bottom
//! eigenspace) is completed with a bottom eigenvector.

use crate::channels::{CVec, ChannelSet};
use crate::error::{invalid, Result};
use crate::model::{quad_form, su_capacity, harvested_energy_su, CMat, TransmitDesign};
use crate::params::SystemParams;
use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Min,
    Max,
}

impl Sense {
    fn sign(self) -> f64 {
        match self {
            Sense::Min => 1.0,
            Sense::Max => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticBallExtremum {
    pub value: f64,
    pub delta_star: CVec,
    pub multiplier: f64,
    pub hard_case: bool,
    /// `||(B + nu I) d + B g||` with `B = A` (min) or `-A` (max).
    pub kkt_residual: f64,
    /// `nu (xi - ||d||)`
    pub complementarity: f64,
}

const SINR_TOL: f64 = 1e-8;
const MAX_BISECTIONS: usize = 200;

fn herm_eig(a: &CMat) -> (Vec<f64>, CMat) {
    let e = a.clone().symmetric_eigen();
    (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
}

/// Exact minimum or maximum of `(g + d)^H A (g + d)` over `||d|| <= xi`.
pub fn extremize_quadratic_over_ball(a: &CMat, g_bar: &CVec, xi: f64, sense: Sense) -> Result<QuadraticBallExtremum> {
    let n = g_bar.len();
    if a.nrows() != n || a.ncols() != n {
        return Err(invalid("matrix and vector sizes differ"));
    }
    if !(xi.is_finite() && xi >= 0.0) {
        return Err(invalid(format!("radius {xi} must be finite and nonnegative")));
    }
    if crate::model::max_asymmetry(a) > 1e-10 * (1.0 + a.norm()) {
        return Err(invalid("matrix is not Hermitian"));
    }
    let a_h = (a + a.adjoint()) * Complex64::new(0.5, 0.0);
    if xi == 0.0 {
        return Ok(QuadraticBallExtremum {
            value: quad_form(&a_h, g_bar),
            delta_star: DVector::zeros(n),
            multiplier: 0.0,
            hard_case: false,
            kkt_residual: 0.0,
            complementarity: 0.0,
        });
    }
    let s = sense.sign();
    let b_mat = &a_h * Complex64::new(s, 0.0);
    let (lam, u) = herm_eig(&b_mat);
    let b = &b_mat * g_bar;
    let beta: Vec<Complex64> = (0..n).map(|i| u.column(i).dotc(&b)).collect();
    let lmin = lam.iter().copied().fold(f64::INFINITY, f64::min);
    let lmax_abs = lam.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let bnorm = beta.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let eig_tol = 1e-12 * (1.0 + lmax_abs);
    let beta_tol = 1e-12 * (1.0 + bnorm);

    // d_i(nu) = -beta_i / (lam_i + nu), skipping coordinates flagged in `skip`
    let coords = |nu: f64, skip: &dyn Fn(usize) -> bool| -> Vec<Complex64> {
        (0..n)
            .map(|i| {
                if skip(i) {
                    Complex64::new(0.0, 0.0)
                } else {
                    -beta[i] / (lam[i] + nu)
                }
            })
            .collect()
    };
    let norm = |v: &[Complex64]| v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();

    let lo = (-lmin).max(0.0);
    let bottom = |i: usize| lam[i] + lo <= eig_tol;
    let bottom_weight = (0..n).filter(|&i| bottom(i)).map(|i| beta[i].norm_sqr()).sum::<f64>().sqrt();

    let (nu, mut dt, hard_case) = if bottom_weight <= beta_tol {
        // b has (numerically) no weight on the bottom eigenspace: d(lo) is finite
        let d_lo = coords(lo, &bottom);
        let r = norm(&d_lo);
        if r <= xi {
            let mut d = d_lo;
            let mut hard = false;
            if lo > 0.0 {
                // complete to the boundary along a bottom eigenvector
                let i = (0..n).find(|&i| bottom(i)).unwrap_or(0);
                d[i] = Complex64::new((xi * xi - r * r).max(0.0).sqrt(), 0.0);
                hard = true;
            }
            (lo, d, hard)
        } else {
            let nu = secular_root(&lam, &beta, xi, lo, bnorm);
            (nu, coords(nu, &|_| false), false)
        }
    } else {
        let nu = secular_root(&lam, &beta, xi, lo, bnorm);
        (nu, coords(nu, &|_| false), false)
    };
    let r = norm(&dt);
    if r > xi {
        let f = xi / r;
        dt.iter_mut().for_each(|c| *c *= f);
    }
    let d: CVec = &u * DVector::from_vec(dt);
    let x = g_bar + &d;
    let value = quad_form(&a_h, &x);
    let resid = (&b_mat * &d + &d * Complex64::new(nu, 0.0) + &b).norm();
    Ok(QuadraticBallExtremum {
        value,
        complementarity: nu * (xi - d.norm()),
        delta_star: d,
        multiplier: nu,
        hard_case,
        kkt_residual: resid,
    })
}

/// Root of `||d(nu)|| = xi` to the right of `lo`.
fn secular_root(lam: &[f64], beta: &[Complex64], xi: f64, lo: f64, bnorm: f64) -> f64 {
    let lmin = lam.iter().copied().fold(f64::INFINITY, f64::min);
    let phi = |nu: f64| -> (f64, f64) {
        let mut s = 0.0;
        let mut ds = 0.0;
        for (l, b) in lam.iter().zip(beta) {
            let den = l + nu;
            let w = b.norm_sqr();
            s += w / (den * den);
            ds += -2.0 * w / (den * den * den);
        }
        (s.sqrt(), ds)
    };
    let mut a = lo;
    let mut b = (bnorm / xi - lmin).max(lo);
    if phi(b).0 > xi {
        // widen until the norm drops below xi
        let mut step = b - lo + 1.0;
        while phi(b).0 > xi {
            b += step;
            step *= 2.0;
        }
    }
    let mut nu = b;
    for _ in 0..200 {
        let (p, ds) = phi(nu);
        if !p.is_finite() {
            a = nu;
            nu = 0.5 * (a + b);
            continue;
        }
        if p > xi {
            a = nu;
        } else {
            b = nu;
        }
        if (p - xi).abs() <= 1e-15 * xi || b - a <= 1e-16 * (1.0 + b.abs()) {
            break;
        }
        // Newton on psi(nu) = 1/xi - 1/phi(nu)
        let psi = 1.0 / xi - 1.0 / p;
        let dpsi = ds / (2.0 * p * p * p);
        let mut next = nu - psi / dpsi;
        if !(next.is_finite() && next > a && next < b) {
            next = 0.5 * (a + b);
        }
        nu = next;
    }
    nu
}

/// Worst-case `g^H W g / (g^H Sigma g + sigma_e^2)` over the ball around `g_bar`.
pub fn worst_case_eav_sinr(w: &CMat, sigma: &CMat, g_bar: &CVec, xi: f64, sigma_e2: f64) -> Result<f64> {
    if !(sigma_e2 > 0.0) {
        return Err(invalid("sigma_e2 must be positive"));
    }
    let top = extremize_quadratic_over_ball(w, g_bar, xi, Sense::Max)?.value;
    let mut hi = top.max(0.0) / sigma_e2;
    if hi <= 0.0 {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut iters = 0;
    while hi - lo > SINR_TOL {
        assert!(iters < MAX_BISECTIONS, "worst-case SINR bisection did not converge");
        iters += 1;
        let mid = 0.5 * (lo + hi);
        let m = w - sigma * Complex64::new(mid, 0.0);
        let v = extremize_quadratic_over_ball(&m, g_bar, xi, Sense::Max)?.value;
        if v >= mid * sigma_e2 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Signed margins of every robust constraint (nonnegative means satisfied).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustReport {
    pub beta_used: f64,
    /// Nominal SU rate `C_s`.
    pub su_rate: f64,
    /// Worst-case eavesdropper SINR per EHR.
    pub worst_eav_sinr: Vec<f64>,
    /// `C_s - max_k worst-case C_{e,k}`.
    pub worst_secrecy_rate: f64,
    pub secrecy_margin: f64,
    /// Harvested energy at the SU.
    pub su_energy: f64,
    pub su_energy_margin: f64,
    /// Worst-case interference per PU.
    pub worst_interference: Vec<f64>,
    pub interference_margins: Vec<f64>,
    pub total_power: f64,
    pub power_margin: f64,
    /// Worst-case harvested energy per EHR.
    pub worst_ehr_energy: Vec<f64>,
    /// `min_k` of `worst_ehr_energy`.
    pub min_ehr_energy: f64,
    /// `beta_used - (1 + worst-case SINR)` per EHR.
    pub beta_margins: Vec<f64>,
}

impl RobustReport {
    /// Smallest margin over C1, C2, C3, C4 and the `beta` checks.
    pub fn min_margin(&self) -> f64 {
        let mut m = self.secrecy_margin.min(self.su_energy_margin).min(self.power_margin);
        for v in self.interference_margins.iter().chain(&self.beta_margins) {
            m = m.min(*v);
        }
        m
    }

    pub fn satisfied(&self, tol: f64) -> bool {
        self.min_margin() >= -tol
    }
}

/// Evaluates every robust constraint of `design` with the exact oracle.
pub fn verify_robust_design(
    design: &TransmitDesign,
    channels: &ChannelSet,
    params: &SystemParams,
    beta_used: f64,
) -> Result<RobustReport> {
    params.validate()?;
    channels.check(params)?;
    if design.nt() != params.nt {
        return Err(invalid("design size differs from nt"));
    }
    let su_rate = su_capacity(design, &channels.h, params)?;
    let mut worst_eav_sinr = Vec::with_capacity(params.num_ehr);
    let mut worst_ehr_energy = Vec::with_capacity(params.num_ehr);
    let total = &design.w + &design.sigma;
    for (k, g) in channels.g_bar.iter().enumerate() {
        let xi = params.xi_e[k];
        worst_eav_sinr.push(worst_case_eav_sinr(&design.w, &design.sigma, g, xi, params.sigma_e2)?);
        let low = extremize_quadratic_over_ball(&total, g, xi, Sense::Min)?.value;
        worst_ehr_energy.push(params.eta * (low + params.sigma_e2));
    }
    let max_sinr = worst_eav_sinr.iter().copied().fold(0.0, f64::max);
    let worst_secrecy_rate = su_rate - max_sinr.ln_1p() / std::f64::consts::LN_2;
    let su_energy = harvested_energy_su(design, channels, params)?;
    let mut worst_interference = Vec::with_capacity(params.num_pu);
    for (i, q) in channels.q_bar.iter().enumerate() {
        worst_interference.push(extremize_quadratic_over_ball(&total, q, params.xi_p[i], Sense::Max)?.value);
    }
    let total_power = design.total_power();
    Ok(RobustReport {
        beta_used,
        su_rate,
        beta_margins: worst_eav_sinr.iter().map(|s| beta_used - (1.0 + s)).collect(),
        worst_eav_sinr,
        worst_secrecy_rate,
        secrecy_margin: worst_secrecy_rate - params.r_min,
        su_energy,
        su_energy_margin: su_energy - params.psi_s,
        interference_margins: worst_interference.iter().zip(&params.p_in).map(|(v, cap)| cap - v).collect(),
        worst_interference,
        total_power,
        power_margin: params.p_th - total_power,
        min_ehr_energy: worst_ehr_energy.iter().copied().fold(f64::INFINITY, f64::min),
        worst_ehr_energy,
    })
}
