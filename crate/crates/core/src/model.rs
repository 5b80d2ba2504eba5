//! Transmit design and closed-form performance evaluators.

use crate::channels::{CVec, ChannelSet};
use crate::error::{invalid, Result};
use crate::params::SystemParams;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type CMat = DMatrix<Complex64>;

/// Signal covariance `w`, AN covariance `sigma` and power splitting ratio `rho`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmitDesign {
    pub w: CMat,
    pub sigma: CMat,
    pub rho: f64,
    pub w_opt: Option<CVec>,
}

/// `v^H A v`, real part.
pub fn quad_form(a: &CMat, v: &CVec) -> f64 {
    v.dotc(&(a * v)).re
}

pub fn max_asymmetry(a: &CMat) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn hermitian_eigenvalues(a: &CMat) -> Vec<f64> {
    let mut ev: Vec<f64> = a.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

fn check_psd(name: &str, a: &CMat) -> Result<()> {
    if !a.is_square() {
        return Err(invalid(format!("{name} is not square")));
    }
    if a.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
        return Err(invalid(format!("{name} has non-finite entries")));
    }
    if max_asymmetry(a) > 1e-12 * (1.0 + a.norm()) {
        return Err(invalid(format!("{name} is not Hermitian")));
    }
    let tr = a.trace().re;
    let lmin = hermitian_eigenvalues(a).last().copied().unwrap_or(0.0);
    if lmin < -1e-9 * tr.abs().max(1e-300) && lmin < -1e-12 {
        return Err(invalid(format!("{name} is not PSD (min eigenvalue {lmin:e})")));
    }
    Ok(())
}

impl TransmitDesign {
    /// Validates Hermitian PSD structure and `rho` in (0, 1].
    pub fn new(w: CMat, sigma: CMat, rho: f64) -> Result<Self> {
        check_psd("W", &w)?;
        check_psd("Sigma", &sigma)?;
        if w.shape() != sigma.shape() {
            return Err(invalid("W and Sigma sizes differ"));
        }
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(invalid(format!("rho {rho} outside (0, 1]")));
        }
        Ok(TransmitDesign { w, sigma, rho, w_opt: None })
    }

    pub fn zero(nt: usize, rho: f64) -> Self {
        TransmitDesign {
            w: CMat::zeros(nt, nt),
            sigma: CMat::zeros(nt, nt),
            rho,
            w_opt: None,
        }
    }

    pub fn nt(&self) -> usize {
        self.w.nrows()
    }

    /// The same design with `W` replaced by `w w^H`.
    pub fn with_beamformer(&self, w: &CVec) -> Self {
        TransmitDesign {
            w: w * w.adjoint(),
            sigma: self.sigma.clone(),
            rho: self.rho,
            w_opt: Some(w.clone()),
        }
    }

    pub fn total_power(&self) -> f64 {
        (self.w.trace() + self.sigma.trace()).re
    }

    fn check_dim(&self, v: &CVec) -> Result<()> {
        if v.len() == self.nt() {
            Ok(())
        } else {
            Err(invalid(format!("vector length {} but Nt = {}", v.len(), self.nt())))
        }
    }
}

/// Achievable rate at the SU for the current design.
pub fn su_capacity(design: &TransmitDesign, h: &CVec, params: &SystemParams) -> Result<f64> {
    design.check_dim(h)?;
    let rho = design.rho;
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(invalid(format!("rho {rho} outside (0, 1]")));
    }
    let sig = rho * quad_form(&design.w, h);
    let noise = rho * (quad_form(&design.sigma, h) + params.sigma_s2) + params.sigma_sp2;
    Ok((sig / noise).ln_1p() / std::f64::consts::LN_2)
}

/// `g^H W g / (g^H Sigma g + sigma_e^2)` at one eavesdropper channel.
pub fn eav_sinr(design: &TransmitDesign, g: &CVec, params: &SystemParams) -> Result<f64> {
    design.check_dim(g)?;
    Ok(quad_form(&design.w, g) / (quad_form(&design.sigma, g) + params.sigma_e2))
}

/// `min_k (C_s - C_{e,k})` at the given EHR channels. Not clamped at zero.
pub fn secrecy_rate(
    design: &TransmitDesign,
    channels: &ChannelSet,
    g_actual: &[CVec],
    params: &SystemParams,
) -> Result<f64> {
    if g_actual.is_empty() {
        return Err(invalid("no EHR channels given"));
    }
    let cs = su_capacity(design, &channels.h, params)?;
    let mut worst = f64::INFINITY;
    for g in g_actual {
        let ce = eav_sinr(design, g, params)?.ln_1p() / std::f64::consts::LN_2;
        worst = worst.min(cs - ce);
    }
    Ok(worst)
}

/// `(1 - rho) eta (h^H W h + h^H Sigma h + sigma_s^2)`.
pub fn harvested_energy_su(design: &TransmitDesign, channels: &ChannelSet, params: &SystemParams) -> Result<f64> {
    design.check_dim(&channels.h)?;
    let h = &channels.h;
    let rx = quad_form(&design.w, h) + quad_form(&design.sigma, h) + params.sigma_s2;
    Ok((1.0 - design.rho) * params.eta * rx)
}

/// `eta (g^H W g + g^H Sigma g + sigma_e^2)`.
pub fn harvested_energy_ehr(design: &TransmitDesign, g: &CVec, params: &SystemParams) -> Result<f64> {
    design.check_dim(g)?;
    Ok(params.eta * (quad_form(&design.w, g) + quad_form(&design.sigma, g) + params.sigma_e2))
}

/// `q^H (W + Sigma) q`.
pub fn pu_interference(design: &TransmitDesign, q: &CVec) -> Result<f64> {
    design.check_dim(q)?;
    Ok(quad_form(&design.w, q) + quad_form(&design.sigma, q))
}
