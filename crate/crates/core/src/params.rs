//! System constants, unit handling and the JSON config schema.
//!
//! Every power-valued config key carries its unit as a suffix:
//!
//! | suffix  | meaning                         |
//! |---------|---------------------------------|
//! | `_w`    | linear watts                    |
//! | `_db`   | dBW, `x -> 10^(x/10)` W         |
//! | `_dbm`  | dBm, `x -> 10^(x/10)` mW        |
//!
//! Exactly one variant of each power key must be given. Uncertainty radii are
//! given either as radii (`xi_e`, `xi_p`) or as squared radii (`xi_e_sq`,
//! `xi_p_sq`). List-valued keys accept a scalar, which is broadcast.

use crate::error::{Result, SwiptError};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub nt: usize,
    pub num_ehr: usize,
    pub num_pu: usize,
    /// SU receiver noise power (W).
    pub sigma_s2: f64,
    /// EHR noise power (W).
    pub sigma_e2: f64,
    /// SU processing-noise power (W).
    pub sigma_sp2: f64,
    pub eta: f64,
    /// Transmit power budget (W).
    pub p_th: f64,
    /// Interference caps, one per PU (W).
    pub p_in: Vec<f64>,
    /// Minimum energy harvested at the SU (W).
    pub psi_s: f64,
    /// Minimum secrecy rate (bits/s/Hz).
    pub r_min: f64,
    /// EHR channel-error radii.
    pub xi_e: Vec<f64>,
    /// PU channel-error radii.
    pub xi_p: Vec<f64>,
}

pub fn db_to_watts(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

fn check(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(SwiptError::InvalidInput(msg.to_string()))
    }
}

impl SystemParams {
    /// Simulation constants: M = 2, K = 3, eta = 1, P_In = -10 dB, P_th = 2 dB,
    /// noise 0.1 / 0.1 / 0.01, psi_s = 22 dBm, xi_e^2 = 1e-3, xi_p^2 = 1e-4.
    pub fn simulation_preset(nt: usize, r_min: f64) -> Self {
        let k = 3;
        let m = 2;
        SystemParams {
            nt,
            num_ehr: k,
            num_pu: m,
            sigma_s2: 0.1,
            sigma_e2: 0.1,
            sigma_sp2: 0.01,
            eta: 1.0,
            p_th: db_to_watts(2.0),
            p_in: vec![db_to_watts(-10.0); m],
            psi_s: dbm_to_watts(22.0),
            r_min,
            xi_e: vec![1e-3f64.sqrt(); k],
            xi_p: vec![1e-4f64.sqrt(); m],
        }
    }

    pub fn validate(&self) -> Result<()> {
        check(self.nt >= 1, "nt must be at least 1")?;
        check(self.num_ehr >= 1, "num_ehr must be at least 1")?;
        let pos = |v: f64| v.is_finite() && v > 0.0;
        check(pos(self.sigma_s2), "sigma_s2 must be positive")?;
        check(pos(self.sigma_e2), "sigma_e2 must be positive")?;
        check(pos(self.sigma_sp2), "sigma_sp2 must be positive")?;
        check(pos(self.p_th), "p_th must be positive")?;
        check(pos(self.psi_s), "psi_s must be positive")?;
        check(self.eta > 0.0 && self.eta <= 1.0, "eta must lie in (0, 1]")?;
        check(self.r_min.is_finite() && self.r_min >= 0.0, "r_min must be nonnegative")?;
        check(self.p_in.len() == self.num_pu, "p_in length must equal num_pu")?;
        check(self.xi_p.len() == self.num_pu, "xi_p length must equal num_pu")?;
        check(self.xi_e.len() == self.num_ehr, "xi_e length must equal num_ehr")?;
        check(self.p_in.iter().all(|v| pos(*v)), "p_in entries must be positive")?;
        let rad = |v: &f64| v.is_finite() && *v >= 0.0;
        check(self.xi_e.iter().all(rad), "xi_e entries must be nonnegative")?;
        check(self.xi_p.iter().all(rad), "xi_p entries must be nonnegative")?;
        Ok(())
    }

    /// Same constants with all uncertainty radii set to zero.
    pub fn perfect_csi(&self) -> Self {
        SystemParams {
            xi_e: vec![0.0; self.num_ehr],
            xi_p: vec![0.0; self.num_pu],
            ..self.clone()
        }
    }

    /// Keeps the first `k` EHRs (radii truncated or extended with the last value).
    pub fn with_num_ehr(&self, k: usize) -> Self {
        let fill = self.xi_e.last().copied().unwrap_or(0.0);
        let mut xi_e: Vec<f64> = self.xi_e.iter().copied().take(k).collect();
        xi_e.resize(k, fill);
        SystemParams {
            num_ehr: k,
            xi_e,
            ..self.clone()
        }
    }

    pub fn with_nt(&self, nt: usize) -> Self {
        SystemParams { nt, ..self.clone() }
    }

    pub fn with_r_min(&self, r_min: f64) -> Self {
        SystemParams { r_min, ..self.clone() }
    }
}

/// A value that may be a scalar or a list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn expand(&self, n: usize, key: &str) -> Result<Vec<f64>> {
        match self {
            OneOrMany::One(v) => Ok(vec![*v; n]),
            OneOrMany::Many(v) if v.len() == n => Ok(v.clone()),
            OneOrMany::Many(v) => Err(SwiptError::Config(format!(
                "{key} has {} entries, expected {n}",
                v.len()
            ))),
        }
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> OneOrMany {
        match self {
            OneOrMany::One(v) => OneOrMany::One(f(*v)),
            OneOrMany::Many(v) => OneOrMany::Many(v.iter().map(|x| f(*x)).collect()),
        }
    }
}

/// Config file contents before unit conversion.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub nt: Option<usize>,
    pub num_ehr: Option<usize>,
    pub num_pu: Option<usize>,
    pub sigma_s2_w: Option<f64>,
    pub sigma_s2_db: Option<f64>,
    pub sigma_e2_w: Option<f64>,
    pub sigma_e2_db: Option<f64>,
    pub sigma_sp2_w: Option<f64>,
    pub sigma_sp2_db: Option<f64>,
    pub eta: Option<f64>,
    pub p_th_w: Option<f64>,
    pub p_th_db: Option<f64>,
    pub p_th_dbm: Option<f64>,
    pub p_in_w: Option<OneOrMany>,
    pub p_in_db: Option<OneOrMany>,
    pub p_in_dbm: Option<OneOrMany>,
    pub psi_s_w: Option<f64>,
    pub psi_s_db: Option<f64>,
    pub psi_s_dbm: Option<f64>,
    pub r_min: Option<f64>,
    pub xi_e: Option<OneOrMany>,
    pub xi_e_sq: Option<OneOrMany>,
    pub xi_p: Option<OneOrMany>,
    pub xi_p_sq: Option<OneOrMany>,
}

fn pick_power(key: &str, w: Option<f64>, db: Option<f64>, dbm: Option<f64>) -> Result<Option<f64>> {
    let given = [w.is_some(), db.is_some(), dbm.is_some()].iter().filter(|b| **b).count();
    if given > 1 {
        return Err(SwiptError::Config(format!("{key} given in more than one unit")));
    }
    Ok(w.or(db.map(db_to_watts)).or(dbm.map(dbm_to_watts)))
}

fn pick_list(
    key: &str,
    w: &Option<OneOrMany>,
    db: &Option<OneOrMany>,
    dbm: &Option<OneOrMany>,
) -> Result<Option<OneOrMany>> {
    let given = [w.is_some(), db.is_some(), dbm.is_some()].iter().filter(|b| **b).count();
    if given > 1 {
        return Err(SwiptError::Config(format!("{key} given in more than one unit")));
    }
    Ok(w.clone()
        .or(db.as_ref().map(|v| v.map(db_to_watts)))
        .or(dbm.as_ref().map(|v| v.map(dbm_to_watts))))
}

fn pick_radius(key: &str, r: &Option<OneOrMany>, sq: &Option<OneOrMany>) -> Result<Option<OneOrMany>> {
    match (r, sq) {
        (Some(_), Some(_)) => Err(SwiptError::Config(format!("{key} given both as radius and squared radius"))),
        (Some(v), None) => Ok(Some(v.clone())),
        (None, Some(v)) => {
            if let OneOrMany::Many(l) = v {
                if l.iter().any(|x| *x < 0.0) {
                    return Err(SwiptError::Config(format!("{key}_sq must be nonnegative")));
                }
            } else if let OneOrMany::One(x) = v {
                if *x < 0.0 {
                    return Err(SwiptError::Config(format!("{key}_sq must be nonnegative")));
                }
            }
            Ok(Some(v.map(f64::sqrt)))
        }
        (None, None) => Ok(None),
    }
}

/// Converts a raw config into validated parameters. Keys that are absent take
/// the simulation-preset value for the configured `nt`.
pub fn convert_units(raw: &RawConfig) -> Result<SystemParams> {
    let nt = raw.nt.unwrap_or(6);
    let base = SystemParams::simulation_preset(nt, raw.r_min.unwrap_or(1.5));
    let k = raw.num_ehr.unwrap_or(base.num_ehr);
    let m = raw.num_pu.unwrap_or(base.num_pu);
    let base = base.with_num_ehr(k);

    let p_in = match pick_list("p_in", &raw.p_in_w, &raw.p_in_db, &raw.p_in_dbm)? {
        Some(v) => v.expand(m, "p_in")?,
        None => vec![base.p_in[0]; m],
    };
    let xi_e = match pick_radius("xi_e", &raw.xi_e, &raw.xi_e_sq)? {
        Some(v) => v.expand(k, "xi_e")?,
        None => base.xi_e.clone(),
    };
    let xi_p = match pick_radius("xi_p", &raw.xi_p, &raw.xi_p_sq)? {
        Some(v) => v.expand(m, "xi_p")?,
        None => vec![base.xi_p[0]; m],
    };
    let params = SystemParams {
        nt,
        num_ehr: k,
        num_pu: m,
        sigma_s2: pick_power("sigma_s2", raw.sigma_s2_w, raw.sigma_s2_db, None)?.unwrap_or(base.sigma_s2),
        sigma_e2: pick_power("sigma_e2", raw.sigma_e2_w, raw.sigma_e2_db, None)?.unwrap_or(base.sigma_e2),
        sigma_sp2: pick_power("sigma_sp2", raw.sigma_sp2_w, raw.sigma_sp2_db, None)?.unwrap_or(base.sigma_sp2),
        eta: raw.eta.unwrap_or(base.eta),
        p_th: pick_power("p_th", raw.p_th_w, raw.p_th_db, raw.p_th_dbm)?.unwrap_or(base.p_th),
        p_in,
        psi_s: pick_power("psi_s", raw.psi_s_w, raw.psi_s_db, raw.psi_s_dbm)?.unwrap_or(base.psi_s),
        r_min: base.r_min,
        xi_e,
        xi_p,
    };
    params.validate().map_err(|e| SwiptError::Config(e.to_string()))?;
    Ok(params)
}

/// Parses a JSON config document.
pub fn parse_config(json: &str) -> Result<SystemParams> {
    let raw: RawConfig = serde_json::from_str(json).map_err(|e| SwiptError::Config(e.to_string()))?;
    convert_units(&raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_units() {
        let p = SystemParams::simulation_preset(6, 1.5);
        assert!((p.p_th - 1.584893).abs() < 1e-6);
        assert!((p.p_in[0] - 0.1).abs() < 1e-15);
        assert!((p.psi_s - 0.1584893).abs() < 1e-7);
        assert!((p.xi_e[0] * p.xi_e[0] - 1e-3).abs() < 1e-15);
        p.validate().unwrap();
    }

    #[test]
    fn config_keys_and_units() {
        let p = parse_config(r#"{"nt": 4, "p_th_db": 2.0, "psi_s_dbm": 22.0, "p_in_db": -10.0, "xi_e_sq": 0.001, "r_min": 0.5}"#)
            .unwrap();
        assert_eq!(p.nt, 4);
        assert!((p.p_th - 1.58489).abs() < 1e-5);
        assert!((p.psi_s - 0.158489).abs() < 1e-6);
        assert_eq!(p.p_in, vec![db_to_watts(-10.0); 2]);
        assert_eq!(p.r_min, 0.5);
    }

    #[test]
    fn config_errors() {
        assert!(parse_config(r#"{"p_th_db": 2.0, "p_th_w": 1.0}"#).is_err());
        assert!(parse_config(r#"{"bogus": 1}"#).is_err());
        assert!(parse_config(r#"{"num_pu": 3, "p_in_w": [0.1, 0.2]}"#).is_err());
        assert!(parse_config(r#"{"eta": 1.5}"#).is_err());
        assert!(parse_config("not json").is_err());
    }

    #[test]
    fn with_num_ehr_is_prefix() {
        let p = SystemParams::simulation_preset(4, 1.0);
        let q = p.with_num_ehr(5);
        assert_eq!(q.xi_e.len(), 5);
        assert_eq!(q.with_num_ehr(3), p);
    }
}
