//! Rayleigh flat-fading channel draws.
//!
//! Each vector comes from its own ChaCha20 stream keyed by
//! `(seed, realization, kind, index)`, so the channels of EHR `k` do not
//! depend on how many EHRs or PUs are drawn and realizations can be generated
//! in any order.

use crate::params::SystemParams;
use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub type CVec = DVector<Complex64>;

/// Per-entry variance of the nominal PU channels.
pub const PU_CHANNEL_VARIANCE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSet {
    pub h: CVec,
    pub g_bar: Vec<CVec>,
    pub q_bar: Vec<CVec>,
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Su = 1,
    Ehr = 2,
    Pu = 3,
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn stream(seed: u64, realization: u64, kind: Kind, index: u64) -> ChaCha20Rng {
    let key = splitmix(splitmix(seed) ^ realization.wrapping_mul(0xd6e8_feb8_6659_fd93));
    let mut rng = ChaCha20Rng::seed_from_u64(key);
    rng.set_stream(((kind as u64) << 32) | index);
    rng
}

/// `CN(0, variance I)` vector of length `n`.
pub fn complex_gaussian<R: Rng>(rng: &mut R, n: usize, variance: f64) -> CVec {
    let s = (variance / 2.0).sqrt();
    DVector::from_iterator(
        n,
        (0..n).map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(s * re, s * im)
        }),
    )
}

/// Channels of realization `realization` under `seed`.
pub fn generate_channels_indexed(params: &SystemParams, seed: u64, realization: u64) -> ChannelSet {
    let n = params.nt;
    let h = complex_gaussian(&mut stream(seed, realization, Kind::Su, 0), n, 1.0);
    let g_bar = (0..params.num_ehr)
        .map(|k| complex_gaussian(&mut stream(seed, realization, Kind::Ehr, k as u64), n, 1.0))
        .collect();
    let q_bar = (0..params.num_pu)
        .map(|i| complex_gaussian(&mut stream(seed, realization, Kind::Pu, i as u64), n, PU_CHANNEL_VARIANCE))
        .collect();
    ChannelSet { h, g_bar, q_bar }
}

/// Realization 0 under `seed`.
pub fn generate_channels(params: &SystemParams, seed: u64) -> ChannelSet {
    generate_channels_indexed(params, seed, 0)
}

impl ChannelSet {
    pub fn nt(&self) -> usize {
        self.h.len()
    }

    /// Checks vector counts and lengths against `params`.
    pub fn check(&self, params: &SystemParams) -> crate::Result<()> {
        let n = params.nt;
        let ok = self.h.len() == n
            && self.g_bar.len() == params.num_ehr
            && self.q_bar.len() == params.num_pu
            && self.g_bar.iter().chain(&self.q_bar).all(|v| v.len() == n)
            && self
                .g_bar
                .iter()
                .chain(&self.q_bar)
                .chain(std::iter::once(&self.h))
                .all(|v| v.iter().all(|c| c.re.is_finite() && c.im.is_finite()));
        if ok {
            Ok(())
        } else {
            Err(crate::error::invalid("channel set does not match the system dimensions"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_nested() {
        let p = SystemParams::simulation_preset(4, 1.0);
        let a = generate_channels(&p, 11);
        assert_eq!(a, generate_channels(&p, 11));
        let more = generate_channels_indexed(&p.with_num_ehr(6), 11, 0);
        assert_eq!(&more.g_bar[..3], &a.g_bar[..]);
        assert_eq!(more.h, a.h);
        assert_ne!(generate_channels_indexed(&p, 11, 1).h, a.h);
    }

    #[test]
    fn second_moments() {
        let p = SystemParams::simulation_preset(4, 1.0);
        let n = 10_000;
        let (mut h2, mut q2) = (0.0, 0.0);
        for r in 0..n {
            let c = generate_channels_indexed(&p, 5, r);
            h2 += c.h.norm_squared();
            q2 += c.q_bar[0].norm_squared();
        }
        let (h2, q2) = (h2 / n as f64, q2 / n as f64);
        assert!((h2 - 4.0).abs() < 0.05 * 4.0, "{h2}");
        assert!((q2 - 0.4).abs() < 0.05 * 0.4, "{q2}");
    }
}
