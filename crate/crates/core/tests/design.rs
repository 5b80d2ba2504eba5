mod common;

use common::*;
use nalgebra::DVector;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use swipt_core::model::{harvested_energy_ehr, secrecy_rate};
use swipt_core::{
    design, extract_beamformer, generate_channels_indexed, rank_report, verify_robust_design, BetaGrid, ChannelSet, DesignOutcome,
    DesignSettings, PointStatus, SystemParams,
};

fn settings(grid: BetaGrid) -> DesignSettings {
    DesignSettings { grid, ..DesignSettings::default() }
}

fn strip_clock(mut o: DesignOutcome) -> DesignOutcome {
    o.wallclock_s = 0.0;
    o
}

#[test]
fn energy_requirement_above_received_power_is_infeasible() {
    let mut p = SystemParams::simulation_preset(2, 0.5);
    p.psi_s = 10.0;
    p.p_th = 1.0;
    let mut ch = generate_channels_indexed(&p, 1, 0);
    ch.h = DVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
    let out = design(&p, &ch, &settings(BetaGrid::Points(8))).unwrap();
    assert!(!out.feasible);
    assert!(out.tau_opt.is_none() && out.design.is_none());
    assert_eq!(out.trace.len(), 8);
    assert!(out.trace.iter().all(|t| matches!(t.status, PointStatus::Infeasible | PointStatus::Screened)));
}

#[test]
fn solved_design_is_robust_and_consistent() {
    let p = SystemParams::simulation_preset(4, 1.0);
    let ch = generate_channels_indexed(&p, 21, 0);
    let out = design(&p, &ch, &settings(BetaGrid::Points(20))).unwrap();
    assert!(out.feasible);
    let tau = out.tau_opt.unwrap();
    let beta = out.beta_opt.unwrap();
    let best = out.trace.iter().filter_map(|t| t.tau).fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(tau, best);
    let d = out.design.clone().unwrap();
    let rep = verify_robust_design(&d, &ch, &p, beta).unwrap();
    assert!(rep.satisfied(1e-6), "{rep:#?}");
    assert!(rep.min_ehr_energy >= tau - 1e-6 * tau.abs().max(1.0));

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (k, g) in ch.g_bar.iter().enumerate() {
        for i in 0..1000 {
            let ga = g + ball_point(&mut rng, p.nt, p.xi_e[k], i % 2 == 0);
            assert!(harvested_energy_ehr(&d, &ga, &p).unwrap() >= tau - 1e-6);
            let rs = secrecy_rate(&d, &ch, std::slice::from_ref(&ga), &p).unwrap();
            assert!(rs >= p.r_min - 1e-6);
        }
    }

    let rank = out.rank.unwrap();
    assert!(rank.ratio_w <= 1e-5, "{rank:?}");
    let w = out.w_extracted.unwrap();
    let rep1 = verify_robust_design(&d.with_beamformer(&w), &ch, &p, beta).unwrap();
    assert!((rep1.min_ehr_energy - rep.min_ehr_energy).abs() <= 1e-6 * rep.min_ehr_energy.abs());
    assert!(rep1.satisfied(1e-6));
}

#[test]
fn finer_grid_never_loses() {
    let p = SystemParams::simulation_preset(4, 1.0);
    for r in 0..3 {
        let ch = generate_channels_indexed(&p, 5, r);
        let coarse = design(&p, &ch, &settings(BetaGrid::Step(0.4))).unwrap();
        let fine = design(&p, &ch, &settings(BetaGrid::Step(0.2))).unwrap();
        if let Some(tc) = coarse.tau_opt {
            assert!(fine.tau_opt.unwrap() >= tc - 1e-8);
        }
    }
}

#[test]
fn refinement_never_loses() {
    let p = SystemParams::simulation_preset(4, 1.0);
    let ch = generate_channels_indexed(&p, 8, 0);
    let grid = design(&p, &ch, &settings(BetaGrid::Points(10))).unwrap();
    let refined = design(&p, &ch, &DesignSettings { refine: true, ..settings(BetaGrid::Points(10)) }).unwrap();
    assert!(refined.tau_opt.unwrap() >= grid.tau_opt.unwrap());
    assert!(refined.trace.len() > grid.trace.len());
}

#[test]
fn reproducible_across_runs_and_threads() {
    let p = SystemParams::simulation_preset(4, 1.5);
    let ch: ChannelSet = generate_channels_indexed(&p, 13, 2);
    let s = settings(BetaGrid::Points(12));
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        strip_clock(pool.install(|| design(&p, &ch, &s).unwrap()))
    };
    let a = run(1);
    assert_eq!(a, run(1));
    assert_eq!(a, run(3));
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&run(2)).unwrap());
}

#[test]
fn rank_report_basics() {
    let eye = CMat::identity(3, 3);
    let r = rank_report(&eye, &eye, 1e-6);
    assert_eq!((r.rank_w, r.rank_sigma), (3, 3));
    assert!(r.w_flagged);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let v = random_vec(&mut rng, 4);
    let r1 = rank_report(&(&v * v.adjoint()), &eye, 1e-6);
    assert_eq!(r1.rank_w, 1);
    assert!(r1.ratio_w <= 1e-12 && !r1.w_flagged);
    let (x, ratio) = extract_beamformer(&(&v * v.adjoint()));
    assert!(ratio <= 1e-12);
    assert!((x.norm_squared() - v.norm_squared()).abs() < 1e-12);
    let (_, tie) = extract_beamformer(&CMat::identity(2, 2));
    assert!(tie > 1e-3);
}

#[test]
fn tie_break_selects_rank_one_beam() {
    // secrecy is slack at the optimum of this draw, so the optimal W is not unique
    let p = SystemParams::simulation_preset(4, 0.5);
    let ch = generate_channels_indexed(&p, 31, 48);
    let plain = design(&p, &ch, &DesignSettings { tie_break: false, ..DesignSettings::default() }).unwrap();
    let tied = design(&p, &ch, &DesignSettings::default()).unwrap();
    assert!(!plain.tie_break && tied.tie_break);
    assert_eq!(plain.tau_opt, tied.tau_opt);
    assert_eq!(plain.beta_opt, tied.beta_opt);
    assert!(plain.rank.unwrap().ratio_w > 1e-3);
    assert!(tied.rank.unwrap().ratio_w <= 1e-5);
    let beta = tied.beta_opt.unwrap();
    let tau = tied.tau_opt.unwrap();
    for o in [&plain, &tied] {
        let rep = verify_robust_design(o.design.as_ref().unwrap(), &ch, &p, beta).unwrap();
        assert!(rep.satisfied(1e-6));
        assert!(rep.min_ehr_energy >= tau - 1e-6);
    }
    let d = tied.design.as_ref().unwrap();
    assert!(d.w.trace().re < plain.design.as_ref().unwrap().w.trace().re);
}
