mod common;

use common::*;
use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use swipt_core::model::{eav_sinr, harvested_energy_ehr, pu_interference, secrecy_rate};
use swipt_core::{extremize_quadratic_over_ball, generate_channels, verify_robust_design, worst_case_eav_sinr, Sense, SystemParams, TransmitDesign};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[test]
fn dim3_indefinite_against_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = random_hermitian(&mut rng, 3);
    let g = random_vec(&mut rng, 3);
    let (lo, hi) = sampled_range(&mut rng, &a, &g, 0.5, 100_000);
    let emin = extremize_quadratic_over_ball(&a, &g, 0.5, Sense::Min).unwrap();
    let emax = extremize_quadratic_over_ball(&a, &g, 0.5, Sense::Max).unwrap();
    assert!(emin.value <= lo + 1e-9 && emax.value >= hi - 1e-9);
    let spread = emax.value - emin.value;
    assert!(relative_gap(emin.value, lo, spread) <= 0.01, "{} vs {lo}", emin.value);
    assert!(relative_gap(emax.value, hi, spread) <= 0.01, "{} vs {hi}", emax.value);
    // the maximizer itself is a feasible point attaining the value
    let v = &g + &emax.delta_star;
    assert!(emax.delta_star.norm() <= 0.5 + 1e-12);
    assert!((quad(&a, &v) - emax.value).abs() < 1e-9 * (1.0 + emax.value.abs()));
}

#[test]
fn extremum_grows_with_radius() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let a = random_hermitian(&mut rng, 4);
        let g = random_vec(&mut rng, 4);
        let (mut last_lo, mut last_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for j in 0..=20 {
            let xi = 0.1 * j as f64;
            let lo = extremize_quadratic_over_ball(&a, &g, xi, Sense::Min).unwrap().value;
            let hi = extremize_quadratic_over_ball(&a, &g, xi, Sense::Max).unwrap().value;
            assert!(lo <= last_lo + 1e-10 * (1.0 + lo.abs()), "min rose at xi = {xi}");
            assert!(hi >= last_hi - 1e-10 * (1.0 + hi.abs()), "max fell at xi = {xi}");
            (last_lo, last_hi) = (lo, hi);
        }
    }
}

#[test]
fn worst_sinr_against_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let w = random_psd(&mut rng, 2, 1);
        let s = random_psd(&mut rng, 2, 2) * c(0.3);
        let g = random_vec(&mut rng, 2);
        let sinr = worst_case_eav_sinr(&w, &s, &g, 0.3, 0.1).unwrap();
        let mut best: f64 = 0.0;
        for i in 0..100_000 {
            let v = &g + ball_point(&mut rng, 2, 0.3, i % 2 == 0);
            best = best.max(quad(&w, &v) / (quad(&s, &v) + 0.1));
        }
        assert!(best <= sinr + 1e-8, "{best} > {sinr}");
        assert!(sinr - best <= 0.01 * sinr, "{sinr} vs {best}");
    }
}

#[test]
fn worst_sinr_monotone_in_radius_and_w() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let w = random_psd(&mut rng, 3, 1);
    let s = random_psd(&mut rng, 3, 2);
    let g = random_vec(&mut rng, 3);
    let mut last = 0.0;
    for j in 0..10 {
        let v = worst_case_eav_sinr(&w, &s, &g, 0.05 * j as f64, 0.1).unwrap();
        assert!(v >= last - 2e-8);
        last = v;
    }
    let base = worst_case_eav_sinr(&w, &s, &g, 0.2, 0.1).unwrap();
    let bumped = worst_case_eav_sinr(&(&w + CMat::identity(3, 3) * c(0.05)), &s, &g, 0.2, 0.1).unwrap();
    assert!(bumped >= base - 2e-8);
}

#[test]
fn zero_design_margins() {
    let p = SystemParams::simulation_preset(4, 1.0);
    let ch = generate_channels(&p, 2);
    let d = TransmitDesign::zero(4, 0.5);
    let r = verify_robust_design(&d, &ch, &p, 1.0).unwrap();
    assert!((r.power_margin - p.p_th).abs() < 1e-15);
    assert_eq!(r.worst_secrecy_rate, 0.0);
    assert!((r.secrecy_margin + 1.0).abs() < 1e-15);
    assert!(!r.satisfied(1e-6));
}

#[test]
fn zero_radius_matches_nominal_evaluators() {
    let p = SystemParams::simulation_preset(4, 1.0).perfect_csi();
    let ch = generate_channels(&p, 9);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let w = random_psd(&mut rng, 4, 1) * c(0.2);
    let s = random_psd(&mut rng, 4, 4) * c(0.05);
    let d = TransmitDesign::new(w, s, 0.4).unwrap();
    let r = verify_robust_design(&d, &ch, &p, 3.0).unwrap();
    let rs = secrecy_rate(&d, &ch, &ch.g_bar, &p).unwrap();
    assert!((r.worst_secrecy_rate - rs).abs() < 1e-7);
    for (k, g) in ch.g_bar.iter().enumerate() {
        assert!((r.worst_eav_sinr[k] - eav_sinr(&d, g, &p).unwrap()).abs() < 1e-8);
        assert!((r.worst_ehr_energy[k] - harvested_energy_ehr(&d, g, &p).unwrap()).abs() < 1e-12);
    }
    for (i, q) in ch.q_bar.iter().enumerate() {
        assert!((r.worst_interference[i] - pu_interference(&d, q).unwrap()).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn extremum_bounds_samples(seed in any::<u64>(), n in 1usize..=4, xi in 0.05f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_hermitian(&mut rng, n);
        let g = random_vec(&mut rng, n);
        let emin = extremize_quadratic_over_ball(&a, &g, xi, Sense::Min).unwrap();
        let emax = extremize_quadratic_over_ball(&a, &g, xi, Sense::Max).unwrap();
        let (lo, hi) = sampled_range(&mut rng, &a, &g, xi, 1_000);
        prop_assert!(emin.value <= lo + 1e-9 && emax.value >= hi - 1e-9);
        let spread = emax.value - emin.value;
        prop_assert!(relative_gap(emin.value, lo, spread) <= 0.01);
        prop_assert!(relative_gap(emax.value, hi, spread) <= 0.01);
        let scale = 1.0 + a.norm() * (g.norm() + xi).powi(2);
        prop_assert!(emin.kkt_residual <= 1e-7 * scale && emax.kkt_residual <= 1e-7 * scale);
        prop_assert!(emin.multiplier >= 0.0 && emax.multiplier >= 0.0);
        for e in [&emin, &emax] {
            let v = &g + &e.delta_star;
            prop_assert!(e.delta_star.norm() <= xi * (1.0 + 1e-10));
            prop_assert!((quad(&a, &v) - e.value).abs() <= 1e-9 * (1.0 + e.value.abs()));
        }
    }

    #[test]
    fn zero_radius_is_nominal(seed in any::<u64>(), n in 1usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_hermitian(&mut rng, n);
        let g = random_vec(&mut rng, n);
        let e = extremize_quadratic_over_ball(&a, &g, 0.0, Sense::Max).unwrap();
        prop_assert!((e.value - quad(&a, &g)).abs() <= 1e-12 * (1.0 + e.value.abs()));
        prop_assert_eq!(e.delta_star, DVector::zeros(n));
    }
}
