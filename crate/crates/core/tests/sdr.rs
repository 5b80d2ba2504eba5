mod common;

use common::*;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swipt_conic::field::smat;
use swipt_conic::{Cone, ConicProblem};
use swipt_core::{beta_bounds, build_p4, generate_channels, min_trace_problem, Layout, P4Solution, SystemParams};

fn block_min_eig(p: &ConicProblem, x: &[f64], index: usize) -> f64 {
    let ax = p.a_mul(x);
    let start = p.cone_offsets()[index];
    let Cone::HermitianPsd(side) = p.cones[index] else { panic!("not a PSD block") };
    let s: Vec<f64> = (start..start + p.cones[index].dim()).map(|r| p.b[r] - ax[r]).collect();
    let m: CMat = smat::<Complex64>(&s, side);
    m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

#[test]
fn cone_structure() {
    let p = SystemParams::simulation_preset(4, 1.0);
    let ch = generate_channels(&p, 1);
    let (lo, hi) = beta_bounds(&p, &ch.h);
    let p4 = build_p4(&p, &ch, 0.5 * (lo + hi), 1e-6).unwrap();
    let mut want = vec![Cone::NonNeg(12), Cone::SecondOrder(3), Cone::HermitianPsd(4), Cone::HermitianPsd(4)];
    want.extend(std::iter::repeat_n(Cone::HermitianPsd(5), 8));
    assert_eq!(p4.problem.cones, want);
    assert_eq!(p4.layout.num_vars, 2 * 16 + 2 + 3 + 3 + 2);
    assert_eq!(p4.problem.c[p4.layout.tau], -1.0);
}

#[test]
fn sparse_text_is_stable() {
    let p = SystemParams::simulation_preset(4, 1.5);
    let ch = generate_channels(&p, 4);
    let a = build_p4(&p, &ch, 1.7, 1e-6).unwrap().problem;
    let b = build_p4(&p, &ch, 1.7, 1e-6).unwrap().problem;
    let text = a.to_sparse_text();
    assert_eq!(text, b.to_sparse_text());
    let back = ConicProblem::from_sparse_text(&text).unwrap();
    assert_eq!(back.to_sparse_text(), text);
    assert_eq!(back.cones, a.cones);
}

#[test]
fn beta_outside_bounds_is_rejected() {
    let p = SystemParams::simulation_preset(4, 1.5);
    let ch = generate_channels(&p, 4);
    let (_, hi) = beta_bounds(&p, &ch.h);
    assert!(build_p4(&p, &ch, 0.99, 1e-6).is_err());
    assert!(build_p4(&p, &ch, hi * 1.01, 1e-6).is_err());
    assert!(build_p4(&p, &ch, f64::NAN, 1e-6).is_err());
    assert!(build_p4(&p, &ch, 1.0, 0.0).is_err());
}

#[test]
fn layout_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let layout = Layout::new(3, 2, 1);
    let sol = P4Solution {
        w: random_psd(&mut rng, 3, 1),
        sigma: random_psd(&mut rng, 3, 3),
        t: 1.3,
        tau: 0.7,
        omega: vec![0.1, 0.2],
        mu: vec![0.3, 0.4],
        delta: vec![0.5],
    };
    let back = layout.extract(&layout.embed(&sol));
    assert!((&back.w - &sol.w).norm() < 1e-13);
    assert!((&back.sigma - &sol.sigma).norm() < 1e-13);
    assert_eq!((back.t, back.tau), (sol.t, sol.tau));
    assert_eq!((back.omega, back.mu, back.delta), (sol.omega, sol.mu, sol.delta));
}

/// With zero radii each linear matrix inequality is feasible exactly when its
/// nominal scalar constraint holds; a large multiplier realizes the Schur limit.
#[test]
fn zero_radius_lmis_match_scalar_constraints() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let p = SystemParams::simulation_preset(3, 1.0).perfect_csi();
    for trial in 0..20 {
        let ch = generate_channels(&p, 100 + trial);
        let (lo, hi) = beta_bounds(&p, &ch.h);
        let beta = lo + 0.3 * (hi - lo);
        let p4 = build_p4(&p, &ch, beta, 1e-6).unwrap();
        let w = random_psd(&mut rng, 3, 1) * Complex64::new(0.3, 0.0);
        let s = random_psd(&mut rng, 3, 2) * Complex64::new(0.05, 0.0);
        let total = &w + &s;
        let k = p.num_ehr;
        let m = p.num_pu;
        let energy0 = p.eta * (quad(&total, &ch.g_bar[0]) + p.sigma_e2);
        for tau in [0.5 * energy0, 1.5 * energy0] {
            let mut sol = P4Solution {
                w: w.clone(),
                sigma: s.clone(),
                t: 2.0,
                tau,
                omega: vec![0.0; k],
                mu: vec![0.0; k],
                delta: vec![0.0; m],
            };
            let scalar_sinr: Vec<f64> = ch.g_bar.iter().map(|g| quad(&w, g) - (beta - 1.0) * (quad(&s, g) + p.sigma_e2)).collect();
            let scalar_int: Vec<f64> = ch.q_bar.iter().zip(&p.p_in).map(|(q, cap)| cap - quad(&total, q)).collect();
            let scalar_energy: Vec<f64> = ch.g_bar.iter().map(|g| quad(&total, g) + p.sigma_e2 - tau / p.eta).collect();
            let big = 1.0 + 10.0 * total.norm() * (1.0 + ch.g_bar.iter().chain(&ch.q_bar).map(|v| v.norm_squared()).fold(0.0, f64::max));
            let pick = |slack: f64| if slack > 0.0 { big * big / slack } else { big };
            sol.omega = scalar_sinr.iter().map(|&v| pick(-v)).collect();
            sol.delta = scalar_int.iter().map(|&v| pick(v)).collect();
            sol.mu = scalar_energy.iter().map(|&v| pick(v)).collect();
            let x = p4.layout.embed(&sol);
            for kk in 0..k {
                let e = block_min_eig(&p4.problem, &x, 4 + kk);
                assert_eq!(e >= -1e-9, -scalar_sinr[kk] >= 0.0, "sinr block {kk}: {e} vs {}", scalar_sinr[kk]);
                let e = block_min_eig(&p4.problem, &x, 4 + k + m + kk);
                assert_eq!(e >= -1e-9, scalar_energy[kk] >= 0.0, "energy block {kk}: {e} vs {}", scalar_energy[kk]);
            }
            for i in 0..m {
                let e = block_min_eig(&p4.problem, &x, 4 + k + i);
                assert_eq!(e >= -1e-9, scalar_int[i] >= 0.0, "interference block {i}");
            }
        }
    }
}

#[test]
fn min_trace_problem_appends_floor() {
    let p = SystemParams::simulation_preset(4, 1.0);
    let ch = generate_channels(&p, 1);
    let p4 = build_p4(&p, &ch, 1.7, 1e-6).unwrap();
    let q = min_trace_problem(&p4, 0.25).unwrap();
    assert_eq!(q.problem.cones.len(), p4.problem.cones.len() + 1);
    assert_eq!(q.problem.cones.last(), Some(&Cone::NonNeg(1)));
    assert_eq!(q.problem.num_rows(), p4.problem.num_rows() + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x: Vec<f64> = (0..p4.layout.num_vars).map(|_| rng.random_range(-1.0..1.0)).collect();
    let w = smat::<Complex64>(&x[p4.layout.w.clone()], 4);
    let cx: f64 = q.problem.c.iter().zip(&x).map(|(c, v)| c * v).sum();
    assert!((cx - w.trace().re).abs() < 1e-12);
    let s = q.problem.b.last().unwrap() - q.problem.a_mul(&x).last().unwrap();
    assert!((s - (x[p4.layout.tau] - 0.25)).abs() < 1e-12);
    assert!(min_trace_problem(&p4, f64::NAN).is_err());
}
