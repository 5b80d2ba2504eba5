#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CVec = DVector<Complex64>;
pub type CMat = DMatrix<Complex64>;

pub fn cn<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_vec<R: Rng>(rng: &mut R, n: usize) -> CVec {
    DVector::from_fn(n, |_, _| cn(rng))
}

pub fn random_hermitian<R: Rng>(rng: &mut R, n: usize) -> CMat {
    let m = DMatrix::from_fn(n, n, |_, _| cn(rng));
    (&m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

pub fn random_psd<R: Rng>(rng: &mut R, n: usize, rank: usize) -> CMat {
    let b = DMatrix::from_fn(n, rank, |_, _| cn(rng));
    &b * b.adjoint()
}

/// Uniform point of the complex ball of radius `xi`, or of its surface.
pub fn ball_point<R: Rng>(rng: &mut R, n: usize, xi: f64, surface: bool) -> CVec {
    let d = random_vec(rng, n);
    let norm = d.norm();
    let u: f64 = rng.random();
    let r = if surface { xi } else { xi * u.powf(1.0 / (2 * n) as f64) };
    d * Complex64::new(r / norm, 0.0)
}

pub fn quad(a: &CMat, v: &CVec) -> f64 {
    v.dotc(&(a * v)).re
}

fn into_ball(d: CVec, xi: f64) -> CVec {
    let n = d.norm();
    if n > xi {
        d * Complex64::new(xi / n, 0.0)
    } else {
        d
    }
}

/// Extreme sampled values of `(g + d)^H A (g + d)` over `|d| <= xi`.
///
/// Half the budget is uniform (alternating interior and surface); the rest is a
/// random-walk refinement of the best uniform sample for each sense.
pub fn sampled_range<R: Rng>(rng: &mut R, a: &CMat, g: &CVec, xi: f64, samples: usize) -> (f64, f64) {
    let n = g.len();
    let uniform = samples / 2;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut arg_lo, mut arg_hi) = (CVec::zeros(n), CVec::zeros(n));
    for i in 0..uniform {
        let d = ball_point(rng, n, xi, i % 2 == 0);
        let q = quad(a, &(g + &d));
        if q < lo {
            lo = q;
            arg_lo = d.clone();
        }
        if q > hi {
            hi = q;
            arg_hi = d;
        }
    }
    let walk = (samples - uniform) / 2;
    for (sign, best, arg) in [(1.0, &mut lo, arg_lo), (-1.0, &mut hi, arg_hi)] {
        let mut cur = arg;
        let mut step = 0.5 * xi;
        for _ in 0..walk {
            let cand = into_ball(&cur + random_vec(rng, n) * Complex64::new(step, 0.0), xi);
            let q = quad(a, &(g + &cand));
            if sign * q < sign * *best {
                *best = q;
                cur = cand;
                step *= 1.5;
            } else {
                step = (step * 0.97).max(1e-12 * xi.max(1e-300));
            }
        }
    }
    (lo, hi)
}

/// Gap between an exact extremum and the best sample, relative to the larger
/// of the extremum magnitude and the value spread over the ball.
pub fn relative_gap(exact: f64, sampled: f64, spread: f64) -> f64 {
    (exact - sampled).abs() / exact.abs().max(spread).max(1e-300)
}
