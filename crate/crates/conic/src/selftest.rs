//! Built-in regression suite with analytically known optima.

use crate::certificate::check_certificate;
use crate::field::{svec, Field};
use crate::problem::{Cone, ConicProblem, Triplet};
use crate::solver::{solve, SolveStatus, SolverSettings};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Residual and gap ceiling for a case to pass.
pub const SELFTEST_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfTestCase {
    pub name: String,
    pub status: SolveStatus,
    pub objective: f64,
    pub expected: f64,
    pub abs_error: f64,
    /// Error allowed on the objective.
    pub objective_tol: f64,
    pub gap: f64,
    pub prim_res: f64,
    pub dual_res: f64,
    pub iterations: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfTestReport {
    pub cases: Vec<SelfTestCase>,
    pub wallclock_s: f64,
    pub passed: bool,
}

/// `min t  s.t.  t I - m >= 0`, whose optimum is `lambda_max(m)`.
pub fn lambda_max_problem<T: Field>(m: &DMatrix<T>) -> ConicProblem {
    let n = m.nrows();
    let cone = if T::COMPLEX { Cone::HermitianPsd(n) } else { Cone::Psd(n) };
    let a = svec(&DMatrix::<T>::identity(n, n))
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(row, v)| Triplet { row, col: 0, val: -v })
        .collect();
    ConicProblem {
        num_vars: 1,
        c: vec![1.0],
        a,
        b: svec(&(-m)),
        cones: vec![cone],
    }
}

/// Lovasz theta of a graph as `min t  s.t.  t I - J - sum_E y_ij (E_ij + E_ji) >= 0`.
pub fn lovasz_theta_problem(n: usize, edges: &[(usize, usize)]) -> ConicProblem {
    let mut a = Vec::new();
    let mut push_col = |col: usize, m: &DMatrix<f64>| {
        for (row, v) in svec(m).into_iter().enumerate() {
            if v != 0.0 {
                a.push(Triplet { row, col, val: v });
            }
        }
    };
    push_col(0, &-DMatrix::<f64>::identity(n, n));
    for (k, &(i, j)) in edges.iter().enumerate() {
        let mut e = DMatrix::<f64>::zeros(n, n);
        e[(i, j)] = 1.0;
        e[(j, i)] = 1.0;
        push_col(1 + k, &e);
    }
    let mut c = vec![0.0; 1 + edges.len()];
    c[0] = 1.0;
    ConicProblem {
        num_vars: 1 + edges.len(),
        c,
        a,
        b: svec(&-DMatrix::<f64>::from_element(n, n, 1.0)),
        cones: vec![Cone::Psd(n)],
    }
}

/// Transportation LP: supplies (3, 2), demands (1, 4), costs [[1, 3], [2, 1]].
fn transport_lp() -> (ConicProblem, f64) {
    // x = (x11, x12, x21, x22), supplies are equalities, demands >=.
    let tri = |row, col, val| Triplet { row, col, val };
    let p = ConicProblem {
        num_vars: 4,
        c: vec![1.0, 3.0, 2.0, 1.0],
        a: vec![
            tri(0, 0, 1.0),
            tri(0, 1, 1.0),
            tri(1, 2, 1.0),
            tri(1, 3, 1.0),
            // demand: x11 + x21 >= 1, x12 + x22 >= 4
            tri(2, 0, -1.0),
            tri(2, 2, -1.0),
            tri(3, 1, -1.0),
            tri(3, 3, -1.0),
            tri(4, 0, -1.0),
            tri(5, 1, -1.0),
            tri(6, 2, -1.0),
            tri(7, 3, -1.0),
        ],
        b: vec![3.0, 2.0, -1.0, -4.0, 0.0, 0.0, 0.0, 0.0],
        cones: vec![Cone::Zero(2), Cone::NonNeg(6)],
    };
    // x22 = 2, x12 = 2, x11 = 1: cost 1 + 6 + 2 = 9
    (p, 9.0)
}

fn path_laplacian(n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = 2.0;
        if i + 1 < n {
            m[(i, i + 1)] = -1.0;
            m[(i + 1, i)] = -1.0;
        }
    }
    m
}

fn run_case(name: &str, p: &ConicProblem, expected: f64, objective_tol: f64) -> SelfTestCase {
    let sol = solve(p, &SolverSettings::default());
    match sol {
        Ok(sol) => {
            let m = check_certificate(p, &sol);
            let abs_error = (m.pobj - expected).abs();
            let passed = sol.status == SolveStatus::Optimal
                && m.gap <= SELFTEST_TOL
                && m.prim_res <= SELFTEST_TOL
                && m.dual_res <= SELFTEST_TOL
                && abs_error <= objective_tol;
            SelfTestCase {
                name: name.to_string(),
                status: sol.status,
                objective: m.pobj,
                expected,
                abs_error,
                objective_tol,
                gap: m.gap,
                prim_res: m.prim_res,
                dual_res: m.dual_res,
                iterations: sol.iterations,
                passed,
            }
        }
        Err(_) => SelfTestCase {
            name: name.to_string(),
            status: SolveStatus::NumericalError,
            objective: f64::NAN,
            expected,
            abs_error: f64::INFINITY,
            objective_tol,
            gap: f64::INFINITY,
            prim_res: f64::INFINITY,
            dual_res: f64::INFINITY,
            iterations: 0,
            passed: false,
        },
    }
}

/// Runs the LP, lambda-max and theta(C5) cases.
pub fn self_test() -> SelfTestReport {
    let start = Instant::now();
    let mut cases = Vec::new();

    let (lp, lp_opt) = transport_lp();
    cases.push(run_case("lp_transport", &lp, lp_opt, 1e-7));

    // eigenvalues of the path Laplacian on 5 nodes: 2 - 2 cos(k pi / 6)
    let lap = path_laplacian(5);
    let lap_max = 2.0 + 2.0 * (std::f64::consts::PI / 6.0).cos();
    cases.push(run_case("lambda_max_path5", &lambda_max_problem(&lap), lap_max, 1e-7));

    let mut herm = DMatrix::<Complex64>::zeros(2, 2);
    herm[(0, 0)] = Complex64::new(2.0, 0.0);
    herm[(1, 1)] = Complex64::new(2.0, 0.0);
    herm[(0, 1)] = Complex64::new(0.0, 1.0);
    herm[(1, 0)] = Complex64::new(0.0, -1.0);
    cases.push(run_case("lambda_max_hermitian", &lambda_max_problem(&herm), 3.0, 1e-7));

    let c5: Vec<_> = (0..5).map(|i| (i, (i + 1) % 5)).collect();
    cases.push(run_case(
        "lovasz_theta_c5",
        &lovasz_theta_problem(5, &c5),
        5f64.sqrt(),
        1e-5,
    ));

    let passed = cases.iter().all(|c| c.passed);
    SelfTestReport {
        cases,
        wallclock_s: start.elapsed().as_secs_f64(),
        passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        let r = self_test();
        for c in &r.cases {
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn transport_optimum_is_a_vertex_cost() {
        // brute force over integer shipments, which contain an optimal vertex
        let mut best = f64::INFINITY;
        for x11 in 0..=3 {
            for x21 in 0..=2 {
                let (x12, x22) = (3 - x11, 2 - x21);
                if x11 + x21 >= 1 && x12 + x22 >= 4 {
                    best = best.min((x11 + 3 * x12 + 2 * x21 + x22) as f64);
                }
            }
        }
        assert_eq!(best, transport_lp().1);
    }
}
