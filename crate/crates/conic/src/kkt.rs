//! Reduced KKT system.
//!
//! The Newton system
//!
//! ```text
//! [ 0   A' ] [x]   [r1]
//! [ A  -H  ] [z] = [r2]
//! ```
//!
//! is reduced by eliminating every non-zero-cone block of `z` through
//! `H^{-1}`. What remains is the quasi-definite system
//!
//! ```text
//! [ A+' H+^{-1} A+ + dI   A0' ] [x ]
//! [ A0                   -dI  ] [z0]
//! ```
//!
//! with `A0` the rows of zero cones. Blocks with a dense scaling contribute
//! `(W^{-T} A)'(W^{-T} A)`, which keeps the conditioning of `W` rather than
//! its square. The matrix is assembled densely, factored once per iteration
//! with an unpivoted LDL', and solutions are refined against the full system
//! with `H` applied through the scalings. The assembly walks only the
//! nonzeros of `A`.

use crate::cones::{HinvBlock, Kernel};
use crate::problem::{Cone, ConicProblem};
use nalgebra::DMatrix;

const STATIC_REG: f64 = 1e-11;
const REFINE_ROUNDS: usize = 4;
/// Diagonal entries below this are regularized as if they had this size.
const MIN_DIAG: f64 = 1e-8;

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a: f64, x| a.max(x.abs()))
}

/// `A` restricted to one cone block. Columns that are multiples of an
/// earlier column share one dense column of `unique`.
struct BlockColumns {
    cols: Vec<usize>,
    /// `(index into unique, factor)` per entry of `cols`.
    map: Vec<(usize, f64)>,
    unique: DMatrix<f64>,
}

fn proportional(base: &[(usize, f64)], other: &[(usize, f64)]) -> Option<f64> {
    if base.len() != other.len() || base.is_empty() {
        return None;
    }
    let f = other[0].1 / base[0].1;
    let ok = base.iter().zip(other).all(|(&(rb, vb), &(ro, vo))| rb == ro && (vo - f * vb).abs() <= 1e-14 * vo.abs());
    if ok && f.is_finite() {
        Some(f)
    } else {
        None
    }
}

pub(crate) struct KktSystem {
    n: usize,
    offsets: Vec<usize>,
    /// `rows[i]` = nonzeros `(col, val)` of row `i` of `A`.
    rows: Vec<Vec<(usize, f64)>>,
    blocks: Vec<BlockColumns>,
    zero_rows: Vec<usize>,
    normal: DMatrix<f64>,
    /// Unregularized reduced matrix and its factor.
    reduced: Vec<f64>,
    factor: Vec<f64>,
    pivots: Vec<f64>,
    /// Signed static regularization per pivot.
    reg: Vec<f64>,
    dim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct FactorFailure;

impl KktSystem {
    pub fn new(p: &ConicProblem) -> Self {
        let n = p.num_vars;
        let m = p.num_rows();
        let offsets = p.cone_offsets();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        for t in &p.a {
            rows[t.row].push((t.col, t.val));
        }
        for r in rows.iter_mut() {
            r.sort_by_key(|e| e.0);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(r.len());
            for &(c, v) in r.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == c => last.1 += v,
                    _ => merged.push((c, v)),
                }
            }
            merged.retain(|e| e.1 != 0.0);
            *r = merged;
        }
        let mut blocks = Vec::with_capacity(p.cones.len());
        let mut zero_rows = Vec::new();
        for (k, cone) in p.cones.iter().enumerate() {
            let (lo, hi) = (offsets[k], offsets[k + 1]);
            if let Cone::Zero(_) = cone {
                zero_rows.extend(lo..hi);
            }
            let mut by_col: std::collections::BTreeMap<usize, Vec<(usize, f64)>> = Default::default();
            for (i, row) in rows.iter().enumerate().take(hi).skip(lo) {
                for &(c, v) in row {
                    by_col.entry(c).or_default().push((i - lo, v));
                }
            }
            let cols: Vec<usize> = by_col.keys().copied().collect();
            let mut reps: Vec<&Vec<(usize, f64)>> = Vec::new();
            let mut map = Vec::with_capacity(cols.len());
            for ent in by_col.values() {
                match reps.iter().enumerate().find_map(|(u, b)| proportional(b, ent).map(|f| (u, f))) {
                    Some(hit) => map.push(hit),
                    None => {
                        map.push((reps.len(), 1.0));
                        reps.push(ent);
                    }
                }
            }
            let mut unique = DMatrix::zeros(hi - lo, reps.len());
            for (u, ent) in reps.iter().enumerate() {
                for &(r, v) in ent.iter() {
                    unique[(r, u)] = v;
                }
            }
            blocks.push(BlockColumns { cols, map, unique });
        }
        let dim = n + zero_rows.len();
        KktSystem {
            n,
            offsets,
            rows,
            blocks,
            zero_rows,
            normal: DMatrix::zeros(n, n),
            reduced: vec![0.0; dim * dim],
            factor: vec![0.0; dim * dim],
            pivots: vec![0.0; dim],
            reg: vec![0.0; dim],
            dim,
        }
    }

    /// Assembles `A+' H^{-1} A+` for the current scalings and factors.
    pub fn factor(&mut self, kernels: &[Kernel]) -> Result<(), FactorFailure> {
        let n = self.n;
        self.normal.fill(0.0);
        for (k, kernel) in kernels.iter().enumerate() {
            match kernel.hinv() {
                HinvBlock::Zero => {}
                HinvBlock::Diag(h) => {
                    for (li, hv) in h.iter().enumerate() {
                        let row = &self.rows[self.offsets[k] + li];
                        for &(i, vi) in row {
                            for &(j, vj) in row {
                                self.normal[(i, j)] += hv * vi * vj;
                            }
                        }
                    }
                }
                HinvBlock::Scaled => {
                    let blk = &self.blocks[k];
                    if blk.cols.is_empty() {
                        continue;
                    }
                    let d = self.offsets[k + 1] - self.offsets[k];
                    // M = W^{-T} A_blk
                    let mm = match kernel.winv_dense() {
                        Some(winv) => winv.transpose() * &blk.unique,
                        None => {
                            let mut winv_t = DMatrix::<f64>::zeros(d, d);
                            let mut unit = vec![0.0; d];
                            for j in 0..d {
                                unit[j] = 1.0;
                                kernel.winv_t_mul(&unit, winv_t.column_mut(j).as_mut_slice());
                                unit[j] = 0.0;
                            }
                            winv_t * &blk.unique
                        }
                    };
                    let gram = mm.transpose() * &mm;
                    for (&cj, &(uj, fj)) in blk.cols.iter().zip(&blk.map) {
                        let src = gram.column(uj);
                        let mut dst = self.normal.column_mut(cj);
                        for (&ci, &(ui, fi)) in blk.cols.iter().zip(&blk.map) {
                            dst[ci] += fi * fj * src[ui];
                        }
                    }
                }
            }
        }

        let dim = self.dim;
        self.reduced.fill(0.0);
        for i in 0..n {
            for j in 0..n {
                self.reduced[i * dim + j] = self.normal[(i, j)];
            }
        }
        for (q, &r) in self.zero_rows.iter().enumerate() {
            for &(c, v) in &self.rows[r] {
                self.reduced[(n + q) * dim + c] = v;
                self.reduced[c * dim + n + q] = v;
            }
        }
        self.factor.copy_from_slice(&self.reduced);
        for i in 0..dim {
            self.reg[i] = if i < n { STATIC_REG * self.normal[(i, i)].abs().max(MIN_DIAG) } else { -STATIC_REG };
            self.factor[i * dim + i] += self.reg[i];
        }
        ldl_in_place(&mut self.factor, &mut self.pivots, &self.reg, dim)
    }

    fn solve_factored(&self, rhs: &mut [f64]) {
        let dim = self.dim;
        let l = &self.factor;
        for i in 0..dim {
            let mut acc = rhs[i];
            for k in 0..i {
                acc -= l[i * dim + k] * rhs[k];
            }
            rhs[i] = acc;
        }
        for i in 0..dim {
            rhs[i] /= self.pivots[i];
        }
        for i in (0..dim).rev() {
            let mut acc = rhs[i];
            for k in (i + 1)..dim {
                acc -= l[k * dim + i] * rhs[k];
            }
            rhs[i] = acc;
        }
    }

    fn solve_reduced(&self, rhs: &[f64]) -> Vec<f64> {
        let dim = self.dim;
        let mut sol = rhs.to_vec();
        self.solve_factored(&mut sol);
        // one round of iterative refinement
        let mut res = rhs.to_vec();
        for i in 0..dim {
            let row = &self.reduced[i * dim..(i + 1) * dim];
            res[i] -= row.iter().zip(&sol).map(|(a, b)| a * b).sum::<f64>();
        }
        self.solve_factored(&mut res);
        for i in 0..dim {
            sol[i] += res[i];
        }
        sol
    }

    /// Solves the full Newton system for `(x, z)` given `r1` (length n) and
    /// `r2` (length m), refining against `H = W'W` applied through the
    /// scalings themselves.
    pub fn solve(&self, kernels: &[Kernel], r1: &[f64], r2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (mut x, mut z) = self.solve_once(kernels, r1, r2);
        let scale = 1.0 + norm_inf(r1).max(norm_inf(r2));
        let (mut e1, mut e2) = self.full_residual(kernels, r1, r2, &x, &z);
        let mut err = norm_inf(&e1).max(norm_inf(&e2));
        for _ in 0..REFINE_ROUNDS {
            if err <= 1e-15 * scale {
                break;
            }
            let (cx, cz) = self.solve_once(kernels, &e1, &e2);
            let xn: Vec<f64> = x.iter().zip(&cx).map(|(a, b)| a + b).collect();
            let zn: Vec<f64> = z.iter().zip(&cz).map(|(a, b)| a + b).collect();
            let (f1, f2) = self.full_residual(kernels, r1, r2, &xn, &zn);
            let next = norm_inf(&f1).max(norm_inf(&f2));
            if next >= err {
                break;
            }
            let done = next > 0.5 * err;
            (x, z, e1, e2, err) = (xn, zn, f1, f2, next);
            if done {
                break;
            }
        }
        (x, z)
    }

    /// `(r1 - A'z, r2 - A x + H z)` with zero-cone blocks of `H` equal to 0.
    fn full_residual(&self, kernels: &[Kernel], r1: &[f64], r2: &[f64], x: &[f64], z: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut e1 = r1.to_vec();
        let mut e2 = r2.to_vec();
        for (i, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                e1[c] -= v * z[i];
                e2[i] -= v * x[c];
            }
        }
        let mut wz = vec![0.0; z.len()];
        let mut hz = vec![0.0; z.len()];
        for (k, kernel) in kernels.iter().enumerate() {
            if kernel.is_zero() {
                continue;
            }
            let r = self.offsets[k]..self.offsets[k + 1];
            kernel.w_mul(&z[r.clone()], &mut wz[r.clone()]);
            kernel.wt_mul(&wz[r.clone()], &mut hz[r.clone()]);
            for i in r {
                e2[i] += hz[i];
            }
        }
        (e1, e2)
    }

    fn solve_once(&self, kernels: &[Kernel], r1: &[f64], r2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.n;
        let m = r2.len();
        // w = H+^{-1} r2 on non-zero blocks
        let hinv_r2 = self.apply_hinv(kernels, r2);
        let mut rhs = vec![0.0; self.dim];
        rhs[..n].copy_from_slice(r1);
        for (k, kernel) in kernels.iter().enumerate() {
            if kernel.is_zero() {
                continue;
            }
            for i in self.offsets[k]..self.offsets[k + 1] {
                for &(c, v) in &self.rows[i] {
                    rhs[c] += v * hinv_r2[i];
                }
            }
        }
        for (q, &r) in self.zero_rows.iter().enumerate() {
            rhs[n + q] = r2[r];
        }
        let sol = self.solve_reduced(&rhs);
        let x = sol[..n].to_vec();
        // z+ = H^{-1}(A+ x - r2+),  z0 from the reduced solve
        let mut ax_minus = vec![0.0; m];
        for (k, kernel) in kernels.iter().enumerate() {
            if kernel.is_zero() {
                continue;
            }
            for i in self.offsets[k]..self.offsets[k + 1] {
                let mut acc = -r2[i];
                for &(c, v) in &self.rows[i] {
                    acc += v * x[c];
                }
                ax_minus[i] = acc;
            }
        }
        let mut z = self.apply_hinv(kernels, &ax_minus);
        for (q, &r) in self.zero_rows.iter().enumerate() {
            z[r] = sol[n + q];
        }
        (x, z)
    }

    /// `H^{-1} v = W^{-1} W^{-T} v` on non-zero blocks, 0 elsewhere.
    fn apply_hinv(&self, kernels: &[Kernel], v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        let mut t = vec![0.0; v.len()];
        for (k, kernel) in kernels.iter().enumerate() {
            let r = self.offsets[k]..self.offsets[k + 1];
            if let HinvBlock::Diag(h) = kernel.hinv() {
                for i in r {
                    out[i] = h[i - self.offsets[k]] * v[i];
                }
            } else if !kernel.is_zero() {
                kernel.winv_t_mul(&v[r.clone()], &mut t[r.clone()]);
                kernel.winv_mul(&t[r.clone()], &mut out[r]);
            }
        }
        out
    }
}

/// Unpivoted LDL' of a quasi-definite matrix stored row-major. Pivot `j` is
/// expected to have the sign of `reg[j]`; a pivot with the wrong sign or
/// magnitude below `|reg[j]|` is replaced by `reg[j]`.
fn ldl_in_place(a: &mut [f64], d: &mut [f64], reg: &[f64], dim: usize) -> Result<(), FactorFailure> {
    let mut work = vec![0.0; dim];
    for j in 0..dim {
        // work[k] = L[j,k] d[k]
        for k in 0..j {
            work[k] = a[j * dim + k] * d[k];
        }
        let mut djj = a[j * dim + j];
        for k in 0..j {
            djj -= a[j * dim + k] * work[k];
        }
        if !djj.is_finite() {
            return Err(FactorFailure);
        }
        let sign = reg[j].signum();
        let floor = reg[j].abs().max(f64::MIN_POSITIVE);
        if djj * sign < floor {
            djj = sign * floor;
        }
        d[j] = djj;
        a[j * dim + j] = 1.0;
        for i in (j + 1)..dim {
            let row_i = &mut a[i * dim..(i + 1) * dim];
            let mut acc = row_i[j];
            for k in 0..j {
                acc -= row_i[k] * work[k];
            }
            row_i[j] = acc / djj;
        }
    }
    // clear the strict upper triangle so solves read only L
    for i in 0..dim {
        for j in (i + 1)..dim {
            a[i * dim + j] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ldl_solves_quasi_definite() {
        // [[4,1,1],[1,3,0],[1,0,-2]]
        let m = [4.0, 1.0, 1.0, 1.0, 3.0, 0.0, 1.0, 0.0, -2.0];
        let mut f = m.to_vec();
        let mut d = vec![0.0; 3];
        ldl_in_place(&mut f, &mut d, &[1e-300, 1e-300, -1e-300], 3).unwrap();
        assert!(d[0] > 0.0 && d[1] > 0.0 && d[2] < 0.0);
        // reconstruct
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| f[i * 3 + k] * d[k] * f[j * 3 + k]).sum();
                assert!((v - m[i * 3 + j]).abs() < 1e-12);
            }
        }
    }
}
