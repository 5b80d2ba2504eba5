//! Scalar fields for PSD blocks and the scaled-vector (svec) embedding.
//!
//! A Hermitian `n x n` matrix is stored as a real vector by walking the lower
//! triangle column by column. Diagonal entries are stored as-is; each strictly
//! lower entry contributes `sqrt(2) * re` and, for complex blocks, a following
//! `sqrt(2) * im`. With this scaling `<svec(X), svec(Y)> = trace(X Y)`.

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;
use std::f64::consts::SQRT_2;

/// Scalar type usable inside a PSD block: `f64` for real symmetric blocks,
/// `Complex64` for Hermitian blocks.
pub trait Field: ComplexField<RealField = f64> + Copy {
    const COMPLEX: bool;
    fn from_parts(re: f64, im: f64) -> Self;
    fn parts(self) -> (f64, f64);
}

impl Field for f64 {
    const COMPLEX: bool = false;
    #[inline]
    fn from_parts(re: f64, _im: f64) -> Self {
        re
    }
    #[inline]
    fn parts(self) -> (f64, f64) {
        (self, 0.0)
    }
}

impl Field for Complex64 {
    const COMPLEX: bool = true;
    #[inline]
    fn from_parts(re: f64, im: f64) -> Self {
        Complex64::new(re, im)
    }
    #[inline]
    fn parts(self) -> (f64, f64) {
        (self.re, self.im)
    }
}

/// Length of the svec of an `n x n` block.
pub fn svec_dim(n: usize, complex: bool) -> usize {
    if complex {
        n * n
    } else {
        n * (n + 1) / 2
    }
}

/// Writes `svec(m)` into `out`, which must have length `svec_dim(n, T::COMPLEX)`.
/// Only the lower triangle of `m` is read.
pub fn svec_into<T: Field>(m: &DMatrix<T>, out: &mut [f64]) {
    let n = m.nrows();
    debug_assert_eq!(out.len(), svec_dim(n, T::COMPLEX));
    let mut k = 0;
    for j in 0..n {
        out[k] = m[(j, j)].parts().0;
        k += 1;
        for i in (j + 1)..n {
            let (re, im) = m[(i, j)].parts();
            out[k] = SQRT_2 * re;
            k += 1;
            if T::COMPLEX {
                out[k] = SQRT_2 * im;
                k += 1;
            }
        }
    }
}

pub fn svec<T: Field>(m: &DMatrix<T>) -> Vec<f64> {
    let mut out = vec![0.0; svec_dim(m.nrows(), T::COMPLEX)];
    svec_into(m, &mut out);
    out
}

/// Inverse of [`svec`]; the result is exactly Hermitian.
pub fn smat<T: Field>(v: &[f64], n: usize) -> DMatrix<T> {
    debug_assert_eq!(v.len(), svec_dim(n, T::COMPLEX));
    let mut m = DMatrix::<T>::zeros(n, n);
    let mut k = 0;
    for j in 0..n {
        m[(j, j)] = T::from_parts(v[k], 0.0);
        k += 1;
        for i in (j + 1)..n {
            let re = v[k] / SQRT_2;
            k += 1;
            let im = if T::COMPLEX {
                k += 1;
                v[k - 1] / SQRT_2
            } else {
                0.0
            };
            m[(i, j)] = T::from_parts(re, im);
            m[(j, i)] = T::from_parts(re, -im);
        }
    }
    m
}

/// Real matrix of `X -> Q X Q^H` in svec coordinates.
pub(crate) fn congruence_matrix<T: Field>(q: &DMatrix<T>) -> DMatrix<f64> {
    let n = q.nrows();
    let d = svec_dim(n, T::COMPLEX);
    let mut out = DMatrix::<f64>::zeros(d, d);
    let h = 1.0 / SQRT_2;
    let mut col = 0;
    // image of the basis matrix with entry b at (i, j) and conj(b) at (j, i)
    let put = |out: &mut DMatrix<f64>, col: usize, i: usize, j: usize, b: T| {
        let mut dst = out.column_mut(col);
        let mut k = 0;
        for l in 0..n {
            for r in l..n {
                let mut v = b * q[(r, i)] * q[(l, j)].conjugate();
                if i != j {
                    v += b.conjugate() * q[(r, j)] * q[(l, i)].conjugate();
                }
                let (re, im) = v.parts();
                if r == l {
                    dst[k] = re;
                    k += 1;
                } else {
                    dst[k] = SQRT_2 * re;
                    k += 1;
                    if T::COMPLEX {
                        dst[k] = SQRT_2 * im;
                        k += 1;
                    }
                }
            }
        }
    };
    for j in 0..n {
        put(&mut out, col, j, j, T::one());
        col += 1;
        for i in (j + 1)..n {
            put(&mut out, col, i, j, T::from_parts(h, 0.0));
            col += 1;
            if T::COMPLEX {
                put(&mut out, col, i, j, T::from_parts(0.0, h));
                col += 1;
            }
        }
    }
    out
}

/// Hermitian part `(m + m^H) / 2`.
pub fn hermitize<T: Field>(m: &DMatrix<T>) -> DMatrix<T> {
    let half = T::from_parts(0.5, 0.0);
    (m + m.adjoint()) * half
}
