//! Per-cone Jordan algebra and Nesterov-Todd scalings.
//!
//! Every block works on slices of the stacked `s`/`z` vectors. The scaled
//! variable `lambda = W z = W^{-T} s` lives in the same coordinate system as
//! the block itself (for PSD blocks it is `svec(diag(lambda))`).

use crate::field::{congruence_matrix, hermitize, smat, svec, Field};
use crate::problem::Cone;
use nalgebra::{Cholesky, DMatrix, SymmetricEigen, SVD};
use num_complex::Complex64;

/// How `H^{-1} = (W'W)^{-1}` enters the normal matrix for one block.
pub(crate) enum HinvBlock<'a> {
    Zero,
    Diag(&'a [f64]),
    /// Assembled as `(W^{-T} A)'(W^{-T} A)`.
    Scaled,
}

pub(crate) struct NonNegKernel {
    w: Vec<f64>,
    lambda: Vec<f64>,
    hinv: Vec<f64>,
}

pub(crate) struct SocKernel {
    eta: f64,
    wbar: Vec<f64>,
    lambda: Vec<f64>,
}

/// Scaling `W(X) = R^H X R`, stored as real matrices in svec coordinates.
pub(crate) struct PsdKernel<T: Field> {
    n: usize,
    w: DMatrix<f64>,
    /// `W^{-1}`
    winv: DMatrix<f64>,
    lambda_diag: Vec<f64>,
    lambda: Vec<f64>,
    _field: std::marker::PhantomData<T>,
}

pub(crate) enum Kernel {
    Zero,
    NonNeg(NonNegKernel),
    Soc(SocKernel),
    Psd(PsdKernel<f64>),
    Hpsd(PsdKernel<Complex64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct ScalingFailure;

impl Kernel {
    pub fn new(cone: Cone) -> Self {
        match cone {
            Cone::Zero(_) => Kernel::Zero,
            Cone::NonNeg(d) => Kernel::NonNeg(NonNegKernel {
                w: vec![1.0; d],
                lambda: vec![1.0; d],
                hinv: vec![1.0; d],
            }),
            Cone::SecondOrder(d) => {
                let mut wbar = vec![0.0; d];
                wbar[0] = 1.0;
                let mut lambda = vec![0.0; d];
                lambda[0] = 1.0;
                Kernel::Soc(SocKernel { eta: 1.0, wbar, lambda })
            }
            Cone::Psd(n) => Kernel::Psd(PsdKernel::identity(n)),
            Cone::HermitianPsd(n) => Kernel::Hpsd(PsdKernel::identity(n)),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Kernel::Zero)
    }

    pub fn hinv(&self) -> HinvBlock<'_> {
        match self {
            Kernel::Zero => HinvBlock::Zero,
            Kernel::NonNeg(k) => HinvBlock::Diag(&k.hinv),
            _ => HinvBlock::Scaled,
        }
    }

    /// `W^{-1}` as a dense matrix for PSD blocks (its transpose is `W^{-T}`).
    pub fn winv_dense(&self) -> Option<&DMatrix<f64>> {
        match self {
            Kernel::Psd(k) => Some(&k.winv),
            Kernel::Hpsd(k) => Some(&k.winv),
            _ => None,
        }
    }

    pub fn lambda(&self) -> &[f64] {
        match self {
            Kernel::Zero => &[],
            Kernel::NonNeg(k) => &k.lambda,
            Kernel::Soc(k) => &k.lambda,
            Kernel::Psd(k) => &k.lambda,
            Kernel::Hpsd(k) => &k.lambda,
        }
    }

    /// Recomputes the NT scaling at the interior pair `(s, z)`.
    pub fn update(&mut self, s: &[f64], z: &[f64]) -> Result<(), ScalingFailure> {
        match self {
            Kernel::Zero => Ok(()),
            Kernel::NonNeg(k) => k.update(s, z),
            Kernel::Soc(k) => k.update(s, z),
            Kernel::Psd(k) => k.update(s, z),
            Kernel::Hpsd(k) => k.update(s, z),
        }
    }

    /// `out = W x`
    pub fn w_mul(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Kernel::Zero => {}
            Kernel::NonNeg(k) => {
                for i in 0..x.len() {
                    out[i] = x[i] * k.w[i];
                }
            }
            Kernel::Soc(k) => k.w_mul(x, out),
            Kernel::Psd(k) => k.w_mul(x, out),
            Kernel::Hpsd(k) => k.w_mul(x, out),
        }
    }

    /// `out = W' y`
    pub fn wt_mul(&self, y: &[f64], out: &mut [f64]) {
        match self {
            Kernel::Zero => {}
            Kernel::NonNeg(k) => {
                for i in 0..y.len() {
                    out[i] = y[i] * k.w[i];
                }
            }
            Kernel::Soc(k) => k.w_mul_sym(y, out),
            Kernel::Psd(k) => k.wt_mul(y, out),
            Kernel::Hpsd(k) => k.wt_mul(y, out),
        }
    }

    /// `out = W^{-1} y`
    pub fn winv_mul(&self, y: &[f64], out: &mut [f64]) {
        match self {
            Kernel::Zero => {}
            Kernel::NonNeg(k) => {
                for i in 0..y.len() {
                    out[i] = y[i] / k.w[i];
                }
            }
            Kernel::Soc(k) => k.winv_mul(y, out),
            Kernel::Psd(k) => k.winv_mul(y, out),
            Kernel::Hpsd(k) => k.winv_mul(y, out),
        }
    }

    /// `out = W^{-T} x`
    pub fn winv_t_mul(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Kernel::Zero => {}
            Kernel::NonNeg(k) => {
                for i in 0..x.len() {
                    out[i] = x[i] / k.w[i];
                }
            }
            Kernel::Soc(k) => k.winv_mul(x, out),
            Kernel::Psd(k) => k.winv_t_mul(x, out),
            Kernel::Hpsd(k) => k.winv_t_mul(x, out),
        }
    }

    /// Solves `lambda o u = v` for `u`.
    pub fn lambda_inv_circ(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Kernel::Zero => {}
            Kernel::NonNeg(k) => {
                for i in 0..v.len() {
                    out[i] = v[i] / k.lambda[i];
                }
            }
            Kernel::Soc(k) => soc_inv_circ(&k.lambda, v, out),
            Kernel::Psd(k) => k.lambda_inv_circ(v, out),
            Kernel::Hpsd(k) => k.lambda_inv_circ(v, out),
        }
    }
}

impl NonNegKernel {
    fn update(&mut self, s: &[f64], z: &[f64]) -> Result<(), ScalingFailure> {
        for i in 0..s.len() {
            if !(s[i] > 0.0 && z[i] > 0.0) {
                return Err(ScalingFailure);
            }
            self.w[i] = (s[i] / z[i]).sqrt();
            self.lambda[i] = (s[i] * z[i]).sqrt();
            self.hinv[i] = z[i] / s[i];
        }
        Ok(())
    }
}

fn soc_jnorm_sq(x: &[f64]) -> f64 {
    x[0] * x[0] - x[1..].iter().map(|v| v * v).sum::<f64>()
}

impl SocKernel {
    fn update(&mut self, s: &[f64], z: &[f64]) -> Result<(), ScalingFailure> {
        let d = s.len();
        let sj = soc_jnorm_sq(s);
        let zj = soc_jnorm_sq(z);
        if !(s[0] > 0.0 && z[0] > 0.0 && sj > 0.0 && zj > 0.0) {
            return Err(ScalingFailure);
        }
        let sn = sj.sqrt();
        let zn = zj.sqrt();
        let sbar: Vec<f64> = s.iter().map(|v| v / sn).collect();
        let zbar: Vec<f64> = z.iter().map(|v| v / zn).collect();
        let dot: f64 = sbar.iter().zip(&zbar).map(|(a, b)| a * b).sum();
        let gamma = ((1.0 + dot) / 2.0).sqrt();
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(ScalingFailure);
        }
        // scaling point w with P(w) zbar = sbar, then wbar = w^{1/2}
        let mut w = vec![0.0; d];
        w[0] = (sbar[0] + zbar[0]) / (2.0 * gamma);
        for i in 1..d {
            w[i] = (sbar[i] - zbar[i]) / (2.0 * gamma);
        }
        let f = (2.0 * (w[0] + 1.0)).sqrt();
        self.wbar[0] = (w[0] + 1.0) / f;
        for i in 1..d {
            self.wbar[i] = w[i] / f;
        }
        self.eta = (sn / zn).sqrt();
        let mut lam = vec![0.0; d];
        self.w_mul(z, &mut lam);
        self.lambda = lam;

        Ok(())
    }

    /// `W x = eta (2 w (w'x) - J x)`
    fn w_mul(&self, x: &[f64], out: &mut [f64]) {
        let wx: f64 = self.wbar.iter().zip(x).map(|(a, b)| a * b).sum();
        out[0] = self.eta * (2.0 * self.wbar[0] * wx - x[0]);
        for i in 1..x.len() {
            out[i] = self.eta * (2.0 * self.wbar[i] * wx + x[i]);
        }
    }

    fn w_mul_sym(&self, y: &[f64], out: &mut [f64]) {
        self.w_mul(y, out)
    }

    /// `W^{-1} x = (2 J w (w'J x) - J x) / eta`
    fn winv_mul(&self, x: &[f64], out: &mut [f64]) {
        let wjx = self.wbar[0] * x[0] - self.wbar[1..].iter().zip(&x[1..]).map(|(a, b)| a * b).sum::<f64>();
        let inv = 1.0 / self.eta;
        out[0] = inv * (2.0 * self.wbar[0] * wjx - x[0]);
        for i in 1..x.len() {
            out[i] = inv * (-2.0 * self.wbar[i] * wjx + x[i]);
        }
    }
}

fn soc_inv_circ(lam: &[f64], v: &[f64], out: &mut [f64]) {
    let l0 = lam[0];
    let det = soc_jnorm_sq(lam);
    let lv: f64 = lam[1..].iter().zip(&v[1..]).map(|(a, b)| a * b).sum();
    let u0 = (l0 * v[0] - lv) / det;
    out[0] = u0;
    for i in 1..lam.len() {
        out[i] = (v[i] - u0 * lam[i]) / l0;
    }
}

fn mat_vec(m: &DMatrix<f64>, x: &[f64], out: &mut [f64]) {
    let d = out.len();
    out.fill(0.0);
    for (col, xj) in m.as_slice().chunks_exact(d).zip(x) {
        if *xj != 0.0 {
            for (o, a) in out.iter_mut().zip(col) {
                *o += a * xj;
            }
        }
    }
}

fn mat_t_vec(m: &DMatrix<f64>, x: &[f64], out: &mut [f64]) {
    let d = x.len();
    for (o, col) in out.iter_mut().zip(m.as_slice().chunks_exact(d)) {
        *o = col.iter().zip(x).map(|(a, b)| a * b).sum();
    }
}

impl<T: Field> PsdKernel<T> {
    fn identity(n: usize) -> Self {
        let d = crate::field::svec_dim(n, T::COMPLEX);
        let lambda = svec(&DMatrix::<T>::identity(n, n));
        PsdKernel {
            n,
            w: DMatrix::identity(d, d),
            winv: DMatrix::identity(d, d),
            lambda_diag: vec![1.0; n],
            lambda,
            _field: std::marker::PhantomData,
        }
    }

    fn update(&mut self, s: &[f64], z: &[f64]) -> Result<(), ScalingFailure> {
        let n = self.n;
        let smat_: DMatrix<T> = smat(s, n);
        let zmat: DMatrix<T> = smat(z, n);
        let ls = Cholesky::new(smat_).ok_or(ScalingFailure)?.l();
        let lz = Cholesky::new(zmat).ok_or(ScalingFailure)?.l();
        let m = lz.adjoint() * &ls;
        let svd = SVD::new(m, true, true);
        let u = svd.u.ok_or(ScalingFailure)?;
        let v_t = svd.v_t.ok_or(ScalingFailure)?;
        let sv = svd.singular_values;
        if sv.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(ScalingFailure);
        }
        // R = Ls V Lambda^{-1/2};  R^{-H} = Lz U Lambda^{-1/2}
        let mut r = ls * v_t.adjoint();
        let mut rinv_h = lz * u;
        for j in 0..n {
            let f = T::from_parts(1.0 / sv[j].sqrt(), 0.0);
            for i in 0..n {
                r[(i, j)] *= f;
                rinv_h[(i, j)] *= f;
            }
        }
        self.w = congruence_matrix(&r.adjoint());
        self.winv = congruence_matrix(&rinv_h);
        self.lambda_diag = sv.iter().copied().collect();
        let mut lam = DMatrix::<T>::zeros(n, n);
        for i in 0..n {
            lam[(i, i)] = T::from_parts(sv[i], 0.0);
        }
        self.lambda = svec(&lam);
        Ok(())
    }

    fn w_mul(&self, x: &[f64], out: &mut [f64]) {
        mat_vec(&self.w, x, out);
    }

    fn wt_mul(&self, y: &[f64], out: &mut [f64]) {
        mat_t_vec(&self.w, y, out);
    }

    fn winv_mul(&self, y: &[f64], out: &mut [f64]) {
        mat_vec(&self.winv, y, out);
    }

    fn winv_t_mul(&self, x: &[f64], out: &mut [f64]) {
        mat_t_vec(&self.winv, x, out);
    }

    fn lambda_inv_circ(&self, v: &[f64], out: &mut [f64]) {
        let mut vm: DMatrix<T> = smat(v, self.n);
        for j in 0..self.n {
            for i in 0..self.n {
                let f = 2.0 / (self.lambda_diag[i] + self.lambda_diag[j]);
                vm[(i, j)] *= T::from_parts(f, 0.0);
            }
        }
        crate::field::svec_into(&vm, out);
    }
}

/// Jordan product `u o v` for a block of the given cone type.
pub(crate) fn circ(cone: Cone, u: &[f64], v: &[f64], out: &mut [f64]) {
    match cone {
        Cone::Zero(_) => {}
        Cone::NonNeg(d) => {
            for i in 0..d {
                out[i] = u[i] * v[i];
            }
        }
        Cone::SecondOrder(d) => {
            out[0] = u.iter().zip(v).map(|(a, b)| a * b).sum();
            for i in 1..d {
                out[i] = u[0] * v[i] + v[0] * u[i];
            }
        }
        Cone::Psd(n) => psd_circ::<f64>(n, u, v, out),
        Cone::HermitianPsd(n) => psd_circ::<Complex64>(n, u, v, out),
    }
}

fn psd_circ<T: Field>(n: usize, u: &[f64], v: &[f64], out: &mut [f64]) {
    let um: DMatrix<T> = smat(u, n);
    let vm: DMatrix<T> = smat(v, n);
    let p = &um * &vm;
    crate::field::svec_into(&hermitize(&p), out);
}

/// Adds `alpha * e` to `x`, `e` the cone identity.
pub(crate) fn add_identity(cone: Cone, x: &mut [f64], alpha: f64) {
    match cone {
        Cone::Zero(_) => {}
        Cone::NonNeg(_) => x.iter_mut().for_each(|v| *v += alpha),
        Cone::SecondOrder(_) => x[0] += alpha,
        Cone::Psd(n) => add_identity_psd(n, false, x, alpha),
        Cone::HermitianPsd(n) => add_identity_psd(n, true, x, alpha),
    }
}

fn add_identity_psd(n: usize, complex: bool, x: &mut [f64], alpha: f64) {
    let mut k = 0;
    for j in 0..n {
        x[k] += alpha;
        k += 1 + (n - j - 1) * if complex { 2 } else { 1 };
    }
}

/// Minimum "eigenvalue" of `x` in the Jordan-algebra sense; `x` is interior
/// iff the value is positive.
pub(crate) fn min_eig(cone: Cone, x: &[f64]) -> f64 {
    match cone {
        Cone::Zero(_) => f64::INFINITY,
        Cone::NonNeg(_) => x.iter().copied().fold(f64::INFINITY, f64::min),
        Cone::SecondOrder(_) => x[0] - x[1..].iter().map(|v| v * v).sum::<f64>().sqrt(),
        Cone::Psd(n) => psd_min_eig::<f64>(n, x),
        Cone::HermitianPsd(n) => psd_min_eig::<Complex64>(n, x),
    }
}

fn psd_min_eig<T: Field>(n: usize, x: &[f64]) -> f64 {
    let m: DMatrix<T> = smat(x, n);
    SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Largest `alpha >= 0` with `x + alpha dx` in the cone (`INFINITY` if unbounded).
/// `x` must be interior.
pub(crate) fn max_step(cone: Cone, x: &[f64], dx: &[f64]) -> f64 {
    match cone {
        Cone::Zero(_) => f64::INFINITY,
        Cone::NonNeg(_) => {
            let mut a = f64::INFINITY;
            for (xi, di) in x.iter().zip(dx) {
                if *di < 0.0 {
                    a = a.min(-xi / di);
                }
            }
            a
        }
        Cone::SecondOrder(_) => soc_max_step(x, dx),
        Cone::Psd(n) => psd_max_step::<f64>(n, x, dx),
        Cone::HermitianPsd(n) => psd_max_step::<Complex64>(n, x, dx),
    }
}

fn soc_max_step(x: &[f64], d: &[f64]) -> f64 {
    // (x + a d)' J (x + a d) >= 0 and x0 + a d0 >= 0
    let a = soc_jnorm_sq(d);
    let b = x[0] * d[0] - x[1..].iter().zip(&d[1..]).map(|(p, q)| p * q).sum::<f64>();
    let c = soc_jnorm_sq(x).max(0.0);
    let mut alpha = f64::INFINITY;
    if d[0] < 0.0 {
        alpha = alpha.min(-x[0] / d[0]);
    }
    // smallest positive root of a t^2 + 2 b t + c
    let disc = b * b - a * c;
    if a.abs() <= 1e-14 * (b.abs() + c) {
        if b < 0.0 {
            alpha = alpha.min(-c / (2.0 * b));
        }
    } else if disc >= 0.0 {
        let sq = disc.sqrt();
        let q = -(b + b.signum() * sq);
        let r1 = q / a;
        let r2 = if q != 0.0 { c / q } else { f64::INFINITY };
        for r in [r1, r2] {
            if r > 0.0 {
                alpha = alpha.min(r);
            }
        }
    }
    alpha
}

fn psd_max_step<T: Field>(n: usize, x: &[f64], dx: &[f64]) -> f64 {
    let xm: DMatrix<T> = smat(x, n);
    let dm: DMatrix<T> = smat(dx, n);
    let l = match Cholesky::new(xm) {
        Some(c) => c.l(),
        None => return 0.0,
    };
    let y = match l.solve_lower_triangular(&dm) {
        Some(y) => y,
        None => return 0.0,
    };
    let m = match l.solve_lower_triangular(&y.adjoint()) {
        Some(m) => m,
        None => return 0.0,
    };
    let lmin = SymmetricEigen::new(hermitize(&m))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if lmin < 0.0 {
        -1.0 / lmin
    } else {
        f64::INFINITY
    }
}
