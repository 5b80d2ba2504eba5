//! Standard-form conic programs.
//!
//! ```text
//! minimize    c'x
//! subject to  b - A x = s,   s in K = K_1 x K_2 x ... x K_p
//! ```
//!
//! `A` is stored as COO triplets. Row blocks follow the order of `cones`.

use crate::error::ConicError;
use crate::field::svec_dim;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// One factor of the product cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cone {
    /// `{0}^d`; the matching dual block is free.
    Zero(usize),
    /// Nonnegative orthant of dimension `d`.
    NonNeg(usize),
    /// Lorentz cone `{(u, v) : u >= ||v||}` of total dimension `d >= 1`.
    SecondOrder(usize),
    /// Real symmetric PSD matrices of side `n`, in real svec form.
    Psd(usize),
    /// Complex Hermitian PSD matrices of side `n`, in complex svec form.
    HermitianPsd(usize),
}

impl Cone {
    /// Number of rows this cone occupies in `b - A x`.
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Zero(d) | Cone::NonNeg(d) | Cone::SecondOrder(d) => d,
            Cone::Psd(n) => svec_dim(n, false),
            Cone::HermitianPsd(n) => svec_dim(n, true),
        }
    }

    /// Barrier degree.
    pub fn degree(&self) -> usize {
        match *self {
            Cone::Zero(_) => 0,
            Cone::NonNeg(d) => d,
            Cone::SecondOrder(d) => usize::from(d > 0),
            Cone::Psd(n) | Cone::HermitianPsd(n) => n,
        }
    }

    fn tag(&self) -> &'static str {
        match self {
            Cone::Zero(_) => "zero",
            Cone::NonNeg(_) => "nonneg",
            Cone::SecondOrder(_) => "soc",
            Cone::Psd(_) => "psd",
            Cone::HermitianPsd(_) => "hpsd",
        }
    }

    fn size_param(&self) -> usize {
        match *self {
            Cone::Zero(d) | Cone::NonNeg(d) | Cone::SecondOrder(d) => d,
            Cone::Psd(n) | Cone::HermitianPsd(n) => n,
        }
    }
}

/// A single nonzero of `A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Triplet {
    pub row: usize,
    pub col: usize,
    pub val: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConicProblem {
    pub num_vars: usize,
    pub c: Vec<f64>,
    pub a: Vec<Triplet>,
    pub b: Vec<f64>,
    pub cones: Vec<Cone>,
}

/// Cone counts in the grouping used for reporting.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConeSummary {
    pub zero: usize,
    pub nonneg: usize,
    pub soc: Vec<usize>,
    /// Side lengths of PSD blocks, real and Hermitian alike.
    pub psd: Vec<usize>,
}

impl ConicProblem {
    pub fn num_rows(&self) -> usize {
        self.b.len()
    }

    pub fn cone_summary(&self) -> ConeSummary {
        let mut s = ConeSummary::default();
        for cone in &self.cones {
            match *cone {
                Cone::Zero(d) => s.zero += d,
                Cone::NonNeg(d) => s.nonneg += d,
                Cone::SecondOrder(d) => s.soc.push(d),
                Cone::Psd(n) | Cone::HermitianPsd(n) => s.psd.push(n),
            }
        }
        s
    }

    /// Row offset of every cone block, plus the total as the last element.
    pub fn cone_offsets(&self) -> Vec<usize> {
        let mut offs = Vec::with_capacity(self.cones.len() + 1);
        let mut acc = 0;
        offs.push(0);
        for cone in &self.cones {
            acc += cone.dim();
            offs.push(acc);
        }
        offs
    }

    pub fn validate(&self) -> Result<(), ConicError> {
        if self.c.len() != self.num_vars {
            return Err(ConicError::Dimension(format!(
                "objective has length {} but num_vars is {}",
                self.c.len(),
                self.num_vars
            )));
        }
        let rows: usize = self.cones.iter().map(Cone::dim).sum();
        if rows != self.b.len() {
            return Err(ConicError::Dimension(format!(
                "cone dimensions sum to {rows} but b has length {}",
                self.b.len()
            )));
        }
        for t in &self.a {
            if t.row >= rows || t.col >= self.num_vars {
                return Err(ConicError::Dimension(format!(
                    "triplet ({}, {}) outside {}x{}",
                    t.row, t.col, rows, self.num_vars
                )));
            }
            if !t.val.is_finite() {
                return Err(ConicError::NonFinite("A"));
            }
        }
        if self.c.iter().any(|v| !v.is_finite()) {
            return Err(ConicError::NonFinite("c"));
        }
        if self.b.iter().any(|v| !v.is_finite()) {
            return Err(ConicError::NonFinite("b"));
        }
        for cone in &self.cones {
            if let Cone::SecondOrder(0) = cone {
                return Err(ConicError::Dimension("empty second-order cone".into()));
            }
        }
        Ok(())
    }

    /// `y = A x`
    pub fn a_mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.num_rows()];
        for t in &self.a {
            y[t.row] += t.val * x[t.col];
        }
        y
    }

    /// `y = A' z`
    pub fn at_mul(&self, z: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.num_vars];
        for t in &self.a {
            y[t.col] += t.val * z[t.row];
        }
        y
    }

    /// Plain-text sparse dump.
    ///
    /// ```text
    /// conic-problem 1
    /// vars <n> rows <m>
    /// cones <p>
    /// <tag> <size>            (p lines; tag in zero|nonneg|soc|psd|hpsd)
    /// c <nnz>
    /// <j> <value>
    /// b <nnz>
    /// <i> <value>
    /// A <nnz>
    /// <i> <j> <value>
    /// ```
    ///
    /// PSD sizes are side lengths. Values use the shortest round-trip
    /// representation, so parsing the dump reproduces the problem bit for bit.
    pub fn to_sparse_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "conic-problem 1");
        let _ = writeln!(out, "vars {} rows {}", self.num_vars, self.num_rows());
        let _ = writeln!(out, "cones {}", self.cones.len());
        for cone in &self.cones {
            let _ = writeln!(out, "{} {}", cone.tag(), cone.size_param());
        }
        let nz_c: Vec<_> = self.c.iter().enumerate().filter(|(_, v)| **v != 0.0).collect();
        let _ = writeln!(out, "c {}", nz_c.len());
        for (j, v) in nz_c {
            let _ = writeln!(out, "{j} {v:?}");
        }
        let nz_b: Vec<_> = self.b.iter().enumerate().filter(|(_, v)| **v != 0.0).collect();
        let _ = writeln!(out, "b {}", nz_b.len());
        for (i, v) in nz_b {
            let _ = writeln!(out, "{i} {v:?}");
        }
        let _ = writeln!(out, "A {}", self.a.len());
        for t in &self.a {
            let _ = writeln!(out, "{} {} {:?}", t.row, t.col, t.val);
        }
        out
    }

    pub fn from_sparse_text(text: &str) -> Result<Self, ConicError> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .enumerate();
        let mut next = |what: &str| -> Result<(usize, Vec<&str>), ConicError> {
            lines
                .next()
                .map(|(i, l)| (i, l.split_whitespace().collect()))
                .ok_or_else(|| ConicError::Parse(format!("unexpected end of input, expected {what}")))
        };
        let bad = |line: usize, msg: &str| ConicError::Parse(format!("line {}: {msg}", line + 1));
        let num = |line: usize, s: &str| -> Result<usize, ConicError> {
            s.parse::<usize>().map_err(|_| bad(line, &format!("bad integer '{s}'")))
        };
        let real = |line: usize, s: &str| -> Result<f64, ConicError> {
            s.parse::<f64>().map_err(|_| bad(line, &format!("bad number '{s}'")))
        };

        let (l, hdr) = next("header")?;
        if hdr != ["conic-problem", "1"] {
            return Err(bad(l, "expected 'conic-problem 1'"));
        }
        let (l, dims) = next("dimensions")?;
        if dims.len() != 4 || dims[0] != "vars" || dims[2] != "rows" {
            return Err(bad(l, "expected 'vars <n> rows <m>'"));
        }
        let num_vars = num(l, dims[1])?;
        let rows = num(l, dims[3])?;
        let (l, cl) = next("cone count")?;
        if cl.len() != 2 || cl[0] != "cones" {
            return Err(bad(l, "expected 'cones <p>'"));
        }
        let mut cones = Vec::new();
        for _ in 0..num(l, cl[1])? {
            let (l, t) = next("cone")?;
            if t.len() != 2 {
                return Err(bad(l, "expected '<tag> <size>'"));
            }
            let k = num(l, t[1])?;
            cones.push(match t[0] {
                "zero" => Cone::Zero(k),
                "nonneg" => Cone::NonNeg(k),
                "soc" => Cone::SecondOrder(k),
                "psd" => Cone::Psd(k),
                "hpsd" => Cone::HermitianPsd(k),
                other => return Err(bad(l, &format!("unknown cone '{other}'"))),
            });
        }
        let mut c = vec![0.0; num_vars];
        let (l, ch) = next("c section")?;
        if ch.len() != 2 || ch[0] != "c" {
            return Err(bad(l, "expected 'c <nnz>'"));
        }
        for _ in 0..num(l, ch[1])? {
            let (l, t) = next("c entry")?;
            if t.len() != 2 {
                return Err(bad(l, "expected '<j> <value>'"));
            }
            let j = num(l, t[0])?;
            if j >= num_vars {
                return Err(bad(l, "column out of range"));
            }
            c[j] = real(l, t[1])?;
        }
        let mut b = vec![0.0; rows];
        let (l, bh) = next("b section")?;
        if bh.len() != 2 || bh[0] != "b" {
            return Err(bad(l, "expected 'b <nnz>'"));
        }
        for _ in 0..num(l, bh[1])? {
            let (l, t) = next("b entry")?;
            if t.len() != 2 {
                return Err(bad(l, "expected '<i> <value>'"));
            }
            let i = num(l, t[0])?;
            if i >= rows {
                return Err(bad(l, "row out of range"));
            }
            b[i] = real(l, t[1])?;
        }
        let (l, ah) = next("A section")?;
        if ah.len() != 2 || ah[0] != "A" {
            return Err(bad(l, "expected 'A <nnz>'"));
        }
        let nnz = num(l, ah[1])?;
        let mut a = Vec::with_capacity(nnz);
        for _ in 0..nnz {
            let (l, t) = next("A entry")?;
            if t.len() != 3 {
                return Err(bad(l, "expected '<i> <j> <value>'"));
            }
            a.push(Triplet {
                row: num(l, t[0])?,
                col: num(l, t[1])?,
                val: real(l, t[2])?,
            });
        }
        let p = ConicProblem {
            num_vars,
            c,
            a,
            b,
            cones,
        };
        p.validate()?;
        Ok(p)
    }
}
