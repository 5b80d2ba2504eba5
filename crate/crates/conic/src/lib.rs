//! Dense primal-dual interior-point solver for conic programs over products of
//! zero, nonnegative, second-order, real PSD and complex Hermitian PSD cones.
//!
//! Problems are posed as
//!
//! ```text
//! minimize c'x   subject to   b - A x in K
//! ```
//!
//! and solved through a homogeneous self-dual embedding with Nesterov-Todd
//! scaling and Mehrotra predictor-corrector steps. PSD blocks use the svec
//! representation (see [`field`]), so inner products are Euclidean.

pub mod certificate;
mod cones;
pub mod error;
pub mod field;
mod kkt;
pub mod problem;
pub mod selftest;
pub mod solver;

pub use certificate::{check_certificate, CertificateMargins};
pub use error::ConicError;
pub use selftest::{self_test, SelfTestReport};
pub use problem::{Cone, ConeSummary, ConicProblem, Triplet};
pub use solver::{solve, ConicSolution, SolveStatus, SolverSettings};
