//! # cqmorph
//!
//! Decides when a binary family of classical probability distributions
//! `{p_0, p_1}` can be converted into a binary family of quantum states
//! `{sigma_0, sigma_1}` by a single channel, i.e. whether there is a CPTP
//! map `G` with `G(p_theta) = sigma_theta` for both values of `theta`.
//!
//! The toolkit is organised around f-divergences:
//!
//! - [`divergence`] — classical f-divergence, the maximal quantum
//!   f-divergence in closed form for operator convex test functions, and
//!   the reverse-test construction that attains it for every convex
//!   function at once.
//! - [`convexfn`] — a registry of convex test functions on `[0, inf)`
//!   with their limit slopes and operator-convexity flags, including the
//!   Loewner integral representation.
//! - [`feasibility`] — ground-truth oracles: a phase-1 simplex LP for
//!   classical-to-classical conversion, Dykstra alternating projections
//!   for classical-to-quantum conversion, majorization for uniform
//!   second coordinates, and the closed-form pure-target criterion with
//!   an explicit channel.
//! - [`criteria`] — the divergence-based decision procedures: necessary
//!   scans over operator convex families, sufficiency via resolvent and
//!   power equalities, and sufficiency via reverse test plus LP.
//! - [`counterexample`] — a three-point construction showing that the
//!   divergence inequalities for *all operator convex* functions are not
//!   sufficient for convertibility, plus a randomized operator-Jensen
//!   violation search for non-operator-convex functions.
//! - [`linalg`] — dense Hermitian linear algebra (Jacobi
//!   eigendecomposition, spectral calculus, support projectors,
//!   pseudo-inverses, Schur complements) sized for small dimensions.
//!
//! All numerics are plain `f64` with complex entries stored as pairs of
//! 64-bit floats. Extended reals (`+inf`) are in-band values: a divergence
//! may legitimately be infinite and comparisons account for that.

use thiserror::Error;

pub mod convexfn;
pub mod counterexample;
pub mod criteria;
pub mod divergence;
pub mod ext;
pub mod feasibility;
pub mod grids;
pub mod instance;
pub mod linalg;
pub mod sampling;

pub use convexfn::ConvexFn;
pub use divergence::{ClassicalPair, ProbVector, QuantumPair};
pub use feasibility::{CQChannel, FeasibilityReport, FeasibilityStatus};
pub use linalg::{DensityOp, HermitianOp};

/// Errors for all operations in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),

    #[error("invalid probability vector: {0}")]
    InvalidProbability(String),

    #[error("invalid density operator: {0}")]
    InvalidDensity(String),

    #[error("function is undefined (NaN) at eigenvalue {0}")]
    Domain(f64),

    #[error("spectral image is infinite at eigenvalue {0}")]
    InfiniteSpectrum(f64),

    #[error("parameter out of range: {0}")]
    InvalidParameter(String),

    #[error("linear system is singular beyond tolerance (residual {0:.3e})")]
    SingularSystem(f64),

    #[error("`{0}` is not flagged operator convex; the closed formula does not apply")]
    NotOperatorConvex(String),

    #[error("sigma1 is not a pure state (rank {0})")]
    NotPureTarget(usize),

    #[error("no root with b > c0 in (c0, 1) for {0}")]
    NoUpperRoot(String),

    #[error("invalid triple: {0}")]
    InvalidTriple(String),

    #[error("search failed: {0}")]
    SearchFailure(String),

    #[error("malformed instance: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
