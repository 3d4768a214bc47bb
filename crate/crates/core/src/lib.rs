//! Strongly symmetric positive (SSP) first-order PDE systems.
//!
//! This crate certifies and solves first-order linear systems
//! `A^i ∂_i v + B v = h` whose coefficients satisfy the strong symmetric
//! positivity conditions: symmetric `A^i`, a positive definite zeroth-order
//! form `Q0 = B + Bᵀ − Σ_i ∂_i A^i`, and a positive definite first-order
//! block form `Q1` with blocks `∂_i A^j + ∂_j A^i`.  On a P-convex domain
//! (boundary characteristic matrix `β = Σ ν_i A^i` positive definite) such
//! systems have unique solutions without any boundary conditions.
//!
//! The crate provides:
//!
//! - [`positivity`]: the quadratic forms, SSP certification by deterministic
//!   sampling, and P-convexity checks for ball domains;
//! - [`ode`]: the 1-D regular-singular model equation with a closed-form
//!   oracle and a no-boundary-condition discrete solve;
//! - [`extension`]: Taylor splitting at a point and extension of a locally
//!   positive system to a globally positive one on a large P-convex ball;
//! - [`grid`] / [`solver`]: central-difference discretization on ball grids,
//!   least-squares solves, and numerical verification of the L²/Hᵏ energy
//!   estimates;
//! - [`smoothing`] / [`iteration`]: mollifier smoothing operators with
//!   measured estimate constants and the Newton-with-smoothing iteration
//!   driven by them;
//! - [`curvature`], [`embedding`], [`certificate`]: the pointwise algebra of
//!   the isometric-embedding linearization for n = 2 and n = 3 — second
//!   fundamental form normal forms, Gauss/Codazzi/annihilator constraint
//!   solvers, and the rank-15 determinant certificate;
//! - [`transform`] / [`pipeline`]: the quadratic change of variables that
//!   renders the linearized embedding system strongly symmetric positive,
//!   and the end-to-end curvature → SSP-certificate pipeline.
//!
//! Core numerics are generic over the scalar type via [`Scalar`]; concrete
//! `f64` aliases are exported at the crate root for everyday use.

pub mod acceptance;
pub mod certificate;
pub mod curvature;
pub mod embedding;
pub mod extension;
pub mod field;
pub mod grid;
pub mod io;
pub mod iteration;
pub mod linalg;
pub mod net;
pub mod ode;
pub mod pipeline;
pub mod positivity;
pub mod quad;
pub mod report;
pub mod smoothing;
pub mod solver;
pub mod sym;
pub mod transform;

mod scalar;

pub use scalar::Scalar;

use thiserror::Error;

/// Default scalar for reports, JSON I/O, and the CLI.
pub type Real = f64;
/// Dense dynamically-sized matrix over [`Real`].
pub type Mat = nalgebra::DMatrix<Real>;
/// Dense dynamically-sized column vector over [`Real`].
pub type Col = nalgebra::DVector<Real>;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },
    #[error("empty sample set")]
    EmptySamples,
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("normal vector is not unit length (|nu| = {0})")]
    NonUnitNormal(f64),
    #[error("degenerate ball domain (radius = {0})")]
    DegenerateBall(f64),
    #[error("homogeneous mode is unbounded at the singular point (C != 0 at x0)")]
    UnboundedAtSingularPoint,
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),
    #[error("grid too coarse to resolve the singular point")]
    GridTooCoarse,
    #[error("remainder budget unreachable: {0}")]
    BudgetUnreachable(String),
    #[error("no P-convex radius among candidates: {0}")]
    NoPConvexRadius(String),
    #[error("mollifier kernel exceeds the extended domain (t = {0})")]
    KernelTooWide(f64),
    #[error("linear solve failed: {0}")]
    SolveFailed(String),
    #[error("iteration diverged after {iters} steps (residual {residual})")]
    IterationDiverged { iters: usize, residual: f64 },
    #[error("curvature data violates a second Bianchi identity (residual {0})")]
    BianchiViolation(f64),
    #[error("zero curvature is outside the scope of the construction")]
    ZeroCurvature,
    #[error("sign rule conflict: signature {signature:?} requires sigma {required}, got {got}")]
    SignRuleConflict {
        signature: (usize, usize),
        required: &'static str,
        got: f64,
    },
    #[error("second fundamental form is degenerate: {0}")]
    DegenerateSff(String),
    #[error("constraint system inconsistent: {0}")]
    InconsistentConstraints(String),
    #[error("trace condition violated ({condition}): residual {residual}")]
    TraceConditionViolated {
        condition: &'static str,
        residual: f64,
    },
    #[error("change of variables residual {residual} above tolerance: {detail}")]
    ChangeOfVarsResidual { residual: f64, detail: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
