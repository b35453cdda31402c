//! Numerical verification of sharp spectral and heat-kernel inequalities for
//! Schrödinger operators `-Δ + q` with convex potentials on convex domains.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`] rasterizes convex domains onto uniform grids.
//! * [`operator`] assembles Dirichlet and Neumann/drift matrices and provides
//!   discrete gradients and Hessians.
//! * [`eigen`] computes the lowest eigenpairs with certified residuals.
//! * [`model1d`] is the closed-form one-dimensional oracle (interval
//!   eigenfunctions, the tangent barrier, free and Dirichlet heat kernels).
//! * [`modulus`] evaluates the expansion-modulus and log-concavity checks on
//!   `X = -∇log φ₀`.
//! * [`heat`] builds Dirichlet heat kernels and checks their log-concavity
//!   comparison and decay.
//! * [`bounds`] turns eigenvalues into pass/marginal/fail verdicts against the
//!   gap and lower-bound inequalities.

pub mod bounds;
pub mod eigen;
mod error;
pub mod geometry;
pub mod heat;
pub mod linalg;
pub mod model1d;
pub mod modulus;
pub mod operator;
pub mod par;
pub mod report;

pub use error::Error;

/// Two-dimensional point; one-dimensional problems use only the first
/// coordinate and keep the second at zero.
pub type Point = [f64; 2];

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
}
