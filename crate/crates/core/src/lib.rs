//! Numerical kernels for measure transport along Hamiltonian flows.
//!
//! The crate models Hamiltonians that are quadratic in momentum (kinetic,
//! mechanical, time-dependent metric families, and drift systems), computes
//! their curvature operators through canonical moving frames, pushes particle
//! measures along Hamilton-Jacobi characteristics, and verifies convexity and
//! monotonicity inequalities for entropy-type functionals of the transported
//! densities.
//!
//! Layout:
//! - [`chart`], [`expr`], [`field`], [`numeric`]: charts, the expression
//!   grammar, scalar fields with cached derivatives, and small numeric
//!   utilities.
//! - [`geometry`]: metric models, curvature tensors, reference measures, and
//!   scale families driven by curvature flow.
//! - [`hamiltonian`]: Hamiltonian kinds, derivative blocks, Legendre duality.
//! - [`flow`]: fixed-step flow and variational integration with conservation
//!   monitors.
//! - [`curvature`]: canonical frames, the curvature matrix, analytic traces,
//!   initial Hessians, volume distortion.
//! - [`transport`]: particle clouds, Riccati tracks, density transport,
//!   entropy functionals, inequality verifiers, the Bochner identity.
//! - [`sweep`]: randomized frame-vs-analytic curvature cross-validation.

pub mod chart;
pub mod curvature;
pub mod error;
pub mod expr;
pub mod field;
pub mod flow;
pub mod geometry;
pub mod hamiltonian;
pub mod numeric;
pub mod sweep;
pub mod transport;

pub use error::{CoreError, Result};
