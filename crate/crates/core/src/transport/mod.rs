//! Displacement interpolation of measures: Hamilton-Jacobi particle
//! transport, Riccati Hessian tracks, entropy functionals, and the
//! differential inequalities they satisfy.

pub mod bochner;
pub mod functionals;
pub mod hj;
pub mod inequality;
pub mod riccati;

pub use bochner::bochner_check;
pub use functionals::{
    functional_eval, functional_report, EntropyKind, FunctionalReport, FunctionalSpec,
};
pub use hj::{
    gradient_consistency, hj_solve, particle_cloud, InterpolationState, ParticleCloud,
    ParticleState, VolumeDistortionTrack,
};
pub use inequality::{
    inequality_check, InequalityReport, InequalityRow, TheoremCheck, TheoremId,
};
pub use riccati::{riccati_evolve, riccati_residual, RiccatiTrack, CAUSTIC_LOG_THRESHOLD};
