//! Spectral simulation and control synthesis for the linearized Benjamin
//! equation on the torus `T = R / 2πZ`,
//!
//! ```text
//! ∂t u − α H ∂x² u − ∂x³ u + 2μ ∂x u = G h,
//! ```
//!
//! where `H` is the periodic Hilbert transform and `G h = g·(h − ∫ g h)` is a
//! localized, mean-preserving input operator.
//!
//! Everything lives on a truncated Fourier space of modes `k = −n..=n`:
//!
//! - [`spectral`]: truncated periodic functions, Sobolev norms, Hilbert transform.
//! - [`spectrum`]: the dispersion values `λ_k`, clusters of repeated values, gaps.
//! - [`operators`]: the localizer `g`, the control operator `G`, the free group `U(t)`.
//! - [`moment`]: exact controls by the moment method and a Gramian (HUM) oracle.
//! - [`stabilization`]: damping feedback `−GG*`, the rapid-decay feedback
//!   `−GG* L_λ⁻¹`, observability constants and decay-rate fits.
//! - [`scenario`] / [`experiment`]: scenario files, seeded inputs, reports.
//!
//! Ill-conditioned Gram systems (short horizons make the exponentials
//! `e^{iλ_k t}` nearly dependent) are solved in extended precision, see [`mp`].

pub mod decay;
pub mod dense;
pub mod error;
pub mod experiment;
pub mod moment;
pub mod mp;
pub mod operators;
pub mod parallel;
pub mod quadrature;
pub mod random;
pub mod scenario;
pub mod spectral;
pub mod spectrum;
pub mod stabilization;

pub use error::{Error, Result};
pub use experiment::{Artifacts, Report};
pub use moment::{
    BiorthogonalFamily, ControlProblem, ControlSignal, GramianSystem, HumControl, MomentControl,
    MomentReport,
};
pub use operators::{BumpKind, BumpProfile, ControlOperator, MMatrix};
pub use scenario::Scenario;
pub use spectral::TorusFunction;
pub use spectrum::{Exactness, Spectrum};
pub use stabilization::{FeedbackKind, FeedbackLaw, GramianWeighted};

/// Complex scalar used for all double-precision coefficient arithmetic.
pub type C64 = num_complex::Complex64;

/// Version string embedded in every report.
pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");
