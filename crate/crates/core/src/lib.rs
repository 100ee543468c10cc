//! Pseudo-spectral simulation of the shear-advected parabolic-parabolic
//! Keller-Segel system on periodic tori, with the passive-scalar and
//! `x`-averaged reductions, monitored functionals and numerical checks of
//! the associated variational identities and heat-semigroup bounds.
//!
//! All tori have side `2π`; axis 0 is the shear direction `x`.

pub mod diagnostics;
pub mod field;
pub mod flows;
pub mod grid;
pub mod lab;
pub mod model;
pub mod solver;
pub mod spectral;

pub use field::{Field, FieldData, Representation, SpectralError};
pub use flows::{FlowKind, FlowSpec};
pub use grid::{GridError, TorusGrid};
pub use model::{Form, ModelParams, PksState};
pub use solver::{RunControl, RunOutcome, RunSink, SolverError};
pub use rustfft::num_complex::Complex64;
