//! Monitored quantities: x-average decomposition, the `F_M` functional,
//! free energy, decay-rate fits, envelope checks and blow-up detection.

mod blowup;
mod decompose;
mod fit;
mod functionals;

use thiserror::Error;

pub use blowup::{blowup_check, BlowUpReason, BlowUpSignal};
pub use decompose::{extend_along_x, remainder, x_average};
pub use fit::{
    check_envelope, fit_decay, fit_decay_default, scaling_exponent, DecayFit, Envelope, ScalingFit,
    DEFAULT_WINDOW, ENVELOPE_CONSTANT,
};
pub use functionals::{
    free_energy, functional_f_m, grad_remainder_l2, remainder_l2, sample_functionals, FreeEnergy,
    FunctionalValues, CSV_HEADER,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("input is not x-mean-free (max |⟨f⟩| = {0:e})")]
    NotARemainder(f64),
    #[error("density drops to {min:e}, below the tolerance -{tol:e}")]
    NegativeDensity {
        min: f64,
        tol: f64,
        /// Values computed with the negative part clamped.
        values: FreeEnergy,
    },
    #[error("cannot fit a logarithm to non-positive value {0}")]
    CannotFitLog(f64),
    #[error("need at least {need} samples in the fit window, got {got}")]
    InsufficientData { need: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
