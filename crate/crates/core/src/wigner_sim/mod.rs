//! Phase-space evolution of the mirror's reduced state.

pub mod decoherence;
pub mod evolve;
pub mod observables;
pub mod state;
pub mod stepper;

pub use decoherence::{decoherence_report, run_decoherence, stationary_coefficients, DecoherenceReport, DecoherenceSettings};
pub use evolve::{evolve, CoefficientSource, EvolveOptions, EvolveOutput, Sample};
pub use observables::{characteristic, marginals, observables, Observables};
pub use state::{cat_state, gaussian_state, CatStateSpec, PhaseGrid, WignerState};
pub use stepper::{StepReport, Stepper};
