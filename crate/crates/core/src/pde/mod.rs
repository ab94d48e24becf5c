//! Finite-difference solver for the rotationally symmetric flow.

pub mod grid;
pub mod rhs;
pub mod run;
pub mod stepper;
pub mod tridiag;

pub use grid::{build_grid, renormalized_grid, Refinement};
pub use rhs::{mcf_rhs, rescaled_rhs, RhsError};
pub use run::{
    estimate_blowup_time, integrate_rescaled, integrate_unscaled, run_to_pinch, step,
    BlowupError, BlowupEstimate, MinRadiusSample, OuterBc, RunRecord, RunStatus, SolverConfig,
    SolverError, SwitchInfo,
};
pub use stepper::{BoundaryRow, StepError, Stepper};
