//! Simulation and asymptotic checks for rotationally symmetric mean
//! curvature flow of hypersurfaces `ℝ^m × S^k` that pinch along the axis.

pub mod analysis;
pub mod asymptotics;
pub mod frames;
pub mod geometry;
pub mod harness;
pub mod initial;
pub mod interp;
pub mod matching;
pub mod pde;
pub mod profile;

pub use frames::{
    from_rescaled, from_secondary_frame, secondary_h_identity, to_rescaled, to_secondary_frame,
    FrameError,
};
pub use geometry::{bracket, omega_radius, FlowGeometry, WindowSpec};
pub use initial::InitialData;
pub use matching::{matching_tau, MatchingPoint};
pub use profile::{Frame, GridProfile};
