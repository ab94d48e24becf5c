//! Flow geometry and the growing window radius used by the profile fits.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hypersurface `{(x, u(|x|) ω) : x ∈ ℝ^m, ω ∈ S^k}` in `ℝ^{m+k+1}`.
///
/// The default is the four-dimensional flow in ℝ⁵ with axis ℝ³ and circle
/// fibres, whose singularity model is the cylinder of radius √2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowGeometry {
    axis_dim: u32,
    fiber_dim: u32,
}

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("axis dimension must be at least 1 (got {0})")]
    AxisDim(u32),
    #[error("fibre dimension must be at least 1 (got {0})")]
    FiberDim(u32),
}

impl FlowGeometry {
    pub fn new(axis_dim: u32, fiber_dim: u32) -> Result<Self, GeometryError> {
        if axis_dim < 1 {
            return Err(GeometryError::AxisDim(axis_dim));
        }
        if fiber_dim < 1 {
            return Err(GeometryError::FiberDim(fiber_dim));
        }
        Ok(Self { axis_dim, fiber_dim })
    }

    pub fn axis_dim(&self) -> u32 {
        self.axis_dim
    }

    pub fn fiber_dim(&self) -> u32 {
        self.fiber_dim
    }

    /// `m` as a float, for the radial Laplacian.
    pub fn m(&self) -> f64 {
        self.axis_dim as f64
    }

    /// `k` as a float, for the fibre curvature term.
    pub fn k(&self) -> f64 {
        self.fiber_dim as f64
    }

    /// Radius √(2k) of the shrinking cylinder at unit rescaled time.
    pub fn cylinder_radius(&self) -> f64 {
        (2.0 * self.k()).sqrt()
    }
}

impl Default for FlowGeometry {
    fn default() -> Self {
        Self {
            axis_dim: 3,
            fiber_dim: 1,
        }
    }
}

/// Parameters of the window `|y| ≤ multiplier · Ω(τ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub xi0: f64,
    pub multiplier: f64,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self {
            xi0: 0.0,
            multiplier: 1.0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum WindowError {
    #[error("window needs tau > max(1, xi0); got tau = {tau}, xi0 = {xi0}")]
    Domain { tau: f64, xi0: f64 },
    #[error("window parameters invalid: xi0 = {xi0}, multiplier = {multiplier}")]
    Parameters { xi0: f64, multiplier: f64 },
}

impl WindowSpec {
    pub fn new(xi0: f64, multiplier: f64) -> Result<Self, WindowError> {
        if !(xi0.is_finite() && xi0 >= 0.0 && multiplier.is_finite() && multiplier > 0.0) {
            return Err(WindowError::Parameters { xi0, multiplier });
        }
        Ok(Self { xi0, multiplier })
    }

    /// Whether `omega_radius` is defined at `tau`.
    pub fn admits(&self, tau: f64) -> bool {
        tau.is_finite() && tau > 1.0 && tau > self.xi0
    }
}

/// `multiplier · √(100 ln τ + 9 (τ − ξ₀)^{11/10})`.
pub fn omega_radius(tau: f64, window: &WindowSpec) -> Result<f64, WindowError> {
    if !window.admits(tau) {
        return Err(WindowError::Domain {
            tau,
            xi0: window.xi0,
        });
    }
    let inner = 100.0 * tau.ln() + 9.0 * (tau - window.xi0).powf(1.1);
    Ok(window.multiplier * inner.sqrt())
}

/// Japanese bracket ⟨ρ⟩ = √(1 + ρ²).
pub fn bracket(rho: f64) -> f64 {
    rho.hypot(1.0)
}
