//! Initial-data families.

use serde::{Deserialize, Serialize};

use crate::profile::{Frame, GridProfile, ProfileError};

/// Named families of radially symmetric initial graphs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InitialData {
    /// `u₀(r) = c₀ + c₂ r²/(1 + r²/R²)`: a bounded graph with a
    /// nondegenerate quadratic minimum on the axis.
    GenericPinch { c0: f64, c2: f64, r_scale: f64 },
    /// `u₀ ≡ radius`.
    Cylinder { radius: f64 },
}

impl InitialData {
    pub fn family(&self) -> &'static str {
        match self {
            InitialData::GenericPinch { .. } => "generic_pinch",
            InitialData::Cylinder { .. } => "cylinder",
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            InitialData::GenericPinch { c0, c2, r_scale } => {
                let q = r / r_scale;
                c0 + c2 * r * r / (1.0 + q * q)
            }
            InitialData::Cylinder { radius } => radius,
        }
    }

    pub fn profile(&self, radii: Vec<f64>) -> Result<GridProfile, ProfileError> {
        GridProfile::from_fn(radii, Frame::Unscaled, 0.0, |r| self.eval(r))
    }
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData::GenericPinch {
            c0: 0.9 * std::f64::consts::SQRT_2,
            c2: 0.05,
            r_scale: 5.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generic_family_shape() {
        let d = InitialData::GenericPinch { c0: 1.0, c2: 2.0, r_scale: 5.0 };
        assert_eq!(d.eval(0.0), 1.0);
        assert!((d.eval(5.0) - (1.0 + 2.0 * 25.0 / 2.0)).abs() < 1e-14);
        // bounded by c0 + c2 R²
        assert!(d.eval(1e6) < 1.0 + 2.0 * 25.0);
    }

    #[test]
    fn cylinder_is_flat() {
        let p = InitialData::Cylinder { radius: 3.0 }
            .profile(vec![0.0, 0.5, 1.0])
            .unwrap();
        assert_eq!(p.values(), &[3.0, 3.0, 3.0]);
    }
}
