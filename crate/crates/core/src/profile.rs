//! Radial profiles: one time slice of `u`, `v` or `h` on a radial grid.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interp::MonotoneCubic;

/// Coordinate frame of a profile. The time variable lives in
/// [`GridProfile::timestamp`]: `t` for unscaled, `τ` for rescaled and `s`
/// for the secondary frame attached to a matching time `τ₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Frame {
    Unscaled,
    Rescaled,
    Secondary { tau1: f64 },
}

impl Frame {
    /// Token used in snapshot headers.
    pub fn token(&self) -> String {
        match self {
            Frame::Unscaled => "unscaled".to_string(),
            Frame::Rescaled => "rescaled".to_string(),
            Frame::Secondary { tau1 } => format!("secondary:{tau1:e}"),
        }
    }

    pub fn parse_token(s: &str) -> Option<Self> {
        match s.trim() {
            "unscaled" => Some(Frame::Unscaled),
            "rescaled" => Some(Frame::Rescaled),
            other => {
                let tau1 = other.strip_prefix("secondary:")?.parse().ok()?;
                Some(Frame::Secondary { tau1 })
            }
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ProfileError {
    #[error("profile needs at least 2 points (got {0})")]
    TooShort(usize),
    #[error("radii and values differ in length ({radii} vs {values})")]
    LengthMismatch { radii: usize, values: usize },
    #[error("radii must start at 0 (got {0})")]
    AxisOffset(f64),
    #[error("radii not strictly increasing at index {0}")]
    NotIncreasing(usize),
    #[error("value at index {index} is not positive and finite: {value}")]
    NonPositive { index: usize, value: f64 },
    #[error("timestamp is not finite: {0}")]
    Timestamp(f64),
}

/// A radial graph `ρ ↦ value` sampled on `radii`, with `radii[0] = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridProfile {
    radii: Vec<f64>,
    values: Vec<f64>,
    frame: Frame,
    timestamp: f64,
}

impl GridProfile {
    pub fn new(
        radii: Vec<f64>,
        values: Vec<f64>,
        frame: Frame,
        timestamp: f64,
    ) -> Result<Self, ProfileError> {
        if radii.len() != values.len() {
            return Err(ProfileError::LengthMismatch {
                radii: radii.len(),
                values: values.len(),
            });
        }
        if radii.len() < 2 {
            return Err(ProfileError::TooShort(radii.len()));
        }
        if radii[0] != 0.0 {
            return Err(ProfileError::AxisOffset(radii[0]));
        }
        if let Some(i) = radii
            .windows(2)
            .position(|w| !(w[1] > w[0]) || !w[1].is_finite())
        {
            return Err(ProfileError::NotIncreasing(i + 1));
        }
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(ProfileError::NonPositive { index, value });
        }
        if !timestamp.is_finite() {
            return Err(ProfileError::Timestamp(timestamp));
        }
        Ok(Self {
            radii,
            values,
            frame,
            timestamp,
        })
    }

    /// Samples `f` on `radii`.
    pub fn from_fn(
        radii: Vec<f64>,
        frame: Frame,
        timestamp: f64,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self, ProfileError> {
        let values = radii.iter().map(|&r| f(r)).collect();
        Self::new(radii, values, frame, timestamp)
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn timestamp(&self) -> f64 {
        self.timestamp
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn extent(&self) -> f64 {
        self.radii[self.radii.len() - 1]
    }

    /// Index and value of the smallest entry (first one on ties).
    pub fn argmin(&self) -> (usize, f64) {
        self.values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc })
    }

    /// One-sided slope at the axis, which vanishes for smooth even profiles
    /// up to the grid resolution.
    pub fn axis_slope(&self) -> f64 {
        (self.values[1] - self.values[0]) / self.radii[1]
    }

    /// Monotone cubic evaluation at `r`; `None` outside the grid.
    pub fn eval(&self, r: f64) -> Option<f64> {
        MonotoneCubic::new(&self.radii, &self.values).eval(r)
    }

    /// Evaluates at many radii, reusing one interpolant.
    pub fn eval_many(&self, rs: &[f64]) -> Vec<Option<f64>> {
        let mc = MonotoneCubic::new(&self.radii, &self.values);
        rs.iter().map(|&r| mc.eval(r)).collect()
    }

    pub(crate) fn into_parts(self) -> (Vec<f64>, Vec<f64>, Frame, f64) {
        (self.radii, self.values, self.frame, self.timestamp)
    }
}
