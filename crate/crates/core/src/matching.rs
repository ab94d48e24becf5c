//! The matching time `τ₁(|x₁|)` at which a fixed radius reaches the edge
//! `|y| = τ^{11/20}` of the parabolic window.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exponent of the matching window, `1/2 + 1/20`.
pub const MATCH_EXP: f64 = 0.55;

/// Location of the minimum of `f(τ) = τ/2 + ln x − (11/20) ln τ`.
const F_ARGMIN: f64 = 2.0 * MATCH_EXP;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchingPoint {
    x1_norm: f64,
    tau1: f64,
    t1: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum MatchingError {
    #[error("x1 must lie in (0, 1) and be finite (got {0})")]
    Domain(f64),
    #[error("no matching time exists for x1 = {x1}; the largest admissible value is {x_max}")]
    NoRoot { x1: f64, x_max: f64 },
    #[error("matching time must exceed {min} (got {0})", min = F_ARGMIN)]
    Tau(f64),
}

impl MatchingPoint {
    /// Point whose matching time is exactly `tau1`.
    pub fn from_tau(tau1: f64) -> Result<Self, MatchingError> {
        if !(tau1.is_finite() && tau1 > F_ARGMIN) {
            return Err(MatchingError::Tau(tau1));
        }
        let x1_norm = (MATCH_EXP * tau1.ln() - 0.5 * tau1).exp();
        Ok(Self {
            x1_norm,
            tau1,
            t1: -(-tau1).exp(),
        })
    }

    pub fn x1_norm(&self) -> f64 {
        self.x1_norm
    }

    pub fn tau1(&self) -> f64 {
        self.tau1
    }

    /// `−e^{−τ₁}`, measured from the singular time.
    pub fn t1(&self) -> f64 {
        self.t1
    }

    /// `|e^{τ₁/2}x₁ − τ₁^{11/20}|`.
    pub fn residual(&self) -> f64 {
        ((0.5 * self.tau1).exp() * self.x1_norm - self.tau1.powf(MATCH_EXP)).abs()
    }

    /// Position `τ₁^{11/20}` of `x₁` in the rescaled frame at `τ₁`.
    pub fn y1(&self) -> f64 {
        self.tau1.powf(MATCH_EXP)
    }
}

/// Largest `x₁` for which a matching time exists.
pub fn max_matchable_x1() -> f64 {
    (MATCH_EXP * F_ARGMIN.ln() - 0.5 * F_ARGMIN).exp()
}

fn f(tau: f64, ln_x: f64) -> f64 {
    0.5 * tau + ln_x - MATCH_EXP * tau.ln()
}

/// Solves `e^{τ/2}x₁ = τ^{11/20}` for its largest root.
///
/// `f` is convex with its minimum at `τ = 1.1`, so the largest root is
/// bracketed on `[1.1, ∞)` and found by bisection with a Newton polish.
pub fn matching_tau(x1_norm: f64) -> Result<MatchingPoint, MatchingError> {
    if !(x1_norm.is_finite() && x1_norm > 0.0 && x1_norm < 1.0) {
        return Err(MatchingError::Domain(x1_norm));
    }
    let ln_x = x1_norm.ln();
    let x_max = max_matchable_x1();
    if x1_norm > x_max {
        return Err(MatchingError::NoRoot { x1: x1_norm, x_max });
    }
    let mut lo = F_ARGMIN;
    let mut hi = 2.0 * F_ARGMIN;
    while f(hi, ln_x) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid, ln_x) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut tau = hi;
    for _ in 0..3 {
        let d = 0.5 - MATCH_EXP / tau;
        if d <= 0.0 {
            break;
        }
        let next = tau - f(tau, ln_x) / d;
        if !(next > F_ARGMIN) {
            break;
        }
        tau = next;
    }
    Ok(MatchingPoint {
        x1_norm,
        tau1: tau,
        t1: -(-tau).exp(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_ten_example() {
        let x1 = 10f64.powf(0.55) * (-5f64).exp();
        assert!((x1 - 0.02391).abs() < 5e-6);
        let mp = matching_tau(x1).unwrap();
        assert!((mp.tau1() - 10.0).abs() < 1e-10);
        assert_eq!(mp.t1(), -(-mp.tau1()).exp());
    }

    #[test]
    fn tiny_radius_example() {
        // Oracle: independent bisection of f on [1.1, 100] to 1e-12.
        let ln_x = (1e-8f64).ln();
        let (mut lo, mut hi) = (1.1, 100.0);
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if 0.5 * mid + ln_x - 0.55 * mid.ln() < 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        let mp = matching_tau(1e-8).unwrap();
        assert!((mp.tau1() - lo).abs() < 1e-9);
        assert!((mp.tau1() - 40.9).abs() < 0.1);
    }

    #[test]
    fn residual_bound() {
        for e in 2..=32 {
            let mp = matching_tau(10f64.powi(-e)).unwrap();
            assert!(mp.residual() <= 1e-9 * mp.y1(), "x=1e-{e}");
        }
    }

    #[test]
    fn no_root_and_domain() {
        let x_max = max_matchable_x1();
        assert!((x_max - (-0.55 + 0.55 * 1.1f64.ln()).exp()).abs() < 1e-15);
        assert!(matches!(matching_tau(0.7), Err(MatchingError::NoRoot { .. })));
        assert!(matching_tau(x_max * (1.0 - 1e-9)).is_ok());
        assert_eq!(matching_tau(0.0), Err(MatchingError::Domain(0.0)));
        assert_eq!(matching_tau(1.5), Err(MatchingError::Domain(1.5)));
        assert!(MatchingPoint::from_tau(1.0).is_err());
    }

    #[test]
    fn largest_root_is_returned() {
        // Near x_max both roots approach 1.1; the returned one is above it.
        let mp = matching_tau(0.5).unwrap();
        assert!(mp.tau1() > F_ARGMIN);
    }
}
