//! Exact maps between the unscaled, parabolically rescaled and secondary
//! frames. Times are measured from the singular time (t = 0 at the
//! pinch), so every map takes the blow-up time `T*` explicitly.

use thiserror::Error;

use crate::matching::MatchingPoint;
use crate::profile::{Frame, GridProfile, ProfileError};

#[derive(Debug, Error, PartialEq)]
pub enum FrameError {
    #[error("expected a {expected} profile, got {got:?}")]
    WrongFrame { expected: &'static str, got: Frame },
    #[error("time {t} is not before the blow-up time {t_star}")]
    AfterBlowup { t: f64, t_star: f64 },
    #[error("time {t} precedes the matching time {t1}")]
    BeforeMatching { t: f64, t1: f64 },
    #[error("secondary time s = {s} is outside [0, {s_max})")]
    SecondaryRange { s: f64, s_max: f64 },
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

fn scaled(p: GridProfile, frame: Frame, timestamp: f64, scale: f64) -> Result<GridProfile, FrameError> {
    let (radii, values, _, _) = p.into_parts();
    let inv = 1.0 / scale;
    let radii = radii.into_iter().map(|r| r * inv).collect();
    let values = values.into_iter().map(|u| u * inv).collect();
    Ok(GridProfile::new(radii, values, frame, timestamp)?)
}

/// `y = r/√(T*−t)`, `v = u/√(T*−t)`, `τ = −ln(T*−t)`.
pub fn to_rescaled(p: &GridProfile, t_star: f64) -> Result<GridProfile, FrameError> {
    if p.frame() != Frame::Unscaled {
        return Err(FrameError::WrongFrame {
            expected: "unscaled",
            got: p.frame(),
        });
    }
    if !t_star.is_finite() {
        return Err(FrameError::NonFinite("blow-up time"));
    }
    let t = p.timestamp();
    let rem = t_star - t;
    if !(rem > 0.0) {
        return Err(FrameError::AfterBlowup { t, t_star });
    }
    scaled(p.clone(), Frame::Rescaled, -rem.ln(), rem.sqrt())
}

/// Inverse of [`to_rescaled`]: `t = T* − e^{−τ}`.
pub fn from_rescaled(p: &GridProfile, t_star: f64) -> Result<GridProfile, FrameError> {
    if p.frame() != Frame::Rescaled {
        return Err(FrameError::WrongFrame {
            expected: "rescaled",
            got: p.frame(),
        });
    }
    if !t_star.is_finite() {
        return Err(FrameError::NonFinite("blow-up time"));
    }
    let tau = p.timestamp();
    let rem = (-tau).exp();
    let t = t_star - rem;
    if !t.is_finite() {
        return Err(FrameError::NonFinite("time"));
    }
    scaled(p.clone(), Frame::Unscaled, t, (0.5 * tau).exp())
}

/// `√(τ₁^{1/10}·(−t₁))`, the length scale of the secondary frame.
pub fn secondary_scale(mp: &MatchingPoint) -> f64 {
    (mp.tau1().powf(0.1) * -mp.t1()).sqrt()
}

/// Frame blow-up time `τ₁^{−1/10}` in the variable `s`.
pub fn secondary_s_max(mp: &MatchingPoint) -> f64 {
    mp.tau1().powf(-0.1)
}

/// Secondary-frame time of simulation time `t`, without range checks.
pub(crate) fn secondary_s(t: f64, mp: &MatchingPoint, t_star: f64) -> f64 {
    (t - t_star - mp.t1()) / (mp.tau1().powf(0.1) * -mp.t1())
}

/// `z = r/σ`, `h = u/σ`, `s = (t−t₁)/(τ₁^{1/10}(−t₁))` with `σ² = τ₁^{1/10}(−t₁)`
/// and `t` measured from `T*`.
pub fn to_secondary_frame(
    p: &GridProfile,
    mp: &MatchingPoint,
    t_star: f64,
) -> Result<GridProfile, FrameError> {
    if p.frame() != Frame::Unscaled {
        return Err(FrameError::WrongFrame {
            expected: "unscaled",
            got: p.frame(),
        });
    }
    if !t_star.is_finite() {
        return Err(FrameError::NonFinite("blow-up time"));
    }
    let t = p.timestamp() - t_star;
    // a few ulps of slack: `t₁` is far below the resolution of `T*`
    let slack = 4.0 * f64::EPSILON * p.timestamp().abs().max(t_star.abs());
    if t < mp.t1() - slack {
        return Err(FrameError::BeforeMatching { t, t1: mp.t1() });
    }
    let h = to_secondary_unchecked(p, mp, t_star)?;
    if h.timestamp() < 0.0 {
        let (radii, values, frame, _) = h.into_parts();
        return Ok(GridProfile::new(radii, values, frame, 0.0)?);
    }
    Ok(h)
}

/// As [`to_secondary_frame`] but also admits `s < 0`, for the window before
/// the matching time.
pub(crate) fn to_secondary_unchecked(
    p: &GridProfile,
    mp: &MatchingPoint,
    t_star: f64,
) -> Result<GridProfile, FrameError> {
    let s = secondary_s(p.timestamp(), mp, t_star);
    scaled(
        p.clone(),
        Frame::Secondary { tau1: mp.tau1() },
        s,
        secondary_scale(mp),
    )
}

/// Inverse of [`to_secondary_frame`].
pub fn from_secondary_frame(
    p: &GridProfile,
    mp: &MatchingPoint,
    t_star: f64,
) -> Result<GridProfile, FrameError> {
    match p.frame() {
        Frame::Secondary { tau1 } if tau1 == mp.tau1() => {}
        other => {
            return Err(FrameError::WrongFrame {
                expected: "secondary with matching tau1",
                got: other,
            })
        }
    }
    let sigma = secondary_scale(mp);
    let t = t_star + mp.t1() + p.timestamp() * sigma * sigma;
    let (radii, values, _, _) = p.clone().into_parts();
    let radii = radii.into_iter().map(|z| z * sigma).collect();
    let values = values.into_iter().map(|h| h * sigma).collect();
    Ok(GridProfile::new(radii, values, Frame::Unscaled, t)?)
}

/// Right-hand side of the identity expressing `h` through the rescaled
/// profile:
/// `h(z,s) = √(1−τ₁^{1/10}s)/τ₁^{1/20} · v(τ₁^{1/20}z/√(1−τ₁^{1/10}s), τ₁ − ln(1−τ₁^{1/10}s))`.
///
/// `v_eval(ρ, τ)` evaluates the rescaled profile.
pub fn secondary_h_identity(
    z: f64,
    s: f64,
    mp: &MatchingPoint,
    v_eval: impl Fn(f64, f64) -> f64,
) -> Result<f64, FrameError> {
    let s_max = secondary_s_max(mp);
    if !(s >= 0.0 && s < s_max) {
        return Err(FrameError::SecondaryRange { s, s_max });
    }
    let tau1 = mp.tau1();
    let q = 1.0 - tau1.powf(0.1) * s;
    let sq = q.sqrt();
    let c = tau1.powf(0.05);
    Ok(sq / c * v_eval(c * z / sq, tau1 - q.ln()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::matching_tau;

    fn unscaled(t: f64, f: impl Fn(f64) -> f64) -> GridProfile {
        let radii: Vec<f64> = (0..50).map(|i| 0.02 * i as f64 + 1e-3 * (i * i) as f64).collect();
        GridProfile::from_fn(radii, Frame::Unscaled, t, f).unwrap()
    }

    #[test]
    fn identity_at_unit_time() {
        let p = unscaled(-1.0, |r| 1.0 + r * r);
        let v = to_rescaled(&p, 0.0).unwrap();
        assert_eq!(v.radii(), p.radii());
        assert_eq!(v.values(), p.values());
        assert_eq!(v.timestamp(), 0.0);
        let back = from_rescaled(&v, 0.0).unwrap();
        assert_eq!(back.timestamp(), -1.0);
        assert_eq!(back.radii(), p.radii());
    }

    #[test]
    fn substitution_example() {
        let t = -(-4f64).exp();
        let p = GridProfile::new(
            vec![0.0, 2.0 * (-2f64).exp()],
            vec![0.3, 0.7],
            Frame::Unscaled,
            t,
        )
        .unwrap();
        let v = to_rescaled(&p, 0.0).unwrap();
        assert!((v.radii()[1] - 2.0).abs() < 1e-14);
        assert!((v.values()[1] - 0.7 * 2f64.exp()).abs() < 1e-13);
        assert!((v.timestamp() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn shrinking_cylinder_rescales_to_constant() {
        for &(t, ts) in &[(-0.3, 0.0), (0.1, 0.5), (1.0 - 1e-6, 1.0)] {
            let c = (2.0f64 * (ts - t)).sqrt();
            let v = to_rescaled(&unscaled(t, |_| c), ts).unwrap();
            for &x in v.values() {
                assert!((x - 2f64.sqrt()).abs() <= 1e-14 * 2f64.sqrt());
            }
        }
    }

    #[test]
    fn inverse_rescaled_example() {
        let v = GridProfile::new(vec![0.0, 1.0], vec![2f64.sqrt(); 2], Frame::Rescaled, 2.0).unwrap();
        let u = from_rescaled(&v, 0.0).unwrap();
        assert!((u.timestamp() + (-2f64).exp()).abs() < 1e-16);
        assert!((u.values()[0] - 2f64.sqrt() * (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn rejects_after_blowup_and_wrong_frame() {
        let p = unscaled(0.5, |_| 1.0);
        assert!(matches!(to_rescaled(&p, 0.5), Err(FrameError::AfterBlowup { .. })));
        assert!(matches!(to_rescaled(&p, f64::NAN), Err(FrameError::NonFinite(_))));
        let v = to_rescaled(&p, 1.0).unwrap();
        assert!(matches!(to_rescaled(&v, 1.0), Err(FrameError::WrongFrame { .. })));
        assert!(matches!(from_rescaled(&p, 1.0), Err(FrameError::WrongFrame { .. })));
    }

    #[test]
    fn secondary_frame_examples() {
        let mp = matching_tau(1e-3).unwrap();
        let t_star = 0.25;
        let p = unscaled(t_star + mp.t1(), |r| 0.01 + r * r);
        let h = to_secondary_frame(&p, &mp, t_star).unwrap();
        assert!(h.timestamp().abs() < 1e-12);
        // z at x1 is tau1^{1/2}
        let z1 = mp.x1_norm() / secondary_scale(&mp);
        assert!((z1 - mp.tau1().sqrt()).abs() < 1e-9 * z1);
        let back = from_secondary_frame(&h, &mp, t_star).unwrap();
        for (a, b) in back.values().iter().zip(p.values()) {
            assert!((a - b).abs() <= 1e-12 * b);
        }
        let early = unscaled(t_star + 1.5 * mp.t1(), |_| 1.0);
        assert!(matches!(
            to_secondary_frame(&early, &mp, t_star),
            Err(FrameError::BeforeMatching { .. })
        ));
    }

    #[test]
    fn h_identity_substitutions() {
        let mp = matching_tau(1e-4).unwrap();
        let c = mp.tau1().powf(0.05);
        let v = |rho: f64, tau: f64| (2.0 + rho * rho / tau).sqrt() + 0.1 * tau;
        let h0 = secondary_h_identity(1.7, 0.0, &mp, v).unwrap();
        assert!((h0 - v(c * 1.7, mp.tau1()) / c).abs() < 1e-14);
        let s = 0.4 * secondary_s_max(&mp);
        let h = secondary_h_identity(0.3, s, &mp, |_, _| 2f64.sqrt()).unwrap();
        let expected = 2f64.sqrt() * (1.0 - mp.tau1().powf(0.1) * s).sqrt() / c;
        assert!((h - expected).abs() < 1e-14);
        assert!(secondary_h_identity(0.3, secondary_s_max(&mp), &mp, v).is_err());
        assert!(secondary_h_identity(0.3, -0.1, &mp, v).is_err());
    }

    #[test]
    fn h_identity_agrees_with_frame_map() {
        // Exact self-similar solution u = √(T*−t)·V(r/√(T*−t)).
        let big_v = |y: f64| (2.0 + 0.3 * y * y).sqrt();
        let mp = matching_tau(3e-4).unwrap();
        let t_star = 0.8;
        let s = 0.5 * secondary_s_max(&mp);
        let sigma = secondary_scale(&mp);
        let t = t_star + mp.t1() + s * sigma * sigma;
        let rem = t_star - t;
        let p = unscaled(t, |r| rem.sqrt() * big_v(r / rem.sqrt()));
        let h = to_secondary_frame(&p, &mp, t_star).unwrap();
        // `t` carries an absolute rounding error of order ε·T*, magnified by 1/σ²
        let cond = f64::EPSILON * t_star / (sigma * sigma);
        assert!((h.timestamp() - s).abs() < 8.0 * cond, "{} {s}", h.timestamp());
        for (z, hz) in h.radii().iter().zip(h.values()) {
            let rhs = secondary_h_identity(*z, h.timestamp(), &mp, |rho, _| big_v(rho)).unwrap();
            assert!((rhs - hz).abs() < 1e-8 * hz, "{z}: {rhs} vs {hz}");
        }
    }
}
