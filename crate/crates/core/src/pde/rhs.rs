//! Pointwise right-hand sides of the radial graph equation, evaluated with
//! centred differences. The stepper splits these terms; the functions here
//! are the reference evaluation.

use super::grid::Stencils;
use crate::geometry::FlowGeometry;
use crate::profile::{Frame, GridProfile};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RhsError {
    #[error("expected a {0} profile")]
    WrongFrame(&'static str),
    #[error("profile needs at least 4 grid points (got {0})")]
    TooShort(usize),
}

fn eval(
    p: &GridProfile,
    g: &FlowGeometry,
    drift: f64,
) -> Vec<f64> {
    let (r, u) = (p.radii(), p.values());
    let st = Stencils::new(r);
    let (m, k) = (g.m(), g.k());
    (0..u.len())
        .map(|i| {
            let urr = st.d2u(u, i);
            let frame = drift * (u[i] - r[i] * st.du(u, i));
            if i == 0 {
                m * urr - k / u[0] + frame
            } else {
                let ur = st.du(u, i);
                urr / (1.0 + ur * ur) + (m - 1.0) * ur / r[i] - k / u[i] + frame
            }
        })
        .collect()
}

/// `u_t = u_rr/(1+u_r²) + (m−1)u_r/r − k/u`, with `m·u_rr − k/u` on the axis.
///
/// The last node uses one-sided differences.
pub fn mcf_rhs(p: &GridProfile, g: &FlowGeometry) -> Result<Vec<f64>, RhsError> {
    if p.frame() != Frame::Unscaled {
        return Err(RhsError::WrongFrame("unscaled"));
    }
    if p.len() < 4 {
        return Err(RhsError::TooShort(p.len()));
    }
    Ok(eval(p, g, 0.0))
}

/// `v_τ = v_ρρ/(1+v_ρ²) + (m−1)v_ρ/ρ − ρv_ρ/2 + v/2 − k/v`.
pub fn rescaled_rhs(p: &GridProfile, g: &FlowGeometry) -> Result<Vec<f64>, RhsError> {
    if p.frame() != Frame::Rescaled {
        return Err(RhsError::WrongFrame("rescaled"));
    }
    if p.len() < 4 {
        return Err(RhsError::TooShort(p.len()));
    }
    Ok(eval(p, g, 0.5))
}
