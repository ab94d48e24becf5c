//! IMEX time stepping for the radial graph equation.
//!
//! The stiff part `D u_rr + (m−1) u_r / r` with `D = 1/(1+u_r²)` is treated
//! implicitly with `D` frozen per stage; the reaction `−k/u` and, in
//! self-similar frames, the drift `−λρu_ρ + λu` are explicit. The scheme is
//! the two-stage, second-order, L-stable ARS(2,2,2) pair.

use thiserror::Error;

use super::grid::Stencils;
use super::tridiag::solve_tridiagonal;
use crate::geometry::FlowGeometry;

const GAMMA: f64 = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
const DELTA: f64 = 1.0 - 1.0 / (2.0 * GAMMA);

/// Treatment of the last grid node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryRow {
    Dirichlet(f64),
    /// Even reflection about the outer radius.
    NeumannZero,
    /// No diffusion at the last node; the remaining first-order terms are
    /// evaluated with a backward difference. Suited to outward drift.
    Outflow,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("step produced a non-positive radius {value} at index {index}")]
    NonPositive { index: usize, value: f64 },
    #[error("step produced a non-finite value at index {0}")]
    NonFinite(usize),
    #[error("state has a non-positive radius at index {0}")]
    BadInput(usize),
}

/// Reusable stepper on a fixed grid.
#[derive(Debug, Clone)]
pub struct Stepper {
    st: Stencils,
    m: f64,
    k: f64,
    bc: BoundaryRow,
    lo: Vec<f64>,
    di: Vec<f64>,
    up: Vec<f64>,
    scratch: Vec<f64>,
    d0: Vec<f64>,
    d1: Vec<f64>,
    e0: Vec<f64>,
    e1: Vec<f64>,
    au1: Vec<f64>,
    u1: Vec<f64>,
}

impl Stepper {
    pub fn new(r: &[f64], g: &FlowGeometry, bc: BoundaryRow) -> Self {
        let n = r.len();
        let z = vec![0.0; n];
        Self {
            st: Stencils::new(r),
            m: g.m(),
            k: g.k(),
            bc,
            lo: z.clone(),
            di: z.clone(),
            up: z.clone(),
            scratch: z.clone(),
            d0: z.clone(),
            d1: z.clone(),
            e0: z.clone(),
            e1: z.clone(),
            au1: z.clone(),
            u1: z,
        }
    }

    pub fn stencils(&self) -> &Stencils {
        &self.st
    }

    pub fn radii(&self) -> &[f64] {
        &self.st.r
    }

    pub fn boundary(&self) -> BoundaryRow {
        self.bc
    }

    /// Largest step allowed by the reaction time scale, `dt_max` and the
    /// explicit drift.
    pub fn stable_dt(&self, u: &[f64], lambda: f64, cfl: f64, dt_max: f64) -> f64 {
        let u_min = u.iter().copied().fold(f64::INFINITY, f64::min);
        let mut dt = (cfl * u_min * u_min).min(dt_max);
        if lambda > 0.0 {
            let r = &self.st.r;
            for i in 1..r.len() {
                dt = dt.min(cfl * (r[i] - r[i - 1]) / (lambda * r[i]));
            }
        }
        dt
    }

    /// Maximum of `|u_r|` over the grid.
    pub fn max_slope(&self, u: &[f64]) -> f64 {
        (0..u.len()).map(|i| self.st.du(u, i).abs()).fold(0.0, f64::max)
    }

    /// Advances `u` by `dt`, writing into `out`.
    pub fn step(&mut self, u: &[f64], dt: f64, lambda: f64, out: &mut [f64]) -> Result<(), StepError> {
        let n = u.len();
        if let Some(i) = u.iter().position(|&x| !(x > 0.0)) {
            return Err(StepError::BadInput(i));
        }
        diffusivity(&self.st, u, &mut self.d0);
        explicit(&self.st, self.k, self.m, self.bc, u, lambda, &mut self.e0);

        // stage 1
        for i in 0..n {
            self.u1[i] = u[i] + GAMMA * dt * self.e0[i];
        }
        assemble(&self.st, self.m, self.bc, &self.d0, GAMMA * dt, &mut self.lo, &mut self.di, &mut self.up);
        self.fix_boundary_rhs_u1();
        solve_tridiagonal(&self.lo, &self.di, &self.up, &mut self.u1, &mut self.scratch);
        check(&self.u1)?;

        // stage 2
        diffusivity(&self.st, &self.u1, &mut self.d1);
        explicit(&self.st, self.k, self.m, self.bc, &self.u1, lambda, &mut self.e1);
        apply(&self.st, self.m, self.bc, &self.d1, &self.u1, &mut self.au1);
        for i in 0..n {
            let lo = 0.5 * self.d0[i].min(self.d1[i]);
            self.d0[i] = (self.d0[i] + (self.d1[i] - self.d0[i]) / GAMMA).clamp(lo, 1.0);
        }
        for i in 0..n {
            out[i] = u[i]
                + dt * (DELTA * self.e0[i] + (1.0 - DELTA) * self.e1[i])
                + dt * (1.0 - GAMMA) * self.au1[i];
        }
        assemble(&self.st, self.m, self.bc, &self.d0, GAMMA * dt, &mut self.lo, &mut self.di, &mut self.up);
        if let BoundaryRow::Dirichlet(v) = self.bc {
            out[n - 1] = v;
        }
        solve_tridiagonal(&self.lo, &self.di, &self.up, out, &mut self.scratch);
        check(out)
    }

    fn fix_boundary_rhs_u1(&mut self) {
        if let BoundaryRow::Dirichlet(v) = self.bc {
            let n = self.u1.len();
            self.u1[n - 1] = v;
        }
    }
}

fn check(u: &[f64]) -> Result<(), StepError> {
    for (index, &value) in u.iter().enumerate() {
        if !value.is_finite() {
            return Err(StepError::NonFinite(index));
        }
        if value <= 0.0 {
            return Err(StepError::NonPositive { index, value });
        }
    }
    Ok(())
}

fn diffusivity(st: &Stencils, u: &[f64], d: &mut [f64]) {
    for (i, di) in d.iter_mut().enumerate() {
        let ur = st.du(u, i);
        *di = 1.0 / (1.0 + ur * ur);
    }
}

/// Rows of the implicit operator `A(D)`; returns `(lower, diag, upper)` at `i`.
fn row(st: &Stencils, m: f64, bc: BoundaryRow, d: &[f64], i: usize) -> (f64, f64, f64) {
    let n = d.len();
    if i == 0 {
        let s = &st.d2[0];
        (0.0, m * d[0] * s[1], m * d[0] * s[2])
    } else if i == n - 1 {
        match bc {
            BoundaryRow::NeumannZero => {
                let h = st.r[n - 1] - st.r[n - 2];
                let c = 2.0 * d[i] / (h * h);
                (c, -c, 0.0)
            }
            BoundaryRow::Dirichlet(_) | BoundaryRow::Outflow => (0.0, 0.0, 0.0),
        }
    } else {
        let a = &st.d1[i];
        let b = &st.d2[i];
        let c = (m - 1.0) / st.r[i];
        (
            d[i] * b[0] + c * a[0],
            d[i] * b[1] + c * a[1],
            d[i] * b[2] + c * a[2],
        )
    }
}

/// Fills `I − c·A(D)`.
#[allow(clippy::too_many_arguments)]
fn assemble(
    st: &Stencils,
    m: f64,
    bc: BoundaryRow,
    d: &[f64],
    c: f64,
    lo: &mut [f64],
    di: &mut [f64],
    up: &mut [f64],
) {
    for i in 0..d.len() {
        let (l, dd, u) = row(st, m, bc, d, i);
        lo[i] = -c * l;
        di[i] = 1.0 - c * dd;
        up[i] = -c * u;
    }
}

/// `out = A(D) u`.
fn apply(st: &Stencils, m: f64, bc: BoundaryRow, d: &[f64], u: &[f64], out: &mut [f64]) {
    let n = u.len();
    for i in 0..n {
        let (l, dd, up) = row(st, m, bc, d, i);
        let mut s = dd * u[i];
        if i > 0 {
            s += l * u[i - 1];
        }
        if i + 1 < n {
            s += up * u[i + 1];
        }
        out[i] = s;
    }
}

/// Explicit terms: reaction, frame drift and, for outflow, the
/// first-order part of the boundary equation.
fn explicit(st: &Stencils, k: f64, m: f64, bc: BoundaryRow, u: &[f64], lambda: f64, out: &mut [f64]) {
    let n = u.len();
    for i in 0..n {
        let mut e = -k / u[i] + lambda * u[i];
        if lambda != 0.0 && i > 0 {
            e -= lambda * st.r[i] * st.du_upwind(u, i);
        }
        out[i] = e;
    }
    match bc {
        BoundaryRow::Dirichlet(_) => out[n - 1] = 0.0,
        BoundaryRow::NeumannZero => out[n - 1] = -k / u[n - 1] + lambda * u[n - 1],
        BoundaryRow::Outflow => {
            let ur = st.du_upwind(u, n - 1);
            let r = st.r[n - 1];
            out[n - 1] = (m - 1.0) * ur / r - lambda * r * ur + lambda * u[n - 1] - k / u[n - 1];
        }
    }
}
