//! Radial grids and finite-difference stencils on them.

use serde::{Deserialize, Serialize};

/// Grid refinement towards the axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Refinement {
    None,
    /// Spacing near the axis is `2^levels` times finer than far out.
    DyadicNearAxis(u32),
}

/// Start and width (in index space) of the coarsening zone.
const ZONE_START: f64 = 0.5;
const ZONE_WIDTH: f64 = 0.3;

/// Radius of the uniformly resolved core of a renormalized-frame grid.
pub const CORE_RADIUS: f64 = 32.0;

fn ramp_integral(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x < 1.0 {
        x * x * x - 0.5 * x * x * x * x
    } else {
        0.5 + (x - 1.0)
    }
}

fn dyadic_map(xi: f64, levels: u32) -> f64 {
    let gain = (1u64 << levels) as f64 - 1.0;
    xi + gain * ZONE_WIDTH * ramp_integral((xi - ZONE_START) / ZONE_WIDTH)
}

/// `n` points on `[0, r_max]`, exactly hitting both ends.
pub fn build_grid(n: usize, r_max: f64, refinement: Refinement) -> Vec<f64> {
    assert!(n >= 3 && r_max > 0.0);
    let last = (n - 1) as f64;
    let mut r: Vec<f64> = match refinement {
        Refinement::None => (0..n).map(|i| r_max * i as f64 / last).collect(),
        Refinement::DyadicNearAxis(levels) => {
            let total = dyadic_map(1.0, levels);
            (0..n)
                .map(|i| r_max * dyadic_map(i as f64 / last, levels) / total)
                .collect()
        }
    };
    r[0] = 0.0;
    r[n - 1] = r_max;
    r
}

/// Grid for the renormalized late stage: half of the points resolve
/// `[0, CORE_RADIUS]` uniformly, the rest stretch geometrically to `rho_max`.
pub fn renormalized_grid(n: usize, rho_max: f64) -> Vec<f64> {
    assert!(n >= 3 && rho_max > 0.0);
    let n_core = n / 2;
    let h = CORE_RADIUS / n_core as f64;
    let n_outer = n - 1 - n_core;
    let span = rho_max - CORE_RADIUS;
    if span <= n_outer as f64 * h {
        return build_grid(n, rho_max, Refinement::None);
    }
    // Σ_{j=1}^{n_outer} h g^j = span
    let cover = |g: f64| h * (1..=n_outer).map(|j| g.powi(j as i32)).sum::<f64>();
    let (mut lo, mut hi) = (1.0, 2.0);
    while cover(hi) < span {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cover(mid) < span {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let g = 0.5 * (lo + hi);
    let mut r: Vec<f64> = (0..=n_core).map(|i| i as f64 * h).collect();
    let mut step = h;
    for _ in 0..n_outer {
        step *= g;
        let next = r[r.len() - 1] + step;
        r.push(next);
    }
    r[n - 1] = rho_max;
    r
}

/// Finite-difference weights for the derivatives of order `0..=order` at
/// `x0` from nodes `xs` (Fornberg's recursion).
pub fn fd_weights(x0: f64, xs: &[f64], order: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; order + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] *= c4 / c3;
        }
        c1 = c2;
    }
    c
}

/// Precomputed three-point stencils on a fixed grid.
///
/// Interior nodes use centred weights, the axis uses the even reflection
/// `u(−r) = u(r)`, and `upwind` holds second-order backward weights for
/// outward drift.
#[derive(Debug, Clone)]
pub struct Stencils {
    pub r: Vec<f64>,
    pub d1: Vec<[f64; 3]>,
    pub d2: Vec<[f64; 3]>,
    pub upwind: Vec<[f64; 3]>,
    /// Four-point one-sided second derivative at the last node.
    pub d2_last: [f64; 4],
}

impl Stencils {
    pub fn new(r: &[f64]) -> Self {
        let n = r.len();
        assert!(n >= 4);
        let mut d1 = vec![[0.0; 3]; n];
        let mut d2 = vec![[0.0; 3]; n];
        let mut upwind = vec![[0.0; 3]; n];
        // axis: u_rr(0) = 2 (u_1 − u_0) / r_1²
        let h0 = r[1];
        d2[0] = [0.0, -2.0 / (h0 * h0), 2.0 / (h0 * h0)];
        for i in 1..n - 1 {
            let w = fd_weights(r[i], &r[i - 1..=i + 1], 2);
            d1[i] = [w[1][0], w[1][1], w[1][2]];
            d2[i] = [w[2][0], w[2][1], w[2][2]];
        }
        // reflected node −r_1 makes the backward stencil at i = 1 two-point
        upwind[1] = [-1.0 / r[1] * 2.0, 2.0 / r[1], 0.0];
        for (i, up) in upwind.iter_mut().enumerate().skip(2) {
            let w = fd_weights(r[i], &r[i - 2..=i], 1);
            *up = [w[1][0], w[1][1], w[1][2]];
        }
        let w = fd_weights(r[n - 1], &r[n - 3..n], 1);
        d1[n - 1] = [w[1][0], w[1][1], w[1][2]];
        let w = fd_weights(r[n - 1], &r[n - 4..n], 2);
        let d2_last = [w[2][0], w[2][1], w[2][2], w[2][3]];
        Self {
            r: r.to_vec(),
            d1,
            d2,
            upwind,
            d2_last,
        }
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Centred first derivative (zero on the axis, backward at the end).
    pub fn du(&self, u: &[f64], i: usize) -> f64 {
        let n = u.len();
        let s = &self.d1[i];
        if i == 0 {
            0.0
        } else if i == n - 1 {
            s[0] * u[n - 3] + s[1] * u[n - 2] + s[2] * u[n - 1]
        } else {
            s[0] * u[i - 1] + s[1] * u[i] + s[2] * u[i + 1]
        }
    }

    pub fn d2u(&self, u: &[f64], i: usize) -> f64 {
        let n = u.len();
        if i == n - 1 {
            let s = &self.d2_last;
            return s[0] * u[n - 4] + s[1] * u[n - 3] + s[2] * u[n - 2] + s[3] * u[n - 1];
        }
        let s = &self.d2[i];
        if i == 0 {
            s[1] * u[0] + s[2] * u[1]
        } else {
            s[0] * u[i - 1] + s[1] * u[i] + s[2] * u[i + 1]
        }
    }

    /// Backward (upwind for outward drift) first derivative.
    pub fn du_upwind(&self, u: &[f64], i: usize) -> f64 {
        match i {
            0 => 0.0,
            1 => self.upwind[1][0] * u[0] + self.upwind[1][1] * u[1],
            _ => {
                let s = &self.upwind[i];
                s[0] * u[i - 2] + s[1] * u[i - 1] + s[2] * u[i]
            }
        }
    }

    pub fn min_spacing(&self) -> f64 {
        self.r.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }
}
