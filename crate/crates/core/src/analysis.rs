//! Least-squares fits of rescaled profiles to `√((2 + bρ²)/(2a))` and the
//! weighted sup-norms of the remainder.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{bracket, omega_radius, WindowError, WindowSpec};
use crate::matching::MATCH_EXP;
use crate::pde::grid::Stencils;
use crate::profile::{Frame, GridProfile};

/// Minimum number of grid points inside the fit window.
pub const MIN_WINDOW_POINTS: usize = 20;

/// Norm keys, in CSV column order.
pub const NORM_KEYS: [&str; 3] = ["w3", "w2_grad", "w1_hess"];

/// Angular-derivative norms; zero for radial profiles.
pub const ANGULAR_NORM_KEYS: [&str; 3] = ["w2_grad_theta", "w1_hess_theta", "w1_hess_mixed"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileFit {
    pub tau: f64,
    pub a: f64,
    pub b: f64,
    /// Window radius `Ω(τ)` used for the fit.
    pub window: f64,
    /// RMS residual of the squared-variable fit.
    pub residual_l2: f64,
    /// Grid radii inside the window.
    pub radii: Vec<f64>,
    /// `v − √((2 + bρ²)/(2a))` at `radii`.
    pub eta: Vec<f64>,
    pub norms: BTreeMap<String, f64>,
    /// `b` could not be identified (profile flat across the window).
    pub degenerate: bool,
}

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("expected a rescaled profile, got {0:?}")]
    WrongFrame(Frame),
    #[error(transparent)]
    Window(#[from] WindowError),
    #[error("window holds {0} grid points; at least {MIN_WINDOW_POINTS} are needed")]
    TooFewPoints(usize),
    #[error("normal equations are singular")]
    Singular,
}

impl ProfileFit {
    pub fn model(&self, rho: f64) -> f64 {
        ((2.0 + self.b * rho * rho) / (2.0 * self.a)).sqrt()
    }
}

/// Fits `v² = 1/a + (b/(2a)) ρ²` over the grid points with `ρ ≤ Ω(τ)`.
pub fn fit_profile(v: &GridProfile, w: &WindowSpec) -> Result<ProfileFit, FitError> {
    if v.frame() != Frame::Rescaled {
        return Err(FitError::WrongFrame(v.frame()));
    }
    let tau = v.timestamp();
    let window = omega_radius(tau, w)?;
    fit_on(v, window)
}

fn fit_on(v: &GridProfile, window: f64) -> Result<ProfileFit, FitError> {
    let n = v.radii().iter().take_while(|&&r| r <= window).count();
    if n < MIN_WINDOW_POINTS {
        return Err(FitError::TooFewPoints(n));
    }
    let rho = &v.radii()[..n];
    let vals = &v.values()[..n];
    // centred regression for conditioning
    let xs: Vec<f64> = rho.iter().map(|r| r * r).collect();
    let ys: Vec<f64> = vals.iter().map(|x| x * x).collect();
    let nf = n as f64;
    let xm = xs.iter().sum::<f64>() / nf;
    let ym = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    if !(sxx > 0.0) {
        return Err(FitError::Singular);
    }
    let mut q = sxy / sxx;
    let p = ym - q * xm;
    if !(p > 0.0) {
        return Err(FitError::Singular);
    }
    let degenerate = (q * xs[n - 1]).abs() <= 1e-12 * p;
    if degenerate {
        q = 0.0;
    }
    let a = 1.0 / p;
    let b = 2.0 * q / p;
    let residual_l2 = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - p - q * x).powi(2))
        .sum::<f64>()
        / nf)
        .sqrt();
    let mut fit = ProfileFit {
        tau: v.timestamp(),
        a,
        b,
        window,
        residual_l2,
        radii: rho.to_vec(),
        eta: Vec::new(),
        norms: BTreeMap::new(),
        degenerate,
    };
    fit.eta = rho.iter().zip(vals).map(|(&r, &x)| x - fit.model(r)).collect();
    fit.norms = remainder_norms(&fit);
    Ok(fit)
}

/// Weighted sup-norms `‖⟨ρ⟩^{−3}η‖`, `‖⟨ρ⟩^{−2}η_ρ‖`, `‖⟨ρ⟩^{−1}η_ρρ‖` over the
/// fit window, plus the angular variants (identically zero).
pub fn remainder_norms(fit: &ProfileFit) -> BTreeMap<String, f64> {
    remainder_norms_within(fit, fit.window)
}

/// As [`remainder_norms`] with the supremum restricted to `ρ ≤ radius`.
/// Derivatives are always taken on the full fit window.
pub fn remainder_norms_within(fit: &ProfileFit, radius: f64) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for key in ANGULAR_NORM_KEYS {
        out.insert(key.to_string(), 0.0);
    }
    let n = fit.radii.iter().take_while(|&&r| r <= radius).count();
    let (mut w3, mut w2, mut w1) = (0.0f64, 0.0f64, 0.0f64);
    if fit.radii.len() >= 4 {
        let st = Stencils::new(&fit.radii);
        for i in 0..n {
            let br = bracket(fit.radii[i]);
            w3 = w3.max(fit.eta[i].abs() / (br * br * br));
            w2 = w2.max(st.du(&fit.eta, i).abs() / (br * br));
            w1 = w1.max(st.d2u(&fit.eta, i).abs() / br);
        }
    }
    out.insert("w3".into(), w3);
    out.insert("w2_grad".into(), w2);
    out.insert("w1_hess".into(), w1);
    out
}

/// Deviation statistics of `v/√(2 + ρ²/τ) − 1` on `ρ ≤ 2τ^{11/20}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MainProfileStats {
    pub tau: f64,
    pub sup: f64,
    pub mean: f64,
    pub window: f64,
    /// Fraction of the window covered by the grid (1 when not truncated).
    pub coverage: f64,
}

impl MainProfileStats {
    pub fn truncated(&self) -> bool {
        self.coverage < 1.0
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MainProfileError {
    #[error("expected a rescaled profile, got {0:?}")]
    WrongFrame(Frame),
    #[error("tau must be positive (got {0})")]
    Tau(f64),
}

pub fn check_main_profile(v: &GridProfile) -> Result<MainProfileStats, MainProfileError> {
    if v.frame() != Frame::Rescaled {
        return Err(MainProfileError::WrongFrame(v.frame()));
    }
    let tau = v.timestamp();
    if !(tau > 0.0) {
        return Err(MainProfileError::Tau(tau));
    }
    let window = 2.0 * tau.powf(MATCH_EXP);
    let (mut sup, mut sum, mut count) = (0.0f64, 0.0, 0usize);
    for (&r, &x) in v.radii().iter().zip(v.values()) {
        if r > window {
            break;
        }
        let d = (x / (2.0 + r * r / tau).sqrt() - 1.0).abs();
        sup = sup.max(d);
        sum += d;
        count += 1;
    }
    Ok(MainProfileStats {
        tau,
        sup,
        mean: sum / count as f64,
        window,
        coverage: (v.extent() / window).min(1.0),
    })
}

/// Largest value of `deviation / τ^{−1/10}` over `ρ ≤ 2τ^{11/20}` when
/// `v = √(2 + ρ²/τ) + η` with `|η| = ⟨ρ⟩³τ^{−2}` (the worst case of the
/// remainder bound). The implication "remainder bound ⇒ deviation at most
/// `τ^{−1/10}`" holds at `tau` iff the result is at most 1.
pub fn eta_bound_implication_margin(tau: f64, samples: usize) -> f64 {
    let window = 2.0 * tau.powf(MATCH_EXP);
    let bound = tau.powf(-0.1);
    (0..=samples)
        .map(|i| {
            let r = window * i as f64 / samples as f64;
            let base = (2.0 + r * r / tau).sqrt();
            let eta = bracket(r).powi(3) / (tau * tau);
            let lower = ((base - eta) / base - 1.0).abs();
            let upper = ((base + eta) / base - 1.0).abs();
            lower.max(upper) / bound
        })
        .fold(0.0, f64::max)
}

/// Fit-series CSV header.
pub const FIT_SERIES_HEADER: &str = "tau,a,b,omega,res_l2,norm_w3,norm_w2_grad,norm_w1_hess";

/// One row of the fit-series CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitSeriesRow {
    pub tau: f64,
    pub a: f64,
    pub b: f64,
    pub omega: f64,
    pub res_l2: f64,
    pub norm_w3: f64,
    pub norm_w2_grad: f64,
    pub norm_w1_hess: f64,
}

impl FitSeriesRow {
    pub fn from_fit(fit: &ProfileFit) -> Self {
        let norm = |k: &str| fit.norms.get(k).copied().unwrap_or(0.0);
        Self {
            tau: fit.tau,
            a: fit.a,
            b: fit.b,
            omega: fit.window,
            res_l2: fit.residual_l2,
            norm_w3: norm("w3"),
            norm_w2_grad: norm("w2_grad"),
            norm_w1_hess: norm("w1_hess"),
        }
    }

    fn fields(&self) -> [f64; 8] {
        [
            self.tau,
            self.a,
            self.b,
            self.omega,
            self.res_l2,
            self.norm_w3,
            self.norm_w2_grad,
            self.norm_w1_hess,
        ]
    }

    pub fn to_csv(&self) -> String {
        self.fields()
            .iter()
            .map(|x| format!("{x:.16e}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn parse_csv(line: &str) -> Option<Self> {
        let v: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse().ok())
            .collect::<Option<_>>()?;
        Self::from_slice(&v)
    }

    /// Columns in header order.
    pub fn from_slice(v: &[f64]) -> Option<Self> {
        let [tau, a, b, omega, res_l2, norm_w3, norm_w2_grad, norm_w1_hess] = *v else {
            return None;
        };
        Some(Self { tau, a, b, omega, res_l2, norm_w3, norm_w2_grad, norm_w1_hess })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::grid::{build_grid, Refinement};

    fn rescaled(tau: f64, f: impl Fn(f64) -> f64) -> GridProfile {
        GridProfile::from_fn(build_grid(400, 60.0, Refinement::None), Frame::Rescaled, tau, f).unwrap()
    }

    #[test]
    fn exact_ansatz_recovery() {
        let tau = 12.0;
        let v = rescaled(tau, |r| (2.0 + r * r / tau).sqrt());
        let fit = fit_profile(&v, &WindowSpec::default()).unwrap();
        assert!((fit.a - 0.5).abs() < 1e-12);
        assert!((fit.b - 1.0 / tau).abs() < 1e-12);
        assert!(fit.residual_l2 < 1e-12);
        assert!(fit.eta.iter().all(|e| e.abs() < 1e-12));
        assert!(!fit.degenerate);
    }

    #[test]
    fn flat_profile_is_degenerate() {
        let v = rescaled(5.0, |_| 2f64.sqrt());
        let fit = fit_profile(&v, &WindowSpec::default()).unwrap();
        assert!((fit.a - 0.5).abs() < 1e-14);
        assert_eq!(fit.b, 0.0);
        assert!(fit.degenerate);
    }

    #[test]
    fn too_small_window() {
        let v = GridProfile::from_fn(build_grid(30, 200.0, Refinement::None), Frame::Rescaled, 5.0, |_| 1.0)
            .unwrap();
        assert!(matches!(fit_profile(&v, &WindowSpec::default()), Err(FitError::TooFewPoints(_))));
        let u = GridProfile::from_fn(vec![0.0, 1.0], Frame::Unscaled, 5.0, |_| 1.0).unwrap();
        assert!(matches!(fit_profile(&u, &WindowSpec::default()), Err(FitError::WrongFrame(_))));
    }

    #[test]
    fn weighted_norm_cancels_bracket() {
        let c = 3e-3;
        let mut fit = fit_profile(
            &rescaled(8.0, |r| (2.0 + r * r / 8.0).sqrt()),
            &WindowSpec::default(),
        )
        .unwrap();
        fit.eta = fit.radii.iter().map(|&r| c * bracket(r).powi(3)).collect();
        let norms = remainder_norms(&fit);
        assert!((norms["w3"] - c).abs() < 1e-15);
        fit.eta.iter_mut().for_each(|e| *e = 0.0);
        let zero = remainder_norms(&fit);
        assert!(zero.values().all(|&x| x == 0.0));
        assert_eq!(zero.len(), 6);
    }

    #[test]
    fn main_profile_exact_and_truncated() {
        let tau = 9.0;
        let v = rescaled(tau, |r| (2.0 + r * r / tau).sqrt());
        let s = check_main_profile(&v).unwrap();
        assert!(s.sup < 1e-15 && !s.truncated());
        let short = GridProfile::from_fn(build_grid(50, 5.0, Refinement::None), Frame::Rescaled, tau, |_| 1.5)
            .unwrap();
        let s = check_main_profile(&short).unwrap();
        assert!(s.truncated());
        assert!((s.coverage - 5.0 / (2.0 * tau.powf(0.55))).abs() < 1e-12);
    }

    #[test]
    fn eta_implication_only_for_large_tau() {
        assert!(eta_bound_implication_margin(200.0, 2000) <= 1.0);
        assert!(eta_bound_implication_margin(1000.0, 2000) <= 1.0);
        assert!(eta_bound_implication_margin(20.0, 2000) > 1.0);
    }

    #[test]
    fn csv_row_has_17_digits() {
        let v = rescaled(12.0, |r| (2.0 + r * r / 12.0).sqrt());
        let fit = fit_profile(&v, &WindowSpec::default()).unwrap();
        let row = FitSeriesRow::from_fit(&fit);
        let line = row.to_csv();
        assert_eq!(line.split(',').count(), FIT_SERIES_HEADER.split(',').count());
        assert!(line.starts_with("1.2000000000000000e1"));
        assert_eq!(FitSeriesRow::parse_csv(&line), Some(row));
        assert_eq!(FitSeriesRow::parse_csv("1,2"), None);
    }
}
