//! Pinch runs: unscaled integration until the neck is small, then a
//! renormalized stage that keeps the neck at unit size.
//!
//! In the late stage the solution is written `u(r,t) = L(s) w(r/L, s)` with
//! `d ln L/ds = −λ` and `dt/ds = L²`, which gives
//!
//! ```text
//! w_s = D w_ρρ + (m−1) w_ρ/ρ − λ ρ w_ρ + λ w − k/w.
//! ```
//!
//! `λ` is chosen each step so that `w(0)` stays at `√(2k)`. The blow-up time
//! is the accumulated physical time plus the tail `∫ L² ds` past the last
//! step, so no a priori guess of `T*` enters the equation.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::grid::{build_grid, renormalized_grid, Refinement};
use super::stepper::{BoundaryRow, StepError, Stepper};
use crate::frames::{to_rescaled, FrameError};
use crate::geometry::{omega_radius, FlowGeometry, WindowSpec};
use crate::interp::MonotoneCubic;
use crate::profile::{Frame, GridProfile, ProfileError};

/// Outer boundary condition of the unscaled problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OuterBc {
    /// Hold the given value, or the initial boundary value when `None`.
    Dirichlet(Option<f64>),
    NeumannZero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub grid_size: usize,
    pub domain_radius: f64,
    pub outer_bc: OuterBc,
    pub cfl_safety: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub pinch_threshold: f64,
    pub gradient_abort: f64,
    pub refinement: Refinement,
    /// Switch to the renormalized stage once `u_min` falls below this
    /// fraction of its initial value.
    pub rescale_switch: f64,
    pub snapshot_dtau: f64,
    pub max_steps: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grid_size: 2048,
            domain_radius: 20.0,
            outer_bc: OuterBc::Dirichlet(None),
            cfl_safety: 0.4,
            dt_min: 1e-12,
            dt_max: 2e-3,
            pinch_threshold: 5e-6,
            gradient_abort: 100.0,
            refinement: Refinement::DyadicNearAxis(4),
            rescale_switch: 0.2,
            snapshot_dtau: 0.25,
            max_steps: 200_000,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("invalid solver setting {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("initial data: {0}")]
    Initial(String),
    #[error("time step fell below dt_min at t = {t}: {source}")]
    StepUnderflow { t: f64, source: StepError },
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Frame(#[from] FrameError),
}

fn invalid(field: &'static str, reason: impl Into<String>) -> SolverError {
    SolverError::Invalid {
        field,
        reason: reason.into(),
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if self.grid_size < 16 {
            return Err(invalid("grid_size", format!("must be at least 16, got {}", self.grid_size)));
        }
        let positive = [
            ("domain_radius", self.domain_radius),
            ("dt_min", self.dt_min),
            ("dt_max", self.dt_max),
            ("pinch_threshold", self.pinch_threshold),
            ("gradient_abort", self.gradient_abort),
            ("snapshot_dtau", self.snapshot_dtau),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(field, format!("must be positive and finite, got {v}")));
            }
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety < 1.0) {
            return Err(invalid("cfl_safety", format!("must lie in (0,1), got {}", self.cfl_safety)));
        }
        if self.dt_min > self.dt_max {
            return Err(invalid("dt_min", "exceeds dt_max"));
        }
        if !(self.rescale_switch > 0.0 && self.rescale_switch < 1.0) {
            return Err(invalid(
                "rescale_switch",
                format!("must lie in (0,1), got {}", self.rescale_switch),
            ));
        }
        if let OuterBc::Dirichlet(Some(v)) = self.outer_bc {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid("outer_bc", format!("dirichlet value must be positive, got {v}")));
            }
        }
        if let Refinement::DyadicNearAxis(l) = self.refinement {
            if l > 20 {
                return Err(invalid("refinement", format!("at most 20 levels, got {l}")));
            }
        }
        if self.max_steps == 0 {
            return Err(invalid("max_steps", "must be positive"));
        }
        Ok(())
    }

    /// Grid of the unscaled stage.
    pub fn grid(&self) -> Vec<f64> {
        build_grid(self.grid_size, self.domain_radius, self.refinement)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Pinched,
    BoundaryContaminated,
    GradientBlowup,
    MaxSteps,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Pinched => "pinched",
            RunStatus::BoundaryContaminated => "boundary_contaminated",
            RunStatus::GradientBlowup => "gradient_blowup",
            RunStatus::MaxSteps => "max_steps",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            RunStatus::Pinched,
            RunStatus::BoundaryContaminated,
            RunStatus::GradientBlowup,
            RunStatus::MaxSteps,
        ]
        .into_iter()
        .find(|st| st.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinRadiusSample {
    pub t: f64,
    pub u_min: f64,
    pub r_argmin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupEstimate {
    pub t_star: f64,
    pub uncertainty: f64,
}

/// State at the hand-over to the renormalized stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchInfo {
    pub t: f64,
    pub scale: f64,
    pub rho_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub geometry: FlowGeometry,
    /// Rescaled with the final `T*` when the run pinched, unscaled otherwise.
    pub snapshots: Vec<GridProfile>,
    pub min_radius_series: Vec<MinRadiusSample>,
    pub t_star: Option<BlowupEstimate>,
    pub status: RunStatus,
    /// The profile was radially constant at hand-over, so the pinch location
    /// is not defined.
    pub degenerate: bool,
    pub switch: Option<SwitchInfo>,
    pub steps: u64,
}

impl RunRecord {
    /// Snapshots stored in the rescaled frame.
    pub fn rescaled_snapshots(&self) -> impl Iterator<Item = &GridProfile> {
        self.snapshots.iter().filter(|p| p.frame() == Frame::Rescaled)
    }

    pub fn final_tau(&self) -> Option<f64> {
        self.rescaled_snapshots().last().map(|p| p.timestamp())
    }
}

fn hash_inputs(cfg: &SolverConfig, g: &FlowGeometry, initial: &GridProfile) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(cfg).expect("config serializes"));
    h.update(serde_json::to_vec(g).expect("geometry serializes"));
    for (r, u) in initial.radii().iter().zip(initial.values()) {
        h.update(r.to_bits().to_le_bytes());
        h.update(u.to_bits().to_le_bytes());
    }
    h.update(initial.timestamp().to_bits().to_le_bytes());
    hex::encode(h.finalize())
}

fn boundary_row(cfg: &SolverConfig, u: &[f64]) -> BoundaryRow {
    match cfg.outer_bc {
        OuterBc::Dirichlet(Some(v)) => BoundaryRow::Dirichlet(v),
        OuterBc::Dirichlet(None) => BoundaryRow::Dirichlet(u[u.len() - 1]),
        OuterBc::NeumannZero => BoundaryRow::NeumannZero,
    }
}

/// Takes one step with halving on rejection; returns the step actually used.
fn guarded_step(
    stepper: &mut Stepper,
    u: &[f64],
    dt: f64,
    lambda: f64,
    dt_min: f64,
    t: f64,
    out: &mut [f64],
) -> Result<f64, SolverError> {
    let mut dt = dt;
    loop {
        match stepper.step(u, dt, lambda, out) {
            Ok(()) => return Ok(dt),
            Err(source) => {
                dt *= 0.5;
                if dt < dt_min {
                    return Err(SolverError::StepUnderflow { t, source });
                }
            }
        }
    }
}

fn argmin(u: &[f64]) -> (usize, f64) {
    u.iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |a, (i, v)| if v < a.1 { (i, v) } else { a })
}

fn resample(initial: &GridProfile, r: &[f64]) -> Result<Vec<f64>, SolverError> {
    if initial.extent() < r[r.len() - 1] * (1.0 - 1e-12) {
        return Err(SolverError::Initial(format!(
            "initial profile extends to {} but the domain radius is {}",
            initial.extent(),
            r[r.len() - 1]
        )));
    }
    let mc = MonotoneCubic::new(initial.radii(), initial.values());
    r.iter()
        .map(|&x| {
            mc.eval(x.min(initial.extent()))
                .ok_or_else(|| SolverError::Initial(format!("cannot evaluate at r = {x}")))
        })
        .collect()
}

/// One step of the unscaled equation (frame `Unscaled`) or of the rescaled
/// equation with outflow at the last node (frame `Rescaled`).
pub fn step(
    p: &GridProfile,
    dt: f64,
    g: &FlowGeometry,
    cfg: &SolverConfig,
) -> Result<GridProfile, SolverError> {
    if !(dt >= cfg.dt_min && dt <= cfg.dt_max) {
        return Err(invalid("dt", format!("{dt} outside [dt_min, dt_max]")));
    }
    let (bc, lambda) = match p.frame() {
        Frame::Unscaled => (boundary_row(cfg, p.values()), 0.0),
        Frame::Rescaled => (BoundaryRow::Outflow, 0.5),
        Frame::Secondary { .. } => return Err(SolverError::Initial("cannot step a secondary-frame profile".into())),
    };
    let mut stepper = Stepper::new(p.radii(), g, bc);
    let mut out = vec![0.0; p.len()];
    stepper
        .step(p.values(), dt, lambda, &mut out)
        .map_err(|source| SolverError::StepUnderflow { t: p.timestamp(), source })?;
    if stepper.max_slope(&out) > cfg.gradient_abort {
        return Err(invalid("gradient_abort", "slope bound exceeded"));
    }
    Ok(GridProfile::new(
        p.radii().to_vec(),
        out,
        p.frame(),
        p.timestamp() + dt,
    )?)
}

fn integrate(
    p: &GridProfile,
    g: &FlowGeometry,
    cfg: &SolverConfig,
    bc: BoundaryRow,
    lambda: f64,
    t_end: f64,
) -> Result<GridProfile, SolverError> {
    let mut stepper = Stepper::new(p.radii(), g, bc);
    let mut u = p.values().to_vec();
    let mut next = u.clone();
    let mut t = p.timestamp();
    while t < t_end {
        let dt = stepper
            .stable_dt(&u, lambda, cfg.cfl_safety, cfg.dt_max)
            .min(t_end - t);
        let used = guarded_step(&mut stepper, &u, dt, lambda, cfg.dt_min.min(dt), t, &mut next)?;
        std::mem::swap(&mut u, &mut next);
        t = if used == t_end - t { t_end } else { t + used };
    }
    Ok(GridProfile::new(p.radii().to_vec(), u, p.frame(), t_end)?)
}

/// Integrates the unscaled equation on the profile's own grid up to `t_end`.
pub fn integrate_unscaled(
    p: &GridProfile,
    g: &FlowGeometry,
    cfg: &SolverConfig,
    t_end: f64,
) -> Result<GridProfile, SolverError> {
    if p.frame() != Frame::Unscaled {
        return Err(SolverError::Initial("expected an unscaled profile".into()));
    }
    integrate(p, g, cfg, boundary_row(cfg, p.values()), 0.0, t_end)
}

/// Integrates the rescaled equation (`λ = 1/2`, outflow boundary) up to
/// `tau_end`.
pub fn integrate_rescaled(
    p: &GridProfile,
    g: &FlowGeometry,
    cfg: &SolverConfig,
    tau_end: f64,
) -> Result<GridProfile, SolverError> {
    if p.frame() != Frame::Rescaled {
        return Err(SolverError::Initial("expected a rescaled profile".into()));
    }
    integrate(p, g, cfg, BoundaryRow::Outflow, 0.5, tau_end)
}

/// Cells from the outer boundary within which a pinch counts as contaminated.
const BOUNDARY_CELLS: usize = 10;

/// Gain of the feedback that holds `w(0)` at `√(2k)`.
const PIN_GAIN: f64 = 1.0;

struct PendingSnapshot {
    step: usize,
    w: Vec<f64>,
    ln_l: f64,
}

/// Integrates until the neck radius reaches `pinch_threshold` or an abort
/// condition holds.
pub fn run_to_pinch(
    cfg: &SolverConfig,
    g: &FlowGeometry,
    initial: &GridProfile,
) -> Result<RunRecord, SolverError> {
    cfg.validate()?;
    if initial.frame() != Frame::Unscaled {
        return Err(SolverError::Initial("initial data must be unscaled".into()));
    }
    let config_hash = hash_inputs(cfg, g, initial);
    let r = cfg.grid();
    let n = r.len();
    let mut u = resample(initial, &r)?;
    let mut next = u.clone();
    let mut stepper = Stepper::new(&r, g, boundary_row(cfg, &u));

    let mut t = initial.timestamp();
    let mut steps: u64 = 0;
    let mut series = Vec::new();
    let mut snapshots = vec![GridProfile::new(r.clone(), u.clone(), Frame::Unscaled, t)?];
    let (i0, u0_min) = argmin(&u);
    series.push(MinRadiusSample { t, u_min: u0_min, r_argmin: r[i0] });
    let decay = (-cfg.snapshot_dtau).exp();
    let mut next_level = u0_min * u0_min * decay;

    let finish = |snapshots: Vec<GridProfile>,
                  series: Vec<MinRadiusSample>,
                  status: RunStatus,
                  steps: u64,
                  degenerate: bool| {
        finish_stage_one(config_hash.clone(), *g, snapshots, series, status, steps, degenerate, cfg)
    };

    loop {
        if steps >= cfg.max_steps {
            push_final(&mut snapshots, &r, &u, t)?;
            return finish(snapshots, series, RunStatus::MaxSteps, steps, false);
        }
        let dt = stepper.stable_dt(&u, 0.0, cfg.cfl_safety, cfg.dt_max);
        let used = guarded_step(&mut stepper, &u, dt, 0.0, cfg.dt_min, t, &mut next)?;
        std::mem::swap(&mut u, &mut next);
        t += used;
        steps += 1;
        let (imin, umin) = argmin(&u);
        series.push(MinRadiusSample { t, u_min: umin, r_argmin: r[imin] });
        if stepper.max_slope(&u) > cfg.gradient_abort {
            push_final(&mut snapshots, &r, &u, t)?;
            return finish(snapshots, series, RunStatus::GradientBlowup, steps, false);
        }
        let pinched = umin <= cfg.pinch_threshold;
        let switch = umin <= cfg.rescale_switch * u0_min;
        if (pinched || switch) && imin + BOUNDARY_CELLS >= n - 1 {
            push_final(&mut snapshots, &r, &u, t)?;
            return finish(snapshots, series, RunStatus::BoundaryContaminated, steps, false);
        }
        if pinched {
            push_final(&mut snapshots, &r, &u, t)?;
            return finish(snapshots, series, RunStatus::Pinched, steps, false);
        }
        if switch {
            break;
        }
        if umin * umin <= next_level {
            snapshots.push(GridProfile::new(r.clone(), u.clone(), Frame::Unscaled, t)?);
            while umin * umin <= next_level {
                next_level *= decay;
            }
        }
    }

    // hand-over
    push_final(&mut snapshots, &r, &u, t)?;
    let umax = u.iter().copied().fold(0.0, f64::max);
    let degenerate = (umax - u[0]) <= 1e-9 * u[0];
    let w_target = g.cylinder_radius();
    let scale = u[0] / w_target;
    let rho_max = r[n - 1] / scale;
    let tau_guess = -(scale * scale).ln();
    let window = WindowSpec::default();
    if !degenerate && window.admits(tau_guess) {
        let om = omega_radius(tau_guess, &window).expect("admitted");
        if rho_max < om {
            return finish(snapshots, series, RunStatus::BoundaryContaminated, steps, false);
        }
    }
    let switch_info = SwitchInfo { t, scale, rho_max };
    let rho = renormalized_grid(n, rho_max);
    let mc = MonotoneCubic::new(&r, &u);
    let mut w: Vec<f64> = rho
        .iter()
        .map(|&x| mc.eval((x * scale).min(r[n - 1])).expect("inside grid") / scale)
        .collect();
    w[n - 1] = u[n - 1] / scale;
    let mut w_next = w.clone();
    let mut st2 = Stepper::new(&rho, g, BoundaryRow::Outflow);
    let k = g.k();
    let m = g.m();

    let mut ln_l = scale.ln();
    let mut s = 0.0;
    let mut increments: Vec<f64> = Vec::new();
    let mut lambdas: Vec<(f64, f64)> = Vec::new();
    let mut pending: Vec<PendingSnapshot> = Vec::new();
    let mut next_tau: Option<f64> = None;
    let mut status = RunStatus::Pinched;

    loop {
        if steps >= cfg.max_steps {
            status = RunStatus::MaxSteps;
            break;
        }
        let w0 = w[0];
        let wrr0 = st2.stencils().d2u(&w, 0);
        let lambda = (k / w0 - m * wrr0) / w0 - PIN_GAIN * (w0 - w_target) / w_target;
        let dt = st2.stable_dt(&w, lambda, cfg.cfl_safety, cfg.dt_max);
        let used = guarded_step(&mut st2, &w, dt, lambda, cfg.dt_min, t, &mut w_next)?;
        std::mem::swap(&mut w, &mut w_next);
        let l2 = (2.0 * ln_l).exp();
        let inc = if (lambda * used).abs() > 1e-12 {
            l2 * (-(-2.0 * lambda * used).exp_m1()) / (2.0 * lambda)
        } else {
            l2 * used
        };
        increments.push(inc);
        t += inc;
        ln_l -= lambda * used;
        s += used;
        steps += 1;
        lambdas.push((s, lambda));
        let l = ln_l.exp();
        let (imin, wmin) = argmin(&w);
        series.push(MinRadiusSample { t, u_min: l * wmin, r_argmin: l * rho[imin] });
        if st2.max_slope(&w) > cfg.gradient_abort {
            status = RunStatus::GradientBlowup;
            break;
        }
        if lambda > 0.0 {
            let tau_est = -(l * l / (2.0 * lambda)).ln();
            let due = match next_tau {
                None => {
                    next_tau = Some((tau_est / cfg.snapshot_dtau).floor() * cfg.snapshot_dtau + cfg.snapshot_dtau);
                    false
                }
                Some(nt) => tau_est >= nt,
            };
            if due {
                pending.push(PendingSnapshot { step: increments.len(), w: w.clone(), ln_l });
                let mut nt = next_tau.expect("set");
                while nt <= tau_est {
                    nt += cfg.snapshot_dtau;
                }
                next_tau = Some(nt);
            }
        }
        if l * wmin <= cfg.pinch_threshold {
            break;
        }
    }
    if pending.last().map(|p| p.step) != Some(increments.len()) {
        pending.push(PendingSnapshot { step: increments.len(), w: w.clone(), ln_l });
    }

    // tail ∫ L² ds past the last step, with λ extrapolated linearly
    let (s_end, lam0) = *lambdas.last().expect("at least one renormalized step");
    let lam1 = lambdas
        .iter()
        .rev()
        .find(|(sj, _)| s_end - sj >= 1.0)
        .map(|&(sj, lj)| (lam0 - lj) / (s_end - sj))
        .unwrap_or(0.0);
    let l_end2 = (2.0 * ln_l).exp();
    let tail = if lam0 > 0.0 {
        l_end2 / (2.0 * lam0) * (1.0 - lam1 / (2.0 * lam0 * lam0))
    } else {
        f64::NAN
    };
    if !(tail > 0.0) {
        // λ never became positive: the neck is not collapsing self-similarly
        let mut rec = finish(snapshots, series, status, steps, degenerate)?;
        rec.switch = Some(switch_info);
        return Ok(rec);
    }
    let t_star = t + tail;

    // remaining time before each stored step, summed backwards
    let mut remaining = vec![0.0; increments.len() + 1];
    remaining[increments.len()] = tail;
    for i in (0..increments.len()).rev() {
        remaining[i] = remaining[i + 1] + increments[i];
    }

    let mut out = Vec::with_capacity(snapshots.len() + pending.len());
    for p in &snapshots {
        if p.timestamp() < t_star {
            out.push(to_rescaled(p, t_star)?);
        }
    }
    for p in pending {
        let rem = remaining[p.step];
        let kappa = p.ln_l.exp() / rem.sqrt();
        let tau = -rem.ln();
        let radii: Vec<f64> = rho.iter().map(|x| x * kappa).collect();
        let values: Vec<f64> = p.w.iter().map(|x| x * kappa).collect();
        if out.last().map(|q: &GridProfile| q.timestamp() < tau).unwrap_or(true) {
            out.push(GridProfile::new(radii, values, Frame::Rescaled, tau)?);
        }
    }

    let mut rec = RunRecord {
        config_hash,
        geometry: *g,
        snapshots: out,
        min_radius_series: series,
        t_star: Some(BlowupEstimate { t_star, uncertainty: tail * lam1.abs() / (2.0 * lam0 * lam0) }),
        status,
        degenerate,
        switch: Some(switch_info),
        steps,
    };
    if let Ok(fit) = estimate_blowup_time(&rec) {
        let est = rec.t_star.as_mut().expect("set above");
        est.uncertainty = est.uncertainty.max((fit.t_star - t_star).abs());
    }
    Ok(rec)
}

fn push_final(snapshots: &mut Vec<GridProfile>, r: &[f64], u: &[f64], t: f64) -> Result<(), SolverError> {
    if snapshots.last().map(|p| p.timestamp() < t).unwrap_or(true) {
        snapshots.push(GridProfile::new(r.to_vec(), u.to_vec(), Frame::Unscaled, t)?);
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn finish_stage_one(
    config_hash: String,
    g: FlowGeometry,
    snapshots: Vec<GridProfile>,
    series: Vec<MinRadiusSample>,
    status: RunStatus,
    steps: u64,
    degenerate: bool,
    cfg: &SolverConfig,
) -> Result<RunRecord, SolverError> {
    let mut rec = RunRecord {
        config_hash,
        geometry: g,
        snapshots,
        min_radius_series: series,
        t_star: None,
        status,
        degenerate,
        switch: None,
        steps,
    };
    if status == RunStatus::Pinched {
        if let Ok(est) = estimate_blowup_time_with(&rec, cfg.pinch_threshold) {
            rec.t_star = Some(est);
            rec.snapshots = rec
                .snapshots
                .iter()
                .filter(|p| p.timestamp() < est.t_star)
                .map(|p| to_rescaled(p, est.t_star))
                .collect::<Result<_, _>>()?;
        }
    }
    Ok(rec)
}

#[derive(Debug, Error, PartialEq)]
pub enum BlowupError {
    #[error("run did not pinch (status {0:?})")]
    NotPinched(RunStatus),
    #[error("need at least 10 samples in the last decade of the neck radius, got {0}")]
    InsufficientSamples(usize),
}

/// Fits `u_min² = 2k (T−t)(A + c/τ)`, `τ = −ln(T−t)`, over the samples with
/// `u_min` within a decade of the last one, minimizing over `T` by golden
/// section. The uncertainty is the RMS relative residual times the median
/// remaining time of the fitted samples.
pub fn estimate_blowup_time(rec: &RunRecord) -> Result<BlowupEstimate, BlowupError> {
    if rec.status != RunStatus::Pinched {
        return Err(BlowupError::NotPinched(rec.status));
    }
    let last = rec
        .min_radius_series
        .last()
        .map(|s| s.u_min)
        .ok_or(BlowupError::InsufficientSamples(0))?;
    fit_series(&rec.min_radius_series, rec.geometry.k(), 10.0 * last)
}

fn estimate_blowup_time_with(rec: &RunRecord, threshold: f64) -> Result<BlowupEstimate, BlowupError> {
    let last = rec.min_radius_series.last().map(|s| s.u_min).unwrap_or(threshold);
    fit_series(&rec.min_radius_series, rec.geometry.k(), 10.0 * last.max(threshold))
}

fn fit_series(series: &[MinRadiusSample], k: f64, cutoff: f64) -> Result<BlowupEstimate, BlowupError> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|s| s.u_min <= cutoff)
        .map(|s| (s.t, s.u_min * s.u_min))
        .collect();
    if pts.len() < 10 {
        return Err(BlowupError::InsufficientSamples(pts.len()));
    }
    let t_last = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let u2_last = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let gap0 = u2_last / (2.0 * k);
    // objective over x = ln(T − t_last)
    let objective = |x: f64| -> (f64, f64, f64) {
        let t_star = t_last + x.exp();
        let mut s = [0.0; 5];
        let mut rows = Vec::with_capacity(pts.len());
        for &(t, u2) in &pts {
            let rem = t_star - t;
            let q = u2 / (2.0 * k * rem);
            let z = 1.0 / (-rem.ln()).max(1.0);
            rows.push((q, z));
            s[0] += 1.0;
            s[1] += z;
            s[2] += z * z;
            s[3] += q;
            s[4] += q * z;
        }
        let det = s[0] * s[2] - s[1] * s[1];
        let (a, c) = if det.abs() > 1e-300 * s[0] * s[2] && det > 1e-14 * s[0] * s[2] {
            ((s[3] * s[2] - s[1] * s[4]) / det, (s[0] * s[4] - s[1] * s[3]) / det)
        } else {
            (s[3] / s[0], 0.0)
        };
        let ss: f64 = rows
            .iter()
            .map(|&(q, z)| {
                let model = a + c * z;
                (q / model - 1.0).powi(2)
            })
            .sum();
        (ss, a, c)
    };
    let (mut lo, mut hi) = ((gap0 * 1e-3).ln(), (gap0 * 1e3).ln());
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = objective(x1).0;
    let mut f2 = objective(x2).0;
    for _ in 0..200 {
        if hi - lo < 1e-15 {
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = objective(x1).0;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = objective(x2).0;
        }
    }
    let x = 0.5 * (lo + hi);
    let (ss, _, _) = objective(x);
    let t_star = t_last + x.exp();
    let mut rems: Vec<f64> = pts.iter().map(|p| t_star - p.0).collect();
    rems.sort_by(f64::total_cmp);
    let median = rems[rems.len() / 2];
    Ok(BlowupEstimate {
        t_star,
        uncertainty: (ss / pts.len() as f64).sqrt() * median,
    })
}
