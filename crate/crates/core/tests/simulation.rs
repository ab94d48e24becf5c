//! Checks on actual runs: the shipped generic-pinch configuration, a cylinder
//! and a few small variants.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use pinchflow::analysis::{check_main_profile, fit_profile};
use pinchflow::asymptotics::{
    secondary_frame_checks, verify_final_profile, verify_ratio_stability, verify_ratio_stability_sequence,
    verify_u_at_t1, Verdict,
};
use pinchflow::harness::{analyze, simulate, sweep, verify, Claim, RunConfig};
use pinchflow::pde::{run_to_pinch, RunRecord, RunStatus};
use pinchflow::MatchingPoint;
use tempfile::TempDir;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> RunConfig {
    RunConfig::load(&configs_dir().join(name)).unwrap()
}

fn overrides(cfg: &RunConfig, kv: &[(&str, &str)]) -> RunConfig {
    let kv: Vec<(String, String)> = kv.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    cfg.with_overrides(&kv).unwrap()
}

fn run(cfg: &RunConfig) -> RunRecord {
    let initial = cfg.initial.profile(cfg.solver.grid()).unwrap();
    run_to_pinch(&cfg.solver, &cfg.geometry, &initial).unwrap()
}

fn generic() -> &'static (RunConfig, RunRecord) {
    static RUN: OnceLock<(RunConfig, RunRecord)> = OnceLock::new();
    RUN.get_or_init(|| {
        let cfg = load("default.conf");
        let rec = run(&cfg);
        (cfg, rec)
    })
}

fn x1_at(tau1: f64) -> f64 {
    MatchingPoint::from_tau(tau1).unwrap().x1_norm()
}

#[test]
fn generic_data_pinches_on_the_axis() {
    let (_, rec) = generic();
    assert_eq!(rec.status, RunStatus::Pinched);
    assert!(!rec.degenerate);
    assert_eq!(rec.min_radius_series.last().unwrap().r_argmin, 0.0);
    assert!(rec.final_tau().unwrap() > 20.0);
}

#[test]
fn rescaled_axis_value_approaches_the_cylinder() {
    let (_, rec) = generic();
    let worst = rec
        .rescaled_snapshots()
        .filter(|p| p.timestamp() >= 8.0)
        .map(|p| (p.values()[0] / 2f64.sqrt() - 1.0).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 0.02, "sup over tau >= 8 of |v(0)/sqrt 2 - 1| = {worst}");
}

#[test]
fn axis_value_deviation_decreases_late() {
    let (_, rec) = generic();
    let devs: Vec<f64> = rec
        .rescaled_snapshots()
        .filter(|p| p.timestamp() >= 8.0)
        .step_by(8)
        .map(|p| (p.values()[0] / 2f64.sqrt() - 1.0).abs())
        .collect();
    assert!(devs.len() >= 4);
    assert!(devs.windows(2).all(|w| w[1] < w[0]), "{devs:?}");
}

fn fit_near(cfg: &RunConfig, rec: &RunRecord, tau: f64) -> pinchflow::analysis::ProfileFit {
    let v = rec
        .rescaled_snapshots()
        .min_by(|p, q| (p.timestamp() - tau).abs().total_cmp(&(q.timestamp() - tau).abs()))
        .unwrap();
    fit_profile(v, &cfg.window).unwrap()
}

#[test]
fn fit_at_tau_twenty() {
    let (cfg, rec) = generic();
    let early = fit_near(cfg, rec, 10.0);
    let fit = fit_near(cfg, rec, 20.0);
    let tau = fit.tau;
    // C in a = 1/2 + O(1/τ) is not quantified: |a − 1/2|τ must stay within
    // a factor 10 of its value at τ = 10
    let c0 = (early.a - 0.5).abs() * early.tau;
    let c = (fit.a - 0.5).abs() * tau;
    assert!(c <= 10.0 * c0 && c >= c0 / 10.0, "|a-1/2|tau = {c} at {tau}, {c0} at {}", early.tau);
    assert!((0.75..=1.25).contains(&(tau * fit.b)), "tau b = {}", tau * fit.b);
}

#[test]
fn main_profile_deviation_decreases() {
    let (_, rec) = generic();
    let sups: Vec<f64> = rec
        .rescaled_snapshots()
        .filter(|p| p.timestamp() >= 8.0)
        .step_by(8)
        .map(|p| check_main_profile(p).unwrap().sup)
        .collect();
    assert!(sups.len() >= 4);
    assert!(sups.windows(2).all(|w| w[1] < w[0]), "{sups:?}");
}

#[test]
fn u_at_t1_deviations_decrease_over_a_decade() {
    let (_, rec) = generic();
    let xs = [x1_at(10.0), x1_at(10.0) / 10f64.sqrt(), x1_at(10.0) / 10.0];
    let r = verify_u_at_t1(rec, &xs).unwrap();
    assert_eq!(r.samples.len(), 3);
    let devs: Vec<f64> = r.samples.iter().map(|s| s.deviation).collect();
    assert!(devs.windows(2).all(|w| w[1] < w[0]), "{devs:?}");
    assert!(r.verdict.is_success());
}

#[test]
fn final_profile_ratio_in_band() {
    let (_, rec) = generic();
    let radii: Vec<f64> = (0..=6).map(|i| 10f64.powf(-1.0 - 0.25 * i as f64)).collect();
    let r = verify_final_profile(rec, &radii).unwrap();
    let ratios: Vec<f64> = r.samples.iter().map(|s| s.measured).collect();
    assert!(ratios.iter().all(|x| (0.6..=1.4).contains(x)), "R = {ratios:?}");
    assert_eq!(r.verdict, Verdict::Pass);
}

#[test]
fn final_profile_ratio_deviation_decreases() {
    let (_, rec) = generic();
    let radii: Vec<f64> = (0..=6).map(|i| 10f64.powf(-1.0 - 0.25 * i as f64)).collect();
    let r = verify_final_profile(rec, &radii).unwrap();
    assert!(r.verdict.is_success(), "{:?}", r.samples);
}

#[test]
fn ratio_stability_at_x1_five_hundredths() {
    let (_, rec) = generic();
    let r = verify_ratio_stability(rec, 0.05, 0.2).unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "sup = {:?}", r.samples.first().map(|s| s.measured));
}

#[test]
fn ratio_stability_sup_decreases_with_x1() {
    let (_, rec) = generic();
    let xs: Vec<f64> = [6.0, 9.0, 12.0, 15.0, 18.0].iter().map(|&t| x1_at(t)).collect();
    let r = verify_ratio_stability_sequence(rec, &xs, 0.2).unwrap();
    assert_eq!(r.samples.len(), 5);
    assert!(r.verdict.is_success(), "{:?}", r.samples);
}

#[test]
fn secondary_checks_at_tau1_fifteen() {
    let (_, rec) = generic();
    let r = secondary_frame_checks(rec, &MatchingPoint::from_tau(15.0).unwrap());
    assert!(r.verdict.is_success(), "{:?} {:?}", r.verdict, r.samples);
}

#[test]
fn generic_run_verifies_through_the_harness() {
    let tmp = TempDir::new().unwrap();
    let (cfg, _) = generic();
    simulate(cfg, tmp.path()).unwrap();
    let s = analyze(tmp.path()).unwrap();
    assert!(s.fits.len() > 50);
    let reports = verify(tmp.path(), &Claim::ALL).unwrap();
    for r in &reports {
        assert!(r.verdict.is_success(), "{} {:?}", r.claim, r.verdict);
    }
}

#[test]
fn cylinder_is_flagged_degenerate() {
    let cfg = load("cylinder.conf");
    let rec = run(&cfg);
    assert_eq!(rec.status, RunStatus::Pinched);
    assert!(rec.degenerate);
    let t_star = rec.t_star.unwrap().t_star;
    assert!((t_star - 2.0).abs() < 1e-4, "{t_star}");
    // the collapse is uniform, so u(x₁, ·) never freezes
    let r = verify_ratio_stability(&rec, x1_at(10.0), 0.2).unwrap();
    assert_eq!(r.verdict, Verdict::Fail);
}

/// A short domain under a Dirichlet boundary holds a stable neck, so the
/// run never pinches.
#[test]
fn short_dirichlet_domain_does_not_pinch() {
    let cfg = overrides(
        &load("tiny_domain.conf"),
        &[("solver.outer_bc", "dirichlet"), ("solver.max_steps", "20000")],
    );
    let rec = run(&cfg);
    assert_eq!(rec.status, RunStatus::MaxSteps);
    let series = &rec.min_radius_series;
    let last = series.last().unwrap().u_min;
    let earlier = series[series.len() * 3 / 4].u_min;
    assert!(last > 1.0 && (last - earlier).abs() < 1e-3 * last, "{earlier} -> {last}");
}

#[test]
fn sweep_over_initial_data() {
    let tmp = TempDir::new().unwrap();
    let cfg = overrides(&load("default.conf"), &[("solver.grid_size", "256"), ("solver.refinement", "none")]);
    let grid = vec![
        ("initial.c0".to_string(), vec!["1.1".into(), "1.2".into(), "1.3".into()]),
        ("initial.c2".to_string(), vec!["0.05".into(), "0.1".into(), "0.2".into()]),
    ];
    let m = sweep(&cfg, &grid, tmp.path(), 2).unwrap();
    assert_eq!(m.cells.len(), 9);
    for c in &m.cells {
        assert!(c.error.is_none() && c.duplicate_of.is_none());
        let dir = tmp.path().join(format!("cell_{:03}", c.index));
        assert!(fs::metadata(dir.join("manifest.json")).is_ok());
    }
}
