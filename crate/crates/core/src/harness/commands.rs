//! The five subcommands as library functions.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::{ConfigError, RunConfig};
use super::plots::plot_scripts;
use super::store::{
    load_run, read_csv_rows, save_manifest, write_file, write_run, Manifest, StoreError, FINAL_RATIO_SERIES,
    FIT_SERIES, PLOT_DIR, REPORT_DIR, SERIES_DIR,
};
use crate::analysis::{fit_profile, FitSeriesRow, FIT_SERIES_HEADER};
use crate::asymptotics::{
    final_ratio_samples, resolved_radius_range, secondary_frame_series, verify_final_profile, verify_log_relation,
    verify_profile_fit, verify_ratio_stability_sequence, verify_u_at_t1, VerificationReport, Verdict,
    FIT_WINDOW_START,
};
use crate::matching::MatchingPoint;
use crate::pde::{run_to_pinch, RunRecord, RunStatus, SolverError};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const BOUNDARY_CONTAMINATED: i32 = 3;
    pub const GRADIENT_BLOWUP: i32 = 4;
    pub const MAX_STEPS: i32 = 5;
    pub const CLAIM_FAILURE: i32 = 6;
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("solver: {0}")]
    Solver(#[from] SolverError),
    #[error("{0}")]
    Usage(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(ConfigError::Io { .. }) => exit::IO,
            HarnessError::Config(_) | HarnessError::Usage(_) => exit::CONFIG,
            HarnessError::Solver(SolverError::Invalid { .. }) => exit::CONFIG,
            HarnessError::Solver(_) | HarnessError::Store(_) => exit::IO,
        }
    }
}

pub fn status_exit_code(status: RunStatus) -> i32 {
    match status {
        RunStatus::Pinched => exit::OK,
        RunStatus::BoundaryContaminated => exit::BOUNDARY_CONTAMINATED,
        RunStatus::GradientBlowup => exit::GRADIENT_BLOWUP,
        RunStatus::MaxSteps => exit::MAX_STEPS,
    }
}

/// Runs the configured problem and writes its run directory.
pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<(Manifest, RunRecord), HarnessError> {
    cfg.validate()?;
    let initial = cfg
        .initial
        .profile(cfg.solver.grid())
        .map_err(|e| SolverError::Initial(e.to_string()))?;
    let rec = run_to_pinch(&cfg.solver, &cfg.geometry, &initial)?;
    let manifest = write_run(out, cfg, &rec)?;
    Ok((manifest, rec))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeSummary {
    pub fits: Vec<FitSeriesRow>,
    /// Snapshots outside the window domain or with too few points.
    pub skipped: usize,
    pub final_ratio: Vec<(f64, f64)>,
}

const FINAL_RATIO_POINTS: usize = 25;
pub const FINAL_RATIO_HEADER: &str = "x,ratio";

/// Geometric radii across the range the run resolves, largest first.
pub fn final_ratio_radii(rec: &RunRecord) -> Vec<f64> {
    let Some((lo, hi)) = resolved_radius_range(rec) else {
        return vec![];
    };
    let n = FINAL_RATIO_POINTS;
    (0..n)
        .map(|i| hi * (lo / hi).powf(i as f64 / (n - 1) as f64))
        .filter(|&x| final_ratio_samples(rec, &[x]).is_ok())
        .collect()
}

/// Fits every rescaled snapshot in the window domain and records the
/// final-profile ratio; writes both series.
pub fn analyze(dir: &Path) -> Result<AnalyzeSummary, HarnessError> {
    let (mut manifest, rec) = load_run(dir)?;
    let cfg = manifest.run_config(dir)?;
    if rec.snapshots.is_empty() {
        return Err(StoreError::Missing("run has no snapshots".into()).into());
    }
    let mut fits = Vec::new();
    let mut skipped = 0;
    for p in rec.rescaled_snapshots() {
        match fit_profile(p, &cfg.window) {
            Ok(f) if cfg.window.admits(p.timestamp()) => fits.push(FitSeriesRow::from_fit(&f)),
            _ => skipped += 1,
        }
    }
    let mut csv = format!("{FIT_SERIES_HEADER}\n");
    for r in &fits {
        csv.push_str(&r.to_csv());
        csv.push('\n');
    }
    let fit_path = format!("{SERIES_DIR}/{FIT_SERIES}.csv");
    write_file(&dir.join(&fit_path), csv)?;

    let mut final_ratio = Vec::new();
    for x in final_ratio_radii(&rec) {
        if let Ok((s, _)) = final_ratio_samples(&rec, &[x]) {
            final_ratio.push((x, s[0].measured));
        }
    }
    let mut csv = format!("{FINAL_RATIO_HEADER}\n");
    for (x, r) in &final_ratio {
        csv.push_str(&format!("{x:.16e},{r:.16e}\n"));
    }
    let ratio_path = format!("{SERIES_DIR}/{FINAL_RATIO_SERIES}.csv");
    write_file(&dir.join(&ratio_path), csv)?;

    manifest.series.insert(FIT_SERIES.into(), fit_path);
    manifest.series.insert(FINAL_RATIO_SERIES.into(), ratio_path);
    save_manifest(dir, &manifest)?;
    Ok(AnalyzeSummary { fits, skipped, final_ratio })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Claim {
    LogRelation,
    UAtT1,
    FinalProfile,
    RatioStability,
    SecondaryFrame,
    ProfileFit,
}

impl Claim {
    pub const ALL: [Claim; 6] = [
        Claim::LogRelation,
        Claim::UAtT1,
        Claim::FinalProfile,
        Claim::RatioStability,
        Claim::SecondaryFrame,
        Claim::ProfileFit,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Claim::LogRelation => "log_relation",
            Claim::UAtT1 => "u_at_t1",
            Claim::FinalProfile => "final_profile",
            Claim::RatioStability => "ratio_stability",
            Claim::SecondaryFrame => "secondary_frame",
            Claim::ProfileFit => "profile_fit",
        }
    }

    /// `all`, or a comma-separated list of claim names.
    pub fn parse_list(s: &str) -> Result<Vec<Claim>, HarnessError> {
        if s.trim() == "all" {
            return Ok(Self::ALL.to_vec());
        }
        let mut out = Vec::new();
        for name in s.split(',').map(str::trim).filter(|n| !n.is_empty()) {
            let c = Self::ALL
                .into_iter()
                .find(|c| c.name() == name)
                .ok_or_else(|| HarnessError::Usage(format!("unknown claim `{name}`")))?;
            if !out.contains(&c) {
                out.push(c);
            }
        }
        if out.is_empty() {
            return Err(HarnessError::Usage("no claims given".into()));
        }
        out.sort();
        Ok(out)
    }
}

pub const LOG_RELATION_POINTS: [f64; 8] = [1e-3, 1e-4, 1e-6, 1e-8, 1e-12, 1e-16, 1e-24, 1e-32];
pub const SECONDARY_TAUS: [f64; 3] = [10.0, 15.0, 20.0];
/// Stability threshold reported alongside the supremum trend.
pub const RATIO_STABILITY_EPS: f64 = 0.2;

/// `x₁` whose matching times run from `from` in steps of 2 up to `to`.
pub fn x1_sequence(from: f64, to: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut tau = from;
    while tau <= to {
        if let Ok(mp) = MatchingPoint::from_tau(tau) {
            out.push(mp.x1_norm());
        }
        tau += 2.0;
    }
    out
}

fn or_inconclusive<E: std::fmt::Display>(claim: &str, r: Result<VerificationReport, E>) -> VerificationReport {
    r.unwrap_or_else(|e| VerificationReport::inconclusive(claim, e.to_string()))
}

/// The report for one claim on a loaded run. `fits` is the fit series.
pub fn verify_claim(claim: Claim, rec: &RunRecord, fits: &[FitSeriesRow]) -> VerificationReport {
    let name = claim.name();
    let final_tau = rec.final_tau().unwrap_or(0.0);
    match claim {
        Claim::LogRelation => or_inconclusive(name, verify_log_relation(&LOG_RELATION_POINTS)),
        Claim::UAtT1 => or_inconclusive(name, verify_u_at_t1(rec, &x1_sequence(8.0, final_tau))),
        Claim::FinalProfile => {
            let radii = final_ratio_radii(rec);
            if radii.is_empty() {
                return VerificationReport::inconclusive(name, "no radius is resolved at the final time");
            }
            or_inconclusive(name, verify_final_profile(rec, &radii))
        }
        Claim::RatioStability => or_inconclusive(
            name,
            verify_ratio_stability_sequence(rec, &x1_sequence(6.0, final_tau - 2.0), RATIO_STABILITY_EPS),
        ),
        Claim::SecondaryFrame => secondary_frame_series(rec, &SECONDARY_TAUS),
        Claim::ProfileFit => verify_profile_fit(fits, FIT_WINDOW_START),
    }
}

pub fn read_fit_series(manifest: &Manifest, dir: &Path) -> Result<Vec<FitSeriesRow>, HarnessError> {
    let path = manifest
        .series_path(dir, FIT_SERIES)
        .ok_or_else(|| StoreError::Missing("run is not analyzed; run `analyze` first".into()))?;
    read_csv_rows(&path, FIT_SERIES_HEADER)?
        .iter()
        .map(|r| {
            FitSeriesRow::from_slice(r).ok_or_else(|| {
                StoreError::Format {
                    path: path.clone(),
                    message: "expected eight columns".into(),
                }
                .into()
            })
        })
        .collect()
}

pub fn summary_table(reports: &[VerificationReport]) -> String {
    let mut s = format!("{:<18}{:<14}{:>8}  {}\n", "claim", "verdict", "samples", "trend");
    for r in reports {
        let trend = serde_json::to_value(r.trend).expect("trend serializes");
        s.push_str(&format!(
            "{:<18}{:<14}{:>8}  {}\n",
            r.claim,
            r.verdict.as_str(),
            r.samples.len(),
            trend.as_str().unwrap_or("")
        ));
    }
    s
}

/// Writes one JSON report per claim and a summary table.
pub fn verify(dir: &Path, claims: &[Claim]) -> Result<Vec<VerificationReport>, HarnessError> {
    let (mut manifest, rec) = load_run(dir)?;
    let fits = read_fit_series(&manifest, dir)?;
    let reports: Vec<VerificationReport> = claims.iter().map(|&c| verify_claim(c, &rec, &fits)).collect();
    let mut files = Vec::new();
    for r in &reports {
        let file = format!("{REPORT_DIR}/{}.json", r.claim);
        let mut text = serde_json::to_string_pretty(r).expect("report serializes");
        text.push('\n');
        write_file(&dir.join(&file), text)?;
        files.push(file);
    }
    let summary = format!("{REPORT_DIR}/summary.txt");
    write_file(&dir.join(&summary), summary_table(&reports))?;
    files.push(summary);
    manifest.reports = files;
    save_manifest(dir, &manifest)?;
    Ok(reports)
}

/// Exit code for a set of reports: claim failure iff any verdict is fail.
pub fn reports_exit_code(reports: &[VerificationReport]) -> i32 {
    if reports.iter().any(|r| r.verdict == Verdict::Fail) {
        exit::CLAIM_FAILURE
    } else {
        exit::OK
    }
}

/// `key=v1,v2;key2=w1,w2`.
pub fn parse_grid(spec: &str) -> Result<Vec<(String, Vec<String>)>, HarnessError> {
    let mut out: Vec<(String, Vec<String>)> = Vec::new();
    for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, values) = part
            .split_once('=')
            .ok_or_else(|| HarnessError::Usage(format!("grid entry `{part}` needs `key=values`")))?;
        let key = key.trim().to_string();
        let values: Vec<String> = values
            .split(',')
            .map(|v| v.trim().to_string())
            .filter(|v| !v.is_empty())
            .collect();
        if values.is_empty() {
            return Err(HarnessError::Usage(format!("grid key `{key}` has no values")));
        }
        if out.iter().any(|(k, _)| *k == key) {
            return Err(HarnessError::Usage(format!("grid key `{key}` given twice")));
        }
        out.push((key, values));
    }
    if out.is_empty() {
        return Err(HarnessError::Usage("parameter grid is empty".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub index: usize,
    pub overrides: BTreeMap<String, String>,
    pub dir: Option<String>,
    pub config_hash: Option<String>,
    pub status: Option<RunStatus>,
    pub error: Option<String>,
    /// Index of the earlier cell with the same configuration.
    pub duplicate_of: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepManifest {
    pub template_hash: String,
    pub grid: Vec<(String, Vec<String>)>,
    pub cells: Vec<SweepCell>,
}

pub const SWEEP_MANIFEST: &str = "sweep.json";

fn cartesian(grid: &[(String, Vec<String>)]) -> Vec<Vec<(String, String)>> {
    let mut cells: Vec<Vec<(String, String)>> = vec![vec![]];
    for (key, values) in grid {
        cells = cells
            .into_iter()
            .flat_map(|c| {
                values.iter().map(move |v| {
                    let mut c = c.clone();
                    c.push((key.clone(), v.clone()));
                    c
                })
            })
            .collect();
    }
    cells
}

/// Runs every distinct cell of the grid on `jobs` workers. Cell failures are
/// recorded and do not stop the sweep.
pub fn sweep(
    template: &RunConfig,
    grid: &[(String, Vec<String>)],
    out: &Path,
    jobs: usize,
) -> Result<SweepManifest, HarnessError> {
    if grid.is_empty() {
        return Err(HarnessError::Usage("parameter grid is empty".into()));
    }
    let mut cells = Vec::new();
    let mut runs: Vec<(usize, RunConfig)> = Vec::new();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for (index, overrides) in cartesian(grid).into_iter().enumerate() {
        let mut cell = SweepCell {
            index,
            overrides: overrides.iter().cloned().collect(),
            dir: None,
            config_hash: None,
            status: None,
            error: None,
            duplicate_of: None,
        };
        match template.with_overrides(&overrides) {
            Err(e) => cell.error = Some(e.to_string()),
            Ok(mut cfg) => {
                let hash = cfg.hash();
                cell.config_hash = Some(hash.clone());
                if let Some(&first) = seen.get(&hash) {
                    cell.duplicate_of = Some(first);
                } else {
                    seen.insert(hash, index);
                    let dir = format!("cell_{index:03}");
                    cfg.output_dir = out.join(&dir);
                    cell.dir = Some(dir);
                    runs.push((index, cfg));
                }
            }
        }
        cells.push(cell);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| HarnessError::Usage(format!("worker pool: {e}")))?;
    let results: Vec<(usize, Result<RunStatus, String>)> = pool.install(|| {
        runs.par_iter()
            .map(|(i, cfg)| (*i, simulate(cfg, &cfg.output_dir).map(|(m, _)| m.status).map_err(|e| e.to_string())))
            .collect()
    });
    for (i, r) in results {
        match r {
            Ok(status) => cells[i].status = Some(status),
            Err(e) => cells[i].error = Some(e),
        }
    }
    let manifest = SweepManifest {
        template_hash: template.hash(),
        grid: grid.to_vec(),
        cells,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("sweep manifest serializes");
    text.push('\n');
    write_file(&out.join(SWEEP_MANIFEST), text)?;
    Ok(manifest)
}

/// Writes the plotting scripts into `plots/`.
pub fn plot(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let (manifest, _) = load_run(dir)?;
    for name in [FIT_SERIES, FINAL_RATIO_SERIES] {
        let present = manifest.series_path(dir, name).is_some_and(|p| p.exists());
        if !present {
            return Err(StoreError::Missing(format!("series `{name}` is missing; run `analyze` first")).into());
        }
    }
    let mut out = Vec::new();
    for (file, body) in plot_scripts() {
        let path = dir.join(PLOT_DIR).join(file);
        write_file(&path, body)?;
        out.push(path);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn claim_lists() {
        assert_eq!(Claim::parse_list("all").unwrap().len(), 6);
        assert_eq!(
            Claim::parse_list("profile_fit, log_relation,log_relation").unwrap(),
            vec![Claim::LogRelation, Claim::ProfileFit]
        );
        assert_eq!(Claim::parse_list("bogus").unwrap_err().exit_code(), exit::CONFIG);
    }

    #[test]
    fn grid_parsing() {
        let g = parse_grid("solver.grid_size=256,512; initial.c2=0.05").unwrap();
        assert_eq!(g[0].1, vec!["256", "512"]);
        assert_eq!(cartesian(&g).len(), 2);
        assert!(parse_grid("").is_err());
        assert!(parse_grid("a").is_err());
        assert!(parse_grid("a=1;a=2").is_err());
    }

    #[test]
    fn status_codes_are_distinct() {
        let codes: Vec<i32> = [
            RunStatus::Pinched,
            RunStatus::BoundaryContaminated,
            RunStatus::GradientBlowup,
            RunStatus::MaxSteps,
        ]
        .into_iter()
        .map(status_exit_code)
        .collect();
        assert_eq!(codes, vec![0, 3, 4, 5]);
    }

    #[test]
    fn matching_sequence_decreases() {
        let xs = x1_sequence(6.0, 12.0);
        assert_eq!(xs.len(), 4);
        assert!(xs.windows(2).all(|w| w[1] < w[0]));
    }
}
