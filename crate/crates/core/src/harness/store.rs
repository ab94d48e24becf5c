//! Run directories: `manifest.json`, `snapshots/`, `series/`, `reports/`.
//!
//! Every float written to CSV uses 17 significant digits, so a run read
//! back from disk is bit-identical to the one that was written.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::RunConfig;
use crate::geometry::FlowGeometry;
use crate::pde::{BlowupEstimate, MinRadiusSample, RunRecord, RunStatus, SwitchInfo};
use crate::profile::{Frame, GridProfile};

pub const MANIFEST: &str = "manifest.json";
pub const SNAPSHOT_DIR: &str = "snapshots";
pub const SERIES_DIR: &str = "series";
pub const REPORT_DIR: &str = "reports";
pub const PLOT_DIR: &str = "plots";

pub const MIN_RADIUS_SERIES: &str = "min_radius";
pub const FIT_SERIES: &str = "fit_series";
pub const FINAL_RATIO_SERIES: &str = "final_ratio";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{0}")]
    Missing(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn format_err(path: &Path, message: impl Into<String>) -> StoreError {
    StoreError::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), StoreError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    fs::write(path, contents).map_err(io_err(path))
}

pub fn read_file(path: &Path) -> Result<String, StoreError> {
    fs::read_to_string(path).map_err(io_err(path))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub file: String,
    pub frame: String,
    pub timestamp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    /// Canonical configuration lines, without the output location.
    pub config: Vec<String>,
    pub config_hash: String,
    /// Hash of the solver inputs, including the sampled initial data.
    pub solver_hash: String,
    pub m: u32,
    pub k: u32,
    pub status: RunStatus,
    pub t_star: Option<f64>,
    pub t_star_uncertainty: Option<f64>,
    pub steps: u64,
    pub degenerate: bool,
    pub switch: Option<SwitchInfo>,
    pub snapshots: Vec<SnapshotEntry>,
    /// Series name to path relative to the run directory.
    pub series: BTreeMap<String, String>,
    pub reports: Vec<String>,
}

impl Manifest {
    /// The stored configuration with `output.dir` set to `run_dir`.
    pub fn run_config(&self, run_dir: &Path) -> Result<RunConfig, StoreError> {
        let mut cfg = RunConfig::parse(&self.config.join("\n"))
            .map_err(|e| format_err(&run_dir.join(MANIFEST), e.to_string()))?;
        cfg.output_dir = run_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn series_path(&self, run_dir: &Path, name: &str) -> Option<PathBuf> {
        self.series.get(name).map(|p| run_dir.join(p))
    }
}

pub fn snapshot_csv(p: &GridProfile, g: &FlowGeometry) -> String {
    let mut s = format!(
        "# {}, {:.16e}, {}, {}\n",
        p.frame().token(),
        p.timestamp(),
        g.axis_dim(),
        g.fiber_dim()
    );
    for (r, u) in p.radii().iter().zip(p.values()) {
        s.push_str(&format!("{r:.16e},{u:.16e}\n"));
    }
    s
}

/// Parses a snapshot file into the profile and its `(m, k)`.
pub fn parse_snapshot_csv(text: &str, path: &Path) -> Result<(GridProfile, u32, u32), StoreError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .and_then(|l| l.strip_prefix("# "))
        .ok_or_else(|| format_err(path, "missing `# frame, timestamp, m, k` header"))?;
    let parts: Vec<&str> = header.split(',').map(str::trim).collect();
    let [frame, ts, m, k] = parts[..] else {
        return Err(format_err(path, "header needs four fields"));
    };
    let frame = Frame::parse_token(frame).ok_or_else(|| format_err(path, format!("unknown frame `{frame}`")))?;
    let ts: f64 = ts.parse().map_err(|_| format_err(path, "bad timestamp"))?;
    let m: u32 = m.parse().map_err(|_| format_err(path, "bad m"))?;
    let k: u32 = k.parse().map_err(|_| format_err(path, "bad k"))?;
    let mut radii = Vec::new();
    let mut values = Vec::new();
    for (i, line) in lines.enumerate() {
        let (r, u) = line
            .split_once(',')
            .ok_or_else(|| format_err(path, format!("row {}: expected `r,u`", i + 2)))?;
        let parse = |x: &str| x.trim().parse::<f64>().map_err(|_| format_err(path, format!("row {}: bad number", i + 2)));
        radii.push(parse(r)?);
        values.push(parse(u)?);
    }
    let p = GridProfile::new(radii, values, frame, ts).map_err(|e| format_err(path, e.to_string()))?;
    Ok((p, m, k))
}

pub const MIN_RADIUS_HEADER: &str = "t,u_min,r_argmin";

fn min_radius_csv(series: &[MinRadiusSample]) -> String {
    let mut s = format!("{MIN_RADIUS_HEADER}\n");
    for x in series {
        s.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", x.t, x.u_min, x.r_argmin));
    }
    s
}

/// Data rows of a CSV with a one-line header, as numbers.
pub fn read_csv_rows(path: &Path, header: &str) -> Result<Vec<Vec<f64>>, StoreError> {
    let text = read_file(path)?;
    let mut lines = text.lines();
    if lines.next() != Some(header) {
        return Err(format_err(path, format!("expected header `{header}`")));
    }
    lines
        .enumerate()
        .map(|(i, l)| {
            l.split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|_| format_err(path, format!("row {}: bad number", i + 2)))
        })
        .collect()
}

/// Removes the directories and manifest this module owns.
fn clear_run_dir(dir: &Path) -> Result<(), StoreError> {
    for sub in [SNAPSHOT_DIR, SERIES_DIR, REPORT_DIR, PLOT_DIR] {
        let p = dir.join(sub);
        if p.exists() {
            fs::remove_dir_all(&p).map_err(io_err(&p))?;
        }
    }
    let m = dir.join(MANIFEST);
    if m.exists() {
        fs::remove_file(&m).map_err(io_err(&m))?;
    }
    Ok(())
}

/// Writes a fresh run directory and returns its manifest.
pub fn write_run(dir: &Path, cfg: &RunConfig, rec: &RunRecord) -> Result<Manifest, StoreError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    clear_run_dir(dir)?;
    let mut snapshots = Vec::with_capacity(rec.snapshots.len());
    for (i, p) in rec.snapshots.iter().enumerate() {
        let file = format!("{SNAPSHOT_DIR}/snap_{i:05}.csv");
        write_file(&dir.join(&file), snapshot_csv(p, &rec.geometry))?;
        snapshots.push(SnapshotEntry {
            file,
            frame: p.frame().token(),
            timestamp: p.timestamp(),
        });
    }
    let mut series = BTreeMap::new();
    let path = format!("{SERIES_DIR}/{MIN_RADIUS_SERIES}.csv");
    write_file(&dir.join(&path), min_radius_csv(&rec.min_radius_series))?;
    series.insert(MIN_RADIUS_SERIES.to_string(), path);
    let manifest = Manifest {
        config: cfg.hashed_lines(),
        config_hash: cfg.hash(),
        solver_hash: rec.config_hash.clone(),
        m: rec.geometry.axis_dim(),
        k: rec.geometry.fiber_dim(),
        status: rec.status,
        t_star: rec.t_star.map(|b| b.t_star),
        t_star_uncertainty: rec.t_star.map(|b| b.uncertainty),
        steps: rec.steps,
        degenerate: rec.degenerate,
        switch: rec.switch,
        snapshots,
        series,
        reports: vec![],
    };
    save_manifest(dir, &manifest)?;
    Ok(manifest)
}

pub fn save_manifest(dir: &Path, m: &Manifest) -> Result<(), StoreError> {
    let mut text = serde_json::to_string_pretty(m).expect("manifest serializes");
    text.push('\n');
    write_file(&dir.join(MANIFEST), text)
}

pub fn load_manifest(dir: &Path) -> Result<Manifest, StoreError> {
    let path = dir.join(MANIFEST);
    if !path.exists() {
        return Err(StoreError::Missing(format!("no {MANIFEST} in {}", dir.display())));
    }
    serde_json::from_str(&read_file(&path)?).map_err(|e| format_err(&path, e.to_string()))
}

/// Rebuilds the run record from a run directory.
pub fn load_run(dir: &Path) -> Result<(Manifest, RunRecord), StoreError> {
    let manifest = load_manifest(dir)?;
    let geometry = FlowGeometry::new(manifest.m, manifest.k)
        .map_err(|e| format_err(&dir.join(MANIFEST), e.to_string()))?;
    let mut snapshots = Vec::with_capacity(manifest.snapshots.len());
    for s in &manifest.snapshots {
        let path = dir.join(&s.file);
        if !path.exists() {
            return Err(StoreError::Missing(format!("snapshot {} is missing", path.display())));
        }
        let (p, m, k) = parse_snapshot_csv(&read_file(&path)?, &path)?;
        if (m, k) != (manifest.m, manifest.k) {
            return Err(format_err(&path, "geometry differs from the manifest"));
        }
        snapshots.push(p);
    }
    let mr_path = manifest
        .series_path(dir, MIN_RADIUS_SERIES)
        .ok_or_else(|| StoreError::Missing("min-radius series not recorded".into()))?;
    let min_radius_series = read_csv_rows(&mr_path, MIN_RADIUS_HEADER)?
        .into_iter()
        .map(|r| match r[..] {
            [t, u_min, r_argmin] => Ok(MinRadiusSample { t, u_min, r_argmin }),
            _ => Err(format_err(&mr_path, "expected three columns")),
        })
        .collect::<Result<_, _>>()?;
    let t_star = match (manifest.t_star, manifest.t_star_uncertainty) {
        (Some(t_star), Some(uncertainty)) => Some(BlowupEstimate { t_star, uncertainty }),
        _ => None,
    };
    let rec = RunRecord {
        config_hash: manifest.solver_hash.clone(),
        geometry,
        snapshots,
        min_radius_series,
        t_star,
        status: manifest.status,
        degenerate: manifest.degenerate,
        switch: manifest.switch,
        steps: manifest.steps,
    };
    Ok((manifest, rec))
}
