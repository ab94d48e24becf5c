//! Flat `key=value` run configuration with dotted section prefixes.
//!
//! Blank lines and lines starting with `#` are ignored. Missing keys take
//! their defaults; unknown or repeated keys are errors. The canonical form
//! lists every key once, in a fixed order, with no spaces, and parses back
//! to itself byte for byte.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geometry::{FlowGeometry, WindowSpec};
use crate::initial::InitialData;
use crate::pde::{OuterBc, Refinement, SolverConfig, SolverError};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub geometry: FlowGeometry,
    pub initial: InitialData,
    /// Includes the snapshot schedule (`snapshot.dtau`).
    pub solver: SolverConfig,
    pub window: WindowSpec,
    pub output_dir: PathBuf,
    /// Only used by synthetic-noise checks.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            geometry: FlowGeometry::default(),
            initial: InitialData::default(),
            solver: SolverConfig::default(),
            window: WindowSpec::default(),
            output_dir: PathBuf::from("runs/default"),
            seed: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}, column {column}: unknown key `{key}`")]
    UnknownKey {
        key: String,
        line: usize,
        column: usize,
    },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { key: String, line: usize },
    #[error("line {line}, column {column}: bad value for `{key}`: {message}")]
    Value {
        key: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },
}

impl ConfigError {
    /// Key or field the error refers to, if any.
    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::UnknownKey { key, .. }
            | ConfigError::Duplicate { key, .. }
            | ConfigError::Value { key, .. } => Some(key),
            ConfigError::Invalid { field, .. } => Some(field),
            _ => None,
        }
    }
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        reason: reason.into(),
    }
}

/// Every key, in canonical order. Family parameters are listed under the
/// family they belong to.
pub const KEYS: [&str; 23] = [
    "geometry.m",
    "geometry.k",
    "initial.family",
    "initial.c0",
    "initial.c2",
    "initial.r_scale",
    "initial.radius",
    "solver.grid_size",
    "solver.domain_radius",
    "solver.outer_bc",
    "solver.refinement",
    "solver.cfl_safety",
    "solver.dt_min",
    "solver.dt_max",
    "solver.pinch_threshold",
    "solver.gradient_abort",
    "solver.rescale_switch",
    "solver.max_steps",
    "window.xi0",
    "window.multiplier",
    "snapshot.dtau",
    "output.dir",
    "seed",
];

/// Keys left out of the configuration hash.
const UNHASHED: [&str; 1] = ["output.dir"];

/// Shorter of the plain and exponent renderings; both parse back exactly.
pub fn format_f64(x: f64) -> String {
    let plain = format!("{x}");
    let exp = format!("{x:e}");
    if exp.len() < plain.len() {
        exp
    } else {
        plain
    }
}

#[derive(Debug, Clone)]
struct Entry {
    key: String,
    value: String,
    line: usize,
    column: usize,
}

fn parse_entries(text: &str) -> Result<Vec<Entry>, ConfigError> {
    let mut out: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.trim_start();
        let indent = raw.len() - body.len();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let Some(eq) = body.find('=') else {
            return Err(ConfigError::Syntax {
                line,
                column: indent + 1,
                message: "expected `key=value`".into(),
            });
        };
        let key = body[..eq].trim_end();
        if key.is_empty()
            || !key
                .bytes()
                .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_' || b == b'.')
        {
            return Err(ConfigError::Syntax {
                line,
                column: indent + 1,
                message: format!("malformed key `{key}`"),
            });
        }
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                key: key.to_string(),
                line,
                column: indent + 1,
            });
        }
        if out.iter().any(|e| e.key == key) {
            return Err(ConfigError::Duplicate {
                key: key.to_string(),
                line,
            });
        }
        let after = &body[eq + 1..];
        let value = after.trim();
        let column = indent + eq + 2 + (after.len() - after.trim_start().len());
        out.push(Entry {
            key: key.to_string(),
            value: value.to_string(),
            line,
            column,
        });
    }
    Ok(out)
}

struct Reader {
    entries: Vec<Entry>,
    used: Vec<bool>,
}

impl Reader {
    fn new(entries: Vec<Entry>) -> Self {
        let used = vec![false; entries.len()];
        Self { entries, used }
    }

    fn raw(&mut self, key: &str) -> Option<&Entry> {
        let i = self.entries.iter().position(|e| e.key == key)?;
        self.used[i] = true;
        Some(&self.entries[i])
    }

    fn get<T>(&mut self, key: &str, default: T, parse: impl Fn(&str) -> Result<T, String>) -> Result<T, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some(e) => parse(&e.value).map_err(|message| ConfigError::Value {
                key: e.key.clone(),
                line: e.line,
                column: e.column,
                message,
            }),
        }
    }

    fn f64(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        self.get(key, default, |s| s.parse::<f64>().map_err(|e| e.to_string()))
    }

    fn u64(&mut self, key: &str, default: u64) -> Result<u64, ConfigError> {
        self.get(key, default, |s| s.parse::<u64>().map_err(|e| e.to_string()))
    }

    /// First entry that was never read, for keys that do not apply.
    fn leftover(&self) -> Option<&Entry> {
        self.entries.iter().zip(&self.used).find(|(_, u)| !**u).map(|(e, _)| e)
    }
}

fn parse_outer_bc(s: &str) -> Result<OuterBc, String> {
    match s {
        "dirichlet" => Ok(OuterBc::Dirichlet(None)),
        "neumann_zero" => Ok(OuterBc::NeumannZero),
        _ => match s.strip_prefix("dirichlet:") {
            Some(v) => v
                .parse::<f64>()
                .map(|v| OuterBc::Dirichlet(Some(v)))
                .map_err(|e| e.to_string()),
            None => Err("expected `dirichlet`, `dirichlet:<value>` or `neumann_zero`".into()),
        },
    }
}

fn format_outer_bc(bc: OuterBc) -> String {
    match bc {
        OuterBc::Dirichlet(None) => "dirichlet".into(),
        OuterBc::Dirichlet(Some(v)) => format!("dirichlet:{}", format_f64(v)),
        OuterBc::NeumannZero => "neumann_zero".into(),
    }
}

fn parse_refinement(s: &str) -> Result<Refinement, String> {
    if s == "none" {
        return Ok(Refinement::None);
    }
    match s.strip_prefix("dyadic:") {
        Some(v) => v
            .parse::<u32>()
            .map(Refinement::DyadicNearAxis)
            .map_err(|e| e.to_string()),
        None => Err("expected `none` or `dyadic:<levels>`".into()),
    }
}

fn format_refinement(r: Refinement) -> String {
    match r {
        Refinement::None => "none".into(),
        Refinement::DyadicNearAxis(l) => format!("dyadic:{l}"),
    }
}

fn solver_field(field: &str) -> String {
    if field == "snapshot_dtau" {
        "snapshot.dtau".into()
    } else {
        format!("solver.{field}")
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_entries(parse_entries(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    fn from_entries(entries: Vec<Entry>) -> Result<Self, ConfigError> {
        let d = RunConfig::default();
        let mut r = Reader::new(entries);

        let m = r.u64("geometry.m", d.geometry.axis_dim() as u64)?;
        let k = r.u64("geometry.k", d.geometry.fiber_dim() as u64)?;
        let to_u32 = |v: u64, field: &str| u32::try_from(v).map_err(|_| invalid(field, "too large"));
        let geometry = FlowGeometry::new(to_u32(m, "geometry.m")?, to_u32(k, "geometry.k")?)
            .map_err(|e| invalid(if m == 0 { "geometry.m" } else { "geometry.k" }, e.to_string()))?;

        let family = r.get("initial.family", d.initial.family().to_string(), |s| Ok(s.to_string()))?;
        let initial = match family.as_str() {
            "generic_pinch" => {
                let InitialData::GenericPinch { c0, c2, r_scale } = InitialData::default() else {
                    unreachable!("default family is generic_pinch")
                };
                InitialData::GenericPinch {
                    c0: r.f64("initial.c0", c0)?,
                    c2: r.f64("initial.c2", c2)?,
                    r_scale: r.f64("initial.r_scale", r_scale)?,
                }
            }
            "cylinder" => InitialData::Cylinder {
                radius: r.f64("initial.radius", 2.0)?,
            },
            other => {
                let e = r.raw("initial.family").expect("family was read").clone();
                return Err(ConfigError::Value {
                    key: e.key,
                    line: e.line,
                    column: e.column,
                    message: format!("unknown family `{other}` (expected generic_pinch or cylinder)"),
                });
            }
        };

        let s = &d.solver;
        let solver = SolverConfig {
            grid_size: r.u64("solver.grid_size", s.grid_size as u64)? as usize,
            domain_radius: r.f64("solver.domain_radius", s.domain_radius)?,
            outer_bc: r.get("solver.outer_bc", s.outer_bc, parse_outer_bc)?,
            refinement: r.get("solver.refinement", s.refinement, parse_refinement)?,
            cfl_safety: r.f64("solver.cfl_safety", s.cfl_safety)?,
            dt_min: r.f64("solver.dt_min", s.dt_min)?,
            dt_max: r.f64("solver.dt_max", s.dt_max)?,
            pinch_threshold: r.f64("solver.pinch_threshold", s.pinch_threshold)?,
            gradient_abort: r.f64("solver.gradient_abort", s.gradient_abort)?,
            rescale_switch: r.f64("solver.rescale_switch", s.rescale_switch)?,
            max_steps: r.u64("solver.max_steps", s.max_steps)?,
            snapshot_dtau: r.f64("snapshot.dtau", s.snapshot_dtau)?,
        };
        let xi0 = r.f64("window.xi0", d.window.xi0)?;
        let multiplier = r.f64("window.multiplier", d.window.multiplier)?;
        let output_dir = r.get("output.dir", d.output_dir.clone(), |s| Ok(PathBuf::from(s)))?;
        let seed = r.u64("seed", d.seed)?;

        if let Some(e) = r.leftover() {
            return Err(invalid(&e.key, format!("does not apply to initial.family={family}")));
        }

        let window = WindowSpec::new(xi0, multiplier).map_err(|e| {
            invalid(if xi0.is_finite() && xi0 >= 0.0 { "window.multiplier" } else { "window.xi0" }, e.to_string())
        })?;
        let cfg = RunConfig {
            geometry,
            initial,
            solver,
            window,
            output_dir,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.solver.validate().map_err(|e| match e {
            SolverError::Invalid { field, reason } => invalid(&solver_field(field), reason),
            other => invalid("solver", other.to_string()),
        })?;
        match self.initial {
            InitialData::GenericPinch { c0, c2, r_scale } => {
                if !(c0.is_finite() && c0 > 0.0) {
                    return Err(invalid("initial.c0", format!("must be positive, got {c0}")));
                }
                if !(r_scale.is_finite() && r_scale > 0.0) {
                    return Err(invalid("initial.r_scale", format!("must be positive, got {r_scale}")));
                }
                if !(c2.is_finite() && c0 + c2.min(0.0) * r_scale * r_scale > 0.0) {
                    return Err(invalid("initial.c2", format!("{c2} makes the profile nonpositive")));
                }
            }
            InitialData::Cylinder { radius } => {
                if !(radius.is_finite() && radius > 0.0) {
                    return Err(invalid("initial.radius", format!("must be positive, got {radius}")));
                }
            }
        }
        if let OuterBc::Dirichlet(Some(v)) = self.solver.outer_bc {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid("solver.outer_bc", format!("boundary value must be positive, got {v}")));
            }
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(invalid("output.dir", "must not be empty"));
        }
        Ok(())
    }

    /// `(key, value)` pairs in canonical order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let f = format_f64;
        let mut out = vec![
            ("geometry.m", self.geometry.axis_dim().to_string()),
            ("geometry.k", self.geometry.fiber_dim().to_string()),
            ("initial.family", self.initial.family().to_string()),
        ];
        match self.initial {
            InitialData::GenericPinch { c0, c2, r_scale } => {
                out.push(("initial.c0", f(c0)));
                out.push(("initial.c2", f(c2)));
                out.push(("initial.r_scale", f(r_scale)));
            }
            InitialData::Cylinder { radius } => out.push(("initial.radius", f(radius))),
        }
        let s = &self.solver;
        out.extend([
            ("solver.grid_size", s.grid_size.to_string()),
            ("solver.domain_radius", f(s.domain_radius)),
            ("solver.outer_bc", format_outer_bc(s.outer_bc)),
            ("solver.refinement", format_refinement(s.refinement)),
            ("solver.cfl_safety", f(s.cfl_safety)),
            ("solver.dt_min", f(s.dt_min)),
            ("solver.dt_max", f(s.dt_max)),
            ("solver.pinch_threshold", f(s.pinch_threshold)),
            ("solver.gradient_abort", f(s.gradient_abort)),
            ("solver.rescale_switch", f(s.rescale_switch)),
            ("solver.max_steps", s.max_steps.to_string()),
            ("window.xi0", f(self.window.xi0)),
            ("window.multiplier", f(self.window.multiplier)),
            ("snapshot.dtau", f(s.snapshot_dtau)),
            ("output.dir", self.output_dir.display().to_string()),
            ("seed", self.seed.to_string()),
        ]);
        out
    }

    pub fn to_canonical(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    /// Canonical lines that determine the run, without the output location.
    pub fn hashed_lines(&self) -> Vec<String> {
        self.entries()
            .into_iter()
            .filter(|(k, _)| !UNHASHED.contains(k))
            .map(|(k, v)| format!("{k}={v}"))
            .collect()
    }

    /// SHA-256 of [`Self::hashed_lines`], hex encoded.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for l in self.hashed_lines() {
            h.update(l.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }

    /// Replaces values by key; keys are checked as in a config file.
    pub fn with_overrides(&self, overrides: &[(String, String)]) -> Result<Self, ConfigError> {
        let mut entries = parse_entries(&self.to_canonical())?;
        for (n, (key, value)) in overrides.iter().enumerate() {
            if !KEYS.contains(&key.as_str()) {
                return Err(ConfigError::UnknownKey {
                    key: key.clone(),
                    line: n + 1,
                    column: 1,
                });
            }
            match entries.iter_mut().find(|e| &e.key == key) {
                Some(e) => e.value = value.clone(),
                None => entries.push(Entry {
                    key: key.clone(),
                    value: value.clone(),
                    line: n + 1,
                    column: key.len() + 2,
                }),
            }
        }
        if overrides.iter().any(|(k, _)| k == "initial.family") {
            // parameters of the old family no longer apply
            let family = self.initial.family();
            let new_family = &overrides.iter().rev().find(|(k, _)| k == "initial.family").expect("present").1;
            if new_family != family {
                entries.retain(|e| {
                    !e.key.starts_with("initial.")
                        || e.key == "initial.family"
                        || overrides.iter().any(|(k, _)| k == &e.key)
                });
            }
        }
        Self::from_entries(entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trip() {
        let text = RunConfig::default().to_canonical();
        let parsed = RunConfig::parse(&text).unwrap();
        assert_eq!(parsed, RunConfig::default());
        assert_eq!(parsed.to_canonical(), text);
        assert!(text.contains("geometry.m=3\ngeometry.k=1\n"));
    }

    #[test]
    fn float_rendering() {
        assert_eq!(format_f64(1e-12), "1e-12");
        assert_eq!(format_f64(20.0), "20");
        assert_eq!(format_f64(0.4), "0.4");
        assert_eq!(format_f64(200000.0), "2e5");
        let x = 0.9 * std::f64::consts::SQRT_2;
        assert_eq!(format_f64(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn zero_axis_dimension_is_rejected() {
        let e = RunConfig::parse("geometry.m=0\n").unwrap_err();
        assert_eq!(e.field(), Some("geometry.m"));
    }

    #[test]
    fn unknown_key_is_named_with_position() {
        let e = RunConfig::parse("geometry.m=3\n  foo = 1\n").unwrap_err();
        match &e {
            ConfigError::UnknownKey { key, line, column } => {
                assert_eq!((key.as_str(), *line, *column), ("foo", 2, 3));
            }
            other => panic!("{other:?}"),
        }
        assert!(e.to_string().contains("`foo`"));
    }

    #[test]
    fn value_errors_point_at_the_value() {
        let e = RunConfig::parse("# c\nsolver.grid_size = abc\n").unwrap_err();
        match e {
            ConfigError::Value { key, line, column, .. } => {
                assert_eq!((key.as_str(), line, column), ("solver.grid_size", 2, 20));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(RunConfig::parse("novalue\n"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(
            RunConfig::parse("seed=1\nseed=2\n"),
            Err(ConfigError::Duplicate { line: 2, .. })
        ));
    }

    #[test]
    fn validation_names_the_field() {
        let e = RunConfig::parse("solver.cfl_safety=2\n").unwrap_err();
        assert_eq!(e.field(), Some("solver.cfl_safety"));
        let e = RunConfig::parse("snapshot.dtau=-1\n").unwrap_err();
        assert_eq!(e.field(), Some("snapshot.dtau"));
        let e = RunConfig::parse("initial.family=cylinder\ninitial.c0=1\n").unwrap_err();
        assert_eq!(e.field(), Some("initial.c0"));
    }

    #[test]
    fn boundary_and_refinement_tokens() {
        let c = RunConfig::parse("solver.outer_bc=dirichlet:3\nsolver.refinement=none\n").unwrap();
        assert_eq!(c.solver.outer_bc, OuterBc::Dirichlet(Some(3.0)));
        assert_eq!(c.solver.refinement, Refinement::None);
        assert!(c.to_canonical().contains("solver.outer_bc=dirichlet:3\n"));
        assert!(RunConfig::parse("solver.outer_bc=robin\n").is_err());
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.output_dir = PathBuf::from("elsewhere");
        assert_eq!(a.hash(), b.hash());
        b.seed = 7;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn overrides() {
        let base = RunConfig::default();
        let c = base
            .with_overrides(&[("solver.grid_size".into(), "512".into())])
            .unwrap();
        assert_eq!(c.solver.grid_size, 512);
        let cyl = base
            .with_overrides(&[
                ("initial.family".into(), "cylinder".into()),
                ("initial.radius".into(), "3".into()),
            ])
            .unwrap();
        assert_eq!(cyl.initial, InitialData::Cylinder { radius: 3.0 });
        assert!(base.with_overrides(&[("bogus".into(), "1".into())]).is_err());
    }
}
