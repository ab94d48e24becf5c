use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pinchflow::harness::commands::{parse_grid, reports_exit_code, summary_table};
use pinchflow::harness::{
    analyze, exit, plot, simulate, status_exit_code, sweep, verify, Claim, HarnessError, RunConfig,
};
use pinchflow::asymptotics::Verdict;

/// Simulates rotationally symmetric mean curvature flow up to a neck pinch
/// and checks the rescaled asymptotics of the run.
///
/// Exit codes: 0 ok, 1 I/O or solver failure, 2 configuration or usage
/// error, 3 boundary_contaminated, 4 gradient_blowup, 5 max_steps,
/// 6 claim failure.
#[derive(Parser)]
#[command(name = "pinchflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct OutArg {
    /// Run directory (overridden by PINCHFLOW_OUT).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate to the pinch and write a run directory.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        out: OutArg,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fit every rescaled snapshot and write the fit and ratio series.
    Analyze {
        #[command(flatten)]
        out: OutArg,
    },
    /// Check claims on an analyzed run and write reports.
    Verify {
        #[command(flatten)]
        out: OutArg,
        /// Comma-separated claim names, or `all`.
        #[arg(long, default_value = "all")]
        claims: String,
    },
    /// Run a parameter grid, e.g. `solver.grid_size=512,1024;initial.c2=0.05,0.1`.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        out: OutArg,
        #[arg(long)]
        grid: String,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write plotting scripts for an analyzed run.
    Plot {
        #[command(flatten)]
        out: OutArg,
    },
}

fn out_dir(arg: &OutArg, fallback: Option<PathBuf>) -> Result<PathBuf, HarnessError> {
    if let Some(env) = std::env::var_os("PINCHFLOW_OUT").filter(|v| !v.is_empty()) {
        return Ok(PathBuf::from(env));
    }
    arg.out
        .clone()
        .or(fallback)
        .ok_or_else(|| HarnessError::Usage("no run directory: pass --out or set PINCHFLOW_OUT".into()))
}

fn load(path: &Path, seed: Option<u64>) -> Result<RunConfig, HarnessError> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<i32, HarnessError> {
    match cli.command {
        Command::Simulate { config, out, seed } => {
            let mut cfg = load(&config, seed)?;
            let dir = out_dir(&out, Some(cfg.output_dir.clone()))?;
            cfg.output_dir = dir.clone();
            let (manifest, _) = simulate(&cfg, &dir)?;
            println!(
                "{}: status {}, T* = {}, {} steps, {} snapshots",
                dir.display(),
                manifest.status.as_str(),
                manifest.t_star.map_or("none".into(), |t| format!("{t:.16e}")),
                manifest.steps,
                manifest.snapshots.len()
            );
            Ok(status_exit_code(manifest.status))
        }
        Command::Analyze { out } => {
            let dir = out_dir(&out, None)?;
            let s = analyze(&dir)?;
            println!(
                "{}: {} fits ({} snapshots skipped), {} final-ratio points",
                dir.display(),
                s.fits.len(),
                s.skipped,
                s.final_ratio.len()
            );
            Ok(exit::OK)
        }
        Command::Verify { out, claims } => {
            let claims = Claim::parse_list(&claims)?;
            let dir = out_dir(&out, None)?;
            let reports = verify(&dir, &claims)?;
            print!("{}", summary_table(&reports));
            for r in reports.iter().filter(|r| r.verdict == Verdict::Inconclusive) {
                eprintln!("warning: {} is inconclusive: {}", r.claim, r.notes.join("; "));
            }
            Ok(reports_exit_code(&reports))
        }
        Command::Sweep { config, out, grid, jobs, seed } => {
            let cfg = load(&config, seed)?;
            let grid = parse_grid(&grid)?;
            let dir = out_dir(&out, Some(cfg.output_dir.clone()))?;
            let m = sweep(&cfg, &grid, &dir, jobs)?;
            for c in &m.cells {
                let state = match (&c.status, &c.error, c.duplicate_of) {
                    (_, _, Some(j)) => format!("same as cell {j}"),
                    (Some(s), _, _) => s.as_str().to_string(),
                    (_, Some(e), _) => format!("error: {e}"),
                    _ => "not run".into(),
                };
                println!("cell {:03} {:?}: {state}", c.index, c.overrides);
            }
            Ok(exit::OK)
        }
        Command::Plot { out } => {
            let dir = out_dir(&out, None)?;
            for p in plot(&dir)? {
                println!("{}", p.display());
            }
            Ok(exit::OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = run(cli).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    });
    ExitCode::from(code as u8)
}
