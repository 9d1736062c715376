//! `tsl`: shape turnpike experiments driven by JSON run configurations.
//!
//! Exit status is 0 when every solve met its duality-gap tolerance, 2 when a
//! tolerance was missed and 1 on errors.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use shape_turnpike::config::{parse_config, RunConfig};
use shape_turnpike::io::read_last_snapshot;
use shape_turnpike::scenario;
use thiserror::Error;

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] shape_turnpike::Error),
    #[error("thread pool: {0}")]
    Threads(#[from] rayon::ThreadPoolBuildError),
    #[error("{0}")]
    Input(String),
}

#[derive(Parser)]
#[command(name = "tsl", version, about = "Shape turnpike experiments for linear parabolic models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the horizon sweep.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the static problem and write `static/`.
    SolveStatic(Common),
    /// Full run at a single horizon: static and dynamic solves, diagnostics.
    SolveDynamic(Common),
    /// One full run per entry of `T_list`, each into `T_<value>/`.
    Sweep(Common),
    /// Existence diagnosis for the target.
    Classify(Common),
    /// Spectral prediction for the terminal-cost turnpike.
    Spectral {
        #[command(flatten)]
        common: Common,
        /// Solve again instead of reading `dynamic/y` from the output directory.
        #[arg(long)]
        resolve: bool,
    },
    /// Recompute curve metrics from a saved `curves.csv`.
    Report {
        #[command(flatten)]
        common: Common,
        /// Curve file; defaults to `curves.csv` in the output directory.
        #[arg(long)]
        curves: Option<PathBuf>,
    },
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = parse_config(&common.config)?;
    if let Some(out) = &common.out {
        cfg.output = out.clone();
    }
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(CliError::Input("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(cfg)
}

fn status(certified: bool) -> ExitCode {
    if certified {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn pretty<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).unwrap_or_default()
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let start = Instant::now();
    let code = match cli.command {
        Command::SolveStatic(common) => {
            let cfg = load(&common)?;
            let s = scenario::run_static(&cfg)?;
            println!(
                "static cost {:.6e}  gap {:.3e}  iterations {}  relaxed area {:.4e}",
                s.cost, s.gap, s.iterations, s.relaxation.relaxed_area
            );
            status(s.certified)
        }
        Command::SolveDynamic(common) => {
            let cfg = load(&common)?;
            let o = scenario::run_scenario(&cfg)?;
            let s = &o.summary;
            println!(
                "T {}  cost {:.6e}  gap {:.3e}  iterations {}  class {}",
                s.t_final,
                s.cost,
                s.gap,
                s.iterations,
                serde_json::to_value(s.classification.case).unwrap_or_default()
            );
            if let Some(i) = s.turnpike.integral_turnpike {
                println!("integral turnpike {i:.6e}");
            }
            eprintln!("solve time {:.2}s", s.seconds);
            status(s.certified)
        }
        Command::Sweep(common) => {
            let cfg = load(&common)?;
            let (summary, _) = scenario::sweep_t(&cfg)?;
            println!("{:>8} {:>14} {:>11} {:>14}  status", "T", "cost", "gap", "integral");
            for r in &summary.rows {
                match &r.error {
                    None => println!(
                        "{:>8} {:>14.6e} {:>11.3e} {:>14.6e}  {}",
                        r.t_final,
                        r.cost.unwrap_or(f64::NAN),
                        r.gap.unwrap_or(f64::NAN),
                        r.integral_turnpike.unwrap_or(f64::NAN),
                        if r.certified { "certified" } else { "gap unmet" }
                    ),
                    Some(e) => println!("{:>8} failed: {e}", r.t_final),
                }
                eprintln!("T {} took {:.2}s", r.t_final, r.seconds);
            }
            if summary.rows.iter().any(|r| r.error.is_some()) {
                ExitCode::FAILURE
            } else {
                status(summary.certified)
            }
        }
        Command::Classify(common) => {
            let cfg = load(&common)?;
            println!("{}", pretty(&scenario::run_classify(&cfg)?));
            ExitCode::SUCCESS
        }
        Command::Spectral { common, resolve } => {
            let cfg = load(&common)?;
            let saved = cfg.output.join("dynamic").join("y");
            let terminal = if !resolve && saved.join("index.json").exists() {
                let (entry, y) = read_last_snapshot(&saved)?;
                eprintln!("using saved terminal state at t = {}", entry.t);
                Some(y)
            } else {
                None
            };
            println!("{}", pretty(&scenario::run_spectral(&cfg, terminal)?.summary()));
            ExitCode::SUCCESS
        }
        Command::Report { common, curves } => {
            let cfg = load(&common)?;
            let path = curves.unwrap_or_else(|| cfg.output.join("curves.csv"));
            if !path.exists() {
                return Err(CliError::Input(format!("no curve file at {}", path.display())));
            }
            println!("{}", pretty(&scenario::run_report(&cfg, &path)?));
            ExitCode::SUCCESS
        }
    };
    eprintln!("wall clock {:.2}s", start.elapsed().as_secs_f64());
    Ok(code)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
