//! `acl`: command-line front end of the concentration-function laboratory.
//!
//! Exit codes: 0 on success, 1 when a `verify` check fails, 2 on any config,
//! input or runtime error.

mod commands;
mod config;
mod table;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use acl_core::ConstantsPolicy;
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use crate::config::{Common, Format, Loaded, OutputSpec};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] acl_core::Error),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Parser, Debug)]
#[command(name = "acl", version, about = "Concentration functions of weighted sums: estimates, arithmetic margins and bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Constants policy file; the bundled calibrated policy when absent.
    #[arg(long, global = true)]
    policy: Option<PathBuf>,
    /// Worker threads. Output does not depend on it.
    #[arg(long, global = true, env = "ACL_THREADS")]
    threads: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct ConfigArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Q(F_a, lambda) on a grid of radii, exact or Monte Carlo.
    EstimateQ {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(flatten)]
        global: Global,
    },
    /// Smallest feasible t for the essential least common denominator.
    Lcd {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(flatten)]
        global: Global,
    },
    /// Condition margins alpha(D).
    Margin {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(flatten)]
        global: Global,
    },
    /// Bound right-hand sides against empirical Q.
    Bounds {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(flatten)]
        global: Global,
    },
    /// Log-log decay slope of exact Q in n.
    Rates {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(flatten)]
        global: Global,
    },
    /// Runs a verification suite, or `all`.
    Verify {
        suite: String,
        #[command(flatten)]
        global: Global,
    },
    /// Recomputes the default constants policy and prints it as JSON.
    Calibrate {
        #[command(flatten)]
        global: Global,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("acl: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::EstimateQ { cfg, global } => tabulate(&cfg, &global, commands::estimate_q),
        Command::Lcd { cfg, global } => tabulate(&cfg, &global, commands::lcd),
        Command::Margin { cfg, global } => tabulate(&cfg, &global, commands::margin),
        Command::Bounds { cfg, global } => tabulate(&cfg, &global, commands::bounds),
        Command::Rates { cfg, global } => tabulate(&cfg, &global, commands::rates),
        Command::Verify { suite, global } => {
            let policy = load_policy(global.policy.as_deref())?;
            let outcome = in_pool(global.threads, || commands::verify(&suite, &policy))??;
            let format = global.format.unwrap_or_default();
            write_out(global.out.as_deref(), &outcome.table.render(format))?;
            let mut failed = 0;
            for r in &outcome.reports {
                let bad: Vec<_> = r.failures().collect();
                eprintln!("{:<12} {} ({} checks)", r.suite, if bad.is_empty() { "PASS" } else { "FAIL" }, r.checks.len());
                for c in &bad {
                    eprintln!("    {}: {}", c.name, c.detail);
                }
                failed += bad.len();
            }
            Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Calibrate { global } => {
            if global.format == Some(Format::Csv) {
                return Err(CliError::Config("calibrate writes a JSON policy file only".into()));
            }
            let json = in_pool(global.threads, commands::calibrate_policy)??;
            write_out(global.out.as_deref(), &json)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn tabulate<T, F>(args: &ConfigArgs, global: &Global, f: F) -> Result<ExitCode, CliError>
where
    T: DeserializeOwned + Common + Send + Sync,
    F: FnOnce(&Loaded<T>, &ConstantsPolicy) -> Result<table::Table, CliError> + Send,
{
    let text = config::read(&args.config)?;
    let loaded: Loaded<T> = config::parse(&text, args.seed)?;
    let c = &loaded.config;
    let policy_path = global.policy.as_deref().or(c.policy().map(|p| resolve(&args.config, p)).as_deref()).map(Path::to_path_buf);
    let policy = load_policy(policy_path.as_deref())?;
    let OutputSpec { path, format } = c.output().clone();
    let out = global.out.clone().or(path.map(|p| resolve(&args.config, &p)));
    let format = global.format.or(format).unwrap_or_default();
    let table = in_pool(global.threads, || f(&loaded, &policy))??;
    write_out(out.as_deref(), &table.render(format))?;
    Ok(ExitCode::SUCCESS)
}

/// Paths inside a config are relative to the config file.
fn resolve(config: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        config.parent().unwrap_or(Path::new(".")).join(p)
    }
}

fn load_policy(path: Option<&Path>) -> Result<ConstantsPolicy, CliError> {
    match path {
        None => Ok(ConstantsPolicy::default_calibrated().clone()),
        Some(p) => {
            let text = config::read(p)?;
            ConstantsPolicy::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
        }
    }
}

fn in_pool<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R, CliError> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(CliError::Config("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("cannot start {n} worker threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn write_out(path: Option<&Path>, content: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, content).map_err(|source| CliError::Io { path: p.display().to_string(), source }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Io { path: "stdout".into(), source })
        }
    }
}
