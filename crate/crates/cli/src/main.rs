//! `psdecay`: drives the kernel, solver, iteration, decay and inequality
//! experiments from a TOML configuration.
//!
//! Exit codes: 0 when every verdict passes, 1 when a verdict fails, 2 on a
//! runtime or configuration error.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use config::Command;

#[derive(Parser)]
#[command(name = "psdecay", version, about = "Pseudo-differential diffusion-convection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML file with [grid], [model], [solver] and [experiment] sections.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override one key, e.g. `--set model.theta=3`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
    /// Seed for randomized experiments.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Kernel norm laws and pointwise envelopes over a time sweep.
    Greens {
        #[command(flatten)]
        common: Common,
        /// `t=A..B` (doubling) or `t=A..B/K` (K log-spaced points).
        #[arg(long)]
        sweep: Option<String>,
    },
    /// Time-step the equation and record norms.
    Solve {
        #[command(flatten)]
        common: Common,
    },
    /// Fixed-point iteration of the integral form on a short interval.
    Picard {
        #[command(flatten)]
        common: Common,
    },
    /// Long-time run with fitted decay exponents.
    Decay {
        #[command(flatten)]
        common: Common,
    },
    /// Randomized checks of the functional inequalities.
    VerifyLemmas {
        #[command(flatten)]
        common: Common,
    },
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(cmd: Cmd) -> Result<bool> {
    let started = Instant::now();
    let (command, common, sweep) = match cmd {
        Cmd::Greens { common, sweep } => (Command::Greens, common, sweep),
        Cmd::Solve { common } => (Command::Solve, common, None),
        Cmd::Picard { common } => (Command::Picard, common, None),
        Cmd::Decay { common } => (Command::Decay, common, None),
        Cmd::VerifyLemmas { common } => (Command::VerifyLemmas, common, None),
    };
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let sweep = sweep.as_deref().map(config::parse_sweep).transpose()?;
    let mut cfg = config::load(common.config.as_deref(), &common.overrides)?;
    if let Some(seed) = common.seed {
        cfg.experiment.seed = Some(seed);
    }
    let resolved = cfg.resolve(command)?;
    let mut warnings: Vec<String> = cfg
        .warnings(command, &resolved)
        .into_iter()
        .map(|v| v.message)
        .collect();
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    std::fs::create_dir_all(&common.out)
        .with_context(|| format!("creating {}", common.out.display()))?;

    let out = common.out.as_path();
    let outcome = match command {
        Command::Greens => commands::greens(&mut cfg, &resolved, sweep, out)?,
        Command::Solve => commands::solve(&mut cfg, &resolved, out)?,
        Command::Picard => commands::picard(&mut cfg, &resolved, out)?,
        Command::Decay => commands::decay(&mut cfg, &resolved, out)?,
        Command::VerifyLemmas => commands::verify_lemmas(&mut cfg, &resolved, common.seed)?,
    };
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    warnings.extend(outcome.warnings);

    // the config now holds every default the command consulted
    println!("# effective configuration\n{}", toml::to_string(&cfg)?);
    write_json(&out.join("report.json"), &outcome.report)?;
    let manifest = json!({
        "command": command.name(),
        "versions": {
            "psdecay": psdecay::VERSION,
            "cli": env!("CARGO_PKG_VERSION"),
        },
        "config": cfg,
        "seed": cfg.experiment.seed,
        "threads": rayon::current_num_threads(),
        "warnings": warnings,
        "passed": outcome.passed,
        "timings": { "wall_seconds": started.elapsed().as_secs_f64() },
    });
    write_json(&out.join("manifest.json"), &manifest)?;
    println!(
        "{}: {}",
        command.name(),
        if outcome.passed { "PASS" } else { "FAIL" }
    );
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
