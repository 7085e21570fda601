use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use otto_core::experiment::{
    parse_config, run_experiment, write_summary, write_sweep, write_timeseries, Mode,
};

#[derive(Parser)]
#[command(name = "otto", version, about = "Quantum Otto cycle simulator")]
struct Cli {
    /// Only print errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's particle count.
        #[arg(long)]
        particles: Option<usize>,
    },
}

fn with_suffix(prefix: &str, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{prefix}{suffix}"))
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

fn run(config: &Path, seed: Option<u64>, particles: Option<usize>) -> Result<()> {
    let text = std::fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let mut cfg = parse_config(&text).with_context(|| format!("in {}", config.display()))?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(n) = particles {
        cfg.particles = n;
    }
    cfg.validate()?;
    log::info!("running {:?} with {} particles, seed {}", cfg.mode, cfg.particles, cfg.seed);

    let out = run_experiment(&cfg)?;
    let summary_path = with_suffix(&cfg.output_prefix, "_summary.json");
    ensure_parent(&summary_path)?;
    if !out.timeseries.is_empty() {
        let path = with_suffix(&cfg.output_prefix, "_timeseries.csv");
        write_timeseries(&out.timeseries, &path)?;
        log::info!("wrote {}", path.display());
    }
    if let Some(rows) = &out.summary.sweep {
        let path = with_suffix(&cfg.output_prefix, "_sweep.csv");
        write_sweep(rows, &path)?;
        log::info!("wrote {}", path.display());
    }
    write_summary(&out.summary, &summary_path)?;
    log::info!("wrote {}", summary_path.display());

    let a = &out.summary.analytic;
    match cfg.mode {
        Mode::Quasistatic | Mode::SweepSqueezing => {
            log::info!("analytic R = {:.6}, mode {:?}", a.r, a.mode)
        }
        Mode::DynamicCycle => {
            let c = out.summary.cycle.as_ref().expect("cycle summary");
            log::info!(
                "R_sim = {:.5} ± {:.5} (analytic {:.5}), efficiency {:?}",
                c.r_sim,
                c.r_stderr,
                a.r,
                c.efficiency
            );
        }
        Mode::Quench => {
            let q = out.summary.quench.as_ref().expect("quench summary");
            log::info!("s = {:.4} (expected {:.4})", q.s_measured, q.s_expected);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    let result = match cli.command {
        Command::Run {
            config,
            seed,
            particles,
        } => run(&config, seed, particles),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
