use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mqb_cli::{run, CliError, Command, ConfigError, ExperimentConfig, ResultCache, RunContext};
use mqb_core::pipeline::SystemKind;

#[derive(Parser)]
#[command(name = "mqb", version, about = "Compare MQB and qubit-only simulations of vibronic dynamics")]
struct Args {
    /// TOML experiment file; built-in defaults when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Cache directory (overrides `output.cache`).
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// Recompute everything.
    #[arg(long, global = true)]
    no_cache: bool,
    /// Sweep threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Accepted for scripts; every run is deterministic already.
    #[arg(long, global = true)]
    seedless: bool,
    #[arg(long, global = true, value_enum, default_value_t = Sys::Isolated)]
    system: Sys,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Sys {
    Isolated,
    Open,
}

#[derive(Subcommand)]
enum Cmd {
    /// Qubit encoding and per-step gate counts.
    Encode,
    /// Reference dynamics.
    SimulateExact,
    /// MQB dynamics over the configured error rates.
    SimulateMqb,
    /// Closed-system Trotter circuits.
    SimulateTrotter,
    /// Dilated open-system circuits.
    SimulateOpen,
    /// Equal-error step counts.
    Match {
        /// CSV of `gamma_err_per_s, eps`.
        #[arg(long, requires = "qubit_curve")]
        mqb_curve: Option<PathBuf>,
        /// CSV of `N, eps`.
        #[arg(long, requires = "mqb_curve")]
        qubit_curve: Option<PathBuf>,
    },
    /// Resource table for both systems.
    ReportTable,
    /// Advantage against mode count.
    Scaling,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    match execute(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mqb: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(args: Args) -> Result<(), CliError> {
    let cfg = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let cache = if args.no_cache {
        ResultCache::disabled()
    } else {
        let dir = args.cache.clone().unwrap_or_else(|| cfg.output.cache.clone());
        ResultCache::open(&dir).map_err(|e| {
            CliError::Config(ConfigError {
                field: "output.cache".into(),
                message: format!("{}: {e}", dir.display()),
            })
        })?
    };
    let cmd = match args.cmd {
        Cmd::Encode => Command::Encode,
        Cmd::SimulateExact => Command::SimulateExact,
        Cmd::SimulateMqb => Command::SimulateMqb,
        Cmd::SimulateTrotter => Command::SimulateTrotter,
        Cmd::SimulateOpen => Command::SimulateOpen,
        Cmd::Match { mqb_curve, qubit_curve } => Command::Match { mqb_curve, qubit_curve },
        Cmd::ReportTable => Command::ReportTable,
        Cmd::Scaling => Command::Scaling,
    };
    let ctx = RunContext {
        out: args.out.unwrap_or_else(|| cfg.output.dir.clone()),
        cache,
        workers: args.workers,
        system: match args.system {
            Sys::Isolated => SystemKind::Isolated,
            Sys::Open => SystemKind::Open,
        },
    };
    let _ = args.seedless;
    let result = run(&cmd, &cfg, &ctx);
    let artifacts = match &result {
        Ok(o) => o.artifacts.len(),
        Err(_) => 0,
    };
    log::info!(
        "{}: {artifacts} files in {}, {} computed, {} cached",
        cmd.name(),
        ctx.out.display(),
        ctx.cache.computed(),
        ctx.cache.hits()
    );
    result.map(|_| ())
}
