use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use firstdetect::cli::{cmd_simulate, cmd_spectrum, cmd_sweep, cmd_verify, CliError, RouteChoice, RunOptions};
use firstdetect::verify::Level;

/// First-detection statistics under continuous projective measurement.
///
/// FIRSTDETECT_SEED is reserved; no computation currently draws random
/// numbers from it.
#[derive(Parser)]
#[command(name = "firstdetect", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Output directory for tables and manifests.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Multiplies every default tolerance.
    #[arg(long, default_value_t = 1.0)]
    tol_scale: f64,
    /// Worker threads (default: one per core).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write S(t), F(t) tables.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        /// Override the scenario's route.
        #[arg(long, value_enum)]
        route: Option<RouteChoice>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the cross-route verification suite.
    Verify {
        #[arg(long, value_enum, default_value = "fast")]
        level: LevelArg,
        #[command(flatten)]
        common: Common,
    },
    /// Tabulate the infinite-time survival over a parameter grid.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Dump eigenvalues, bound states and sampled eigenfunctions.
    Spectrum {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Print the tool version.
    Version,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Fast,
    Full,
}

fn options(common: &Common, route: Option<RouteChoice>) -> Result<RunOptions, CliError> {
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    Ok(RunOptions {
        out_dir: common.out.clone(),
        tol_scale: common.tol_scale,
        route,
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { scenario, route, common } => {
            let manifest = cmd_simulate(&scenario, &options(&common, route)?)?;
            for out in &manifest.outputs {
                println!("{out}");
            }
        }
        Command::Verify { level, common } => {
            let level = match level {
                LevelArg::Fast => Level::Fast,
                LevelArg::Full => Level::Full,
            };
            let outcome = cmd_verify(level, &options(&common, None)?);
            let path = common.out.join("verify_report.json");
            if let Ok(text) = std::fs::read_to_string(&path) {
                print!("{text}");
            }
            outcome?;
        }
        Command::Sweep { scenario, common } => {
            let manifest = cmd_sweep(&scenario, &options(&common, None)?)?;
            for out in &manifest.outputs {
                println!("{out}");
            }
        }
        Command::Spectrum { scenario, common } => {
            let manifest = cmd_spectrum(&scenario, &options(&common, None)?)?;
            for out in &manifest.outputs {
                println!("{out}");
            }
        }
        Command::Version => println!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("firstdetect: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
