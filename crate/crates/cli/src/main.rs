use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stormpanel_cli::{run_command, write_synthetic_fixture, CliError, Options};

#[derive(Parser)]
#[command(
    name = "stormpanel",
    version,
    about = "Storm hazard linkage and county employment analytics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Worker threads; defaults to STORMPANEL_THREADS, then all cores.
    #[arg(long, global = true, env = "STORMPANEL_THREADS")]
    threads: Option<usize>,
}

#[derive(clap::Args, Clone)]
struct StageArgs {
    #[arg(long)]
    config: PathBuf,
    /// Hazard filter: all, strong_wind, extreme_wind, extreme_precip, compound.
    #[arg(long)]
    cond: Option<String>,
    /// Proceed even when upstream artifacts are stale.
    #[arg(long)]
    force: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    wind_factor: Option<f64>,
    #[arg(long)]
    precip_factor: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Mask tracks to land, match entities, attach precipitation.
    Link(StageArgs),
    /// Join incidents with employment changes.
    Table(StageArgs),
    /// Sector × lag composites and conditioned distributions.
    Composite(StageArgs),
    /// Two-way fixed-effects regressions.
    Fe(StageArgs),
    /// Event-study difference-in-differences.
    Did(StageArgs),
    /// Principal components of event features.
    Pca(StageArgs),
    /// Cross-validated MLR and random-forest models.
    Predict(StageArgs),
    /// Score the trained model under scaled hazards.
    Scenario(StageArgs),
    /// All stages in order.
    Run(StageArgs),
    /// Write the synthetic fixture and its run.toml.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    let (name, args) = match cli.command {
        Command::Synth { out, seed } => return write_synthetic_fixture(&out, seed),
        Command::Link(a) => ("link", a),
        Command::Table(a) => ("table", a),
        Command::Composite(a) => ("composite", a),
        Command::Fe(a) => ("fe", a),
        Command::Did(a) => ("did", a),
        Command::Pca(a) => ("pca", a),
        Command::Predict(a) => ("predict", a),
        Command::Scenario(a) => ("scenario", a),
        Command::Run(a) => ("run", a),
    };
    let opts = Options {
        cond: args.cond,
        force: args.force,
        seed: args.seed,
        wind_factor: args.wind_factor,
        precip_factor: args.precip_factor,
    };
    run_command(name, &args.config, &opts).map(|_| ())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(1);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let outcome = std::panic::catch_unwind(|| dispatch(cli));
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => ExitCode::from(3),
    }
}
