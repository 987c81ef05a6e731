use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rapsim::config::{validate, ExperimentConfig, ExperimentKind};
use rapsim::runner::{output_dir, run_experiment, OUTPUT_ROOT_ENV};
use rapsim::Error;

const EXIT_INVALID: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(
    name = "rapsim",
    version,
    about = "Reflecting active-passive population experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Two-species exclusion room: currents and exit times over ε and populations.
    QueueRoom(RunArgs),
    /// Na+/Cl- relabelling of the room: currents over door widths and ion counts.
    IonChannel(RunArgs),
    /// Free Ornstein–Uhlenbeck path ensemble.
    Ou(RunArgs),
    /// Reflected Ornstein–Uhlenbeck paths with their free twins.
    ReflectedOu(RunArgs),
    /// M/M/ω/N queue traces against the stationary law.
    Mmwn(RunArgs),
    /// KS distance of reflected scaled arrivals to |N(0, t)| over scales α.
    LimitCheck(RunArgs),
    /// Check a configuration without running it.
    Validate {
        /// Experiment kind whose table is checked.
        kind: String,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Print the fully resolved configuration as JSON.
    Show {
        kind: String,
        #[command(flatten)]
        args: RunArgs,
    },
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    /// TOML config file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<usize>,
    /// Output directory (default: $RAPSIM_OUTPUT_ROOT/<kind> or output/<kind>).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Override a config key, e.g. `--set epsilons=[0.2]`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn load(kind: ExperimentKind, args: &RunArgs) -> Result<ExperimentConfig, Error> {
    let text = match &args.config {
        Some(path) => std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?,
        None => String::new(),
    };
    let mut config = ExperimentConfig::from_toml(kind, &text, &args.overrides)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(replicas) = args.replicas {
        config.replicas = replicas;
    }
    if let Some(output) = &args.output {
        config.output = Some(output.clone());
    }
    Ok(config)
}

fn parse_kind(name: &str) -> Result<ExperimentKind, Error> {
    ExperimentKind::from_name(name).ok_or_else(|| {
        let names: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
        Error::Parse(format!(
            "unknown kind `{name}` (expected one of {})",
            names.join(", ")
        ))
    })
}

fn invalid(err: Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(EXIT_INVALID)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::QueueRoom(a) => (ExperimentKind::QueueRoom, a),
        Command::IonChannel(a) => (ExperimentKind::IonChannel, a),
        Command::Ou(a) => (ExperimentKind::Ou, a),
        Command::ReflectedOu(a) => (ExperimentKind::ReflectedOu, a),
        Command::Mmwn(a) => (ExperimentKind::Mmwn, a),
        Command::LimitCheck(a) => (ExperimentKind::LimitCheck, a),
        Command::Validate { kind, args } => {
            let config = match parse_kind(&kind).and_then(|k| load(k, &args)) {
                Ok(c) => c,
                Err(e) => return invalid(e),
            };
            let violations = validate(&config);
            if violations.is_empty() {
                println!("ok");
                return ExitCode::SUCCESS;
            }
            for v in violations {
                eprintln!("{v}");
            }
            return ExitCode::from(EXIT_INVALID);
        }
        Command::Show { kind, args } => {
            let config = match parse_kind(&kind).and_then(|k| load(k, &args)) {
                Ok(c) => c,
                Err(e) => return invalid(e),
            };
            println!(
                "{}",
                serde_json::to_string_pretty(&config).expect("config serializes")
            );
            return ExitCode::SUCCESS;
        }
    };

    let config = match load(kind, &args) {
        Ok(c) => c,
        Err(e) => return invalid(e),
    };
    let violations = validate(&config);
    if !violations.is_empty() {
        for v in violations {
            eprintln!("{v}");
        }
        return ExitCode::from(EXIT_INVALID);
    }
    match run_experiment(&config) {
        Ok(manifest) => {
            let dir = output_dir(&config);
            println!(
                "{kind}: wrote {} files to {} (config {})",
                manifest.files.len() + 1,
                dir.display(),
                &manifest.config_hash[..12]
            );
            for note in &manifest.notes {
                println!("  {note}");
            }
            ExitCode::SUCCESS
        }
        Err(Error::Invalid(v)) => {
            for line in v {
                eprintln!("{line}");
            }
            ExitCode::from(EXIT_INVALID)
        }
        Err(e) => {
            eprintln!("error: {e} (output root: ${OUTPUT_ROOT_ENV})");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
