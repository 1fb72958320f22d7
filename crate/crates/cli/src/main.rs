use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use geovc_cli::{CliError, ControlArgs, RunConfig, Sweep};

#[derive(Parser)]
#[command(
    name = "geovc",
    version,
    about = "Virtual nonholonomic constraints on Lie groups"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory; overrides `[output].dir`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the algebra, metric, transversality and system construction.
    Validate(Common),
    /// Evaluate the control law at a state.
    Control {
        #[command(flatten)]
        common: Common,
        /// Comma-separated state; defaults to `[initial].xi`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        state: Option<Vec<f64>>,
        /// Evaluate at random states on the constraint set.
        #[arg(long, value_name = "N")]
        seed: Option<u64>,
        /// Number of random states drawn with `--seed`.
        #[arg(long, default_value_t = 1)]
        samples: usize,
    },
    /// Integrate the closed loop and write CSV output.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Run once per value of a system parameter.
        #[arg(long, value_name = "PARAM=START:STOP:N")]
        sweep: Option<String>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let stdout = &mut io::stdout().lock();
    let load = |c: &Common| -> Result<(RunConfig, PathBuf), CliError> {
        let config = RunConfig::load(&c.config)?;
        let out = c.out.clone().unwrap_or_else(|| config.output.dir.clone());
        Ok((config, out))
    };
    match cli.command {
        Command::Validate(common) => {
            let (config, out) = load(&common)?;
            geovc_cli::validate(&config, &out, stdout)
        }
        Command::Control {
            common,
            state,
            seed,
            samples,
        } => {
            let (config, _) = load(&common)?;
            geovc_cli::control(
                &config,
                &ControlArgs {
                    state,
                    seed,
                    samples,
                },
                stdout,
            )
        }
        Command::Simulate { common, sweep } => {
            let (config, out) = load(&common)?;
            match sweep {
                None => geovc_cli::simulate(&config, &out, stdout).map(|_| ()),
                Some(s) => geovc_cli::simulate_sweep(&config, &s.parse::<Sweep>()?, &out, stdout),
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("geovc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
