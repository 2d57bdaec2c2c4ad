use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use contrawalk::commands::{self, CommandError, CommandResult, Overrides, EXIT_INPUT};
use contrawalk::config::SystemConfig;

#[derive(Parser)]
#[command(name = "contrawalk", version, about = "Stabilizing periodic switching signals for switched systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for a contractive cycle.
    Analyze(Common),
    /// Emit the periodic signal built from a contractive cycle.
    Synthesize(Common),
    /// Check the Lyapunov inequalities on samples.
    Verify(Common),
    /// Simulate a batch of trajectories under the signal.
    Simulate(Common),
    /// Tabulate psi1, psi2 and the certified state bound.
    Bound(Common),
}

#[derive(Args)]
struct Common {
    /// System description (TOML).
    config: PathBuf,
    /// Directory for output files.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Print the machine-readable report instead of the summary.
    #[arg(long)]
    json: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Absolute tolerance on verification residuals.
    #[arg(long)]
    tol: Option<f64>,
    /// Strictness margin for contractivity.
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    t_max: Option<u64>,
    /// Signal file written by `synthesize`.
    #[arg(long)]
    signal: Option<PathBuf>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            verify_tol: self.tol,
            margin: self.margin,
            horizon: self.horizon,
            t_max: self.t_max,
            signal: self.signal.clone(),
        }
    }
}

fn emit<T: Serialize>(json: bool, result: CommandResult<T>, human: impl Fn(&T) -> String) -> Result<i32, CommandError> {
    let out = result?;
    if json {
        println!("{}", serde_json::to_string_pretty(&out.report).expect("report serializes"));
    } else {
        print!("{}", human(&out.report));
    }
    Ok(out.code)
}

fn run(cli: Cli) -> Result<i32, CommandError> {
    let (Command::Analyze(c) | Command::Synthesize(c) | Command::Verify(c) | Command::Simulate(c) | Command::Bound(c)) =
        &cli.command;
    let cfg = SystemConfig::load(&c.config).map_err(|e| CommandError { code: EXIT_INPUT, message: e.to_string() })?;
    let ov = c.overrides();
    let out = c.out.as_deref();
    match &cli.command {
        Command::Analyze(_) => emit(c.json, commands::analyze(&cfg, &ov, out), |r| r.human()),
        Command::Synthesize(_) => emit(c.json, commands::synthesize(&cfg, &ov, out), |r| r.human()),
        Command::Verify(_) => emit(c.json, commands::verify(&cfg, &ov, out), |r| r.human()),
        Command::Simulate(_) => emit(c.json, commands::simulate(&cfg, &ov, out), |r| r.human()),
        Command::Bound(_) => emit(c.json, commands::bound(&cfg, &ov, out), |r| r.human()),
    }
}

fn main() -> ExitCode {
    let code = match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    };
    ExitCode::from(code as u8)
}
