mod commands;
mod config;
mod inputs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::commands::Outcome;
use crate::config::FileConfig;

/// Environment variable holding the default solver tolerance.
pub const TOL_ENV: &str = "QTOPT_TOL";

#[derive(Parser, Debug)]
#[command(
    name = "qtopt",
    version,
    about = "Minimum times and pulse schedules for two coupled qubits",
    after_help = "Inputs given as strings may be a file path, inline JSON, or (for targets) one of \
                  the gate names identity, cnot, swap. Exit codes: 0 success, 2 invalid input, \
                  3 numerical failure, 4 verification failure."
)]
struct Cli {
    /// TOML or JSON file supplying defaults for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Tolerance on computed times (default from QTOPT_TOL, else 1e-12).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Write the result to this file instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CanonKind {
    Hamiltonian,
    Unitary,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    Magnus2,
    Magnus4,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Canonical form of a two-qubit Hamiltonian or unitary.
    Canon {
        /// Matrix JSON {"re": [[..]], "im": [[..]]}, as a path or inline.
        #[arg(long)]
        input: Option<String>,
        #[arg(long, value_enum)]
        kind: Option<CanonKind>,
    },
    /// Minimum time to reach a target gate under a coupling profile.
    Mintime {
        /// Target gate: matrix JSON, {"theta": [..]}, or a gate name.
        #[arg(long)]
        target: Option<String>,
        /// Profile spec: JSON/TOML path, inline JSON, or a profile CSV.
        #[arg(long)]
        profile: Option<String>,
    },
    /// Schedule of local gates realizing a target gate.
    Synth {
        #[arg(long)]
        target: Option<String>,
        #[arg(long)]
        profile: Option<String>,
        /// Total duration (seconds); defaults to the minimum time.
        #[arg(long)]
        time: Option<f64>,
    },
    /// Propagate a schedule and verify it against its target.
    Simulate {
        /// Schedule JSON produced by `synth`.
        #[arg(long)]
        schedule: Option<String>,
        #[arg(long)]
        profile: Option<String>,
        /// Compare against this gate instead of the schedule's own target.
        #[arg(long)]
        target: Option<String>,
        /// Largest integrator step (seconds).
        #[arg(long)]
        max_step: Option<f64>,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        /// Bound on the local error estimate of each step.
        #[arg(long)]
        step_tol: Option<f64>,
        /// Largest accepted local-equivalence distance.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Tabulate a profile as CSV.
    Profile {
        #[arg(long)]
        profile: Option<String>,
        #[arg(long)]
        start: Option<f64>,
        #[arg(long)]
        end: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::VerificationFailed(msg)) => {
            eprintln!("qtopt: verification failed: {msg}");
            ExitCode::from(commands::EXIT_VERIFICATION)
        }
        Err(e) => {
            eprintln!("qtopt: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<Outcome, commands::Failure> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let tol = match cli.tol.or(file.tol) {
        Some(t) => t,
        None => match std::env::var(TOL_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| commands::Failure::validation(format!("{TOL_ENV}={v:?} is not a number")))?,
            Err(_) => commands::DEFAULT_TOL,
        },
    };
    let ctx = commands::Context {
        tol,
        output: cli.output.or(file.output.clone()),
    };
    match cli.command {
        Command::Canon { input, kind } => commands::canon(
            &ctx,
            file.pick_input("input", input, &file.input)?,
            kind.or(file.kind).unwrap_or(CanonKind::Unitary),
        ),
        Command::Mintime { target, profile } => commands::mintime(
            &ctx,
            file.pick_input("target", target, &file.target)?,
            file.pick_input("profile", profile, &file.profile)?,
        ),
        Command::Synth { target, profile, time } => commands::synth(
            &ctx,
            file.pick_input("target", target, &file.target)?,
            file.pick_input("profile", profile, &file.profile)?,
            time.or(file.time),
        ),
        Command::Simulate {
            schedule,
            profile,
            target,
            max_step,
            method,
            step_tol,
            threshold,
        } => commands::simulate(
            &ctx,
            commands::SimulateArgs {
                schedule: file.pick_input("schedule", schedule, &file.schedule)?,
                profile: file.pick_input("profile", profile, &file.profile)?,
                target: file.pick_optional(target, &file.target),
                max_step: max_step.or(file.max_step),
                method: method.or(file.method),
                step_tol: step_tol.or(file.step_tol),
                threshold: threshold.or(file.threshold).unwrap_or(commands::DEFAULT_THRESHOLD),
            },
        ),
        Command::Profile {
            profile,
            start,
            end,
            samples,
        } => commands::profile(
            &ctx,
            file.pick_input("profile", profile, &file.profile)?,
            start.or(file.start),
            end.or(file.end),
            samples.or(file.samples),
        ),
    }
}
