use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fw_cli::presets::{self, PRESETS};
use fw_cli::scenario::{Scenario, Task};
use fw_cli::tasks::{self, RunOptions};
use fw_cli::CliError;

#[derive(Parser, Debug)]
#[command(name = "fw", version, about = "Foldy-Wouthuysen transformation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario file (TOML).
    #[arg(long, global = true, conflicts_with = "preset")]
    scenario: Option<PathBuf>,

    /// Run a built-in scenario instead of a file.
    #[arg(long, global = true)]
    preset: Option<String>,

    /// Directory for summary.json and CSV output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for ħ sweeps.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Comma-separated ħ values for `probe`.
    #[arg(long, global = true, value_delimiter = ',')]
    hbar_scale: Option<Vec<f64>>,

    /// Pass threshold (transform, check, ehrenfest) or integrator rtol (simulate).
    #[arg(long, global = true)]
    tolerance: Option<f64>,

    /// Seed for randomized sweeps.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Transform one Hamiltonian and report residuals.
    Transform,
    /// Integrate the semiclassical equations of motion.
    Simulate,
    /// Compare Ehrenfest averages with the semiclassical force.
    Ehrenfest,
    /// Fit the order in ħ of the transformation residuals.
    Probe,
    /// Randomized sweep over commuting-case Hamiltonians.
    Check,
    /// Check a scenario and its field without running it.
    Validate,
    /// List built-in scenarios, or print one.
    Presets {
        /// Print the scenario file of this preset.
        #[arg(long)]
        show: Option<String>,
    },
}

fn load(cli: &Cli) -> Result<Scenario, CliError> {
    match (&cli.scenario, &cli.preset) {
        (Some(path), _) => Scenario::load(path),
        (None, Some(name)) => presets::load(name),
        (None, None) => Err(CliError::Parse("give --scenario PATH or --preset NAME".into())),
    }
}

fn list_presets(show: Option<&str>) -> Result<String, CliError> {
    match show {
        Some(name) => presets::find(name)
            .map(|p| p.toml.trim_start().to_string())
            .ok_or_else(|| CliError::Parse(format!("unknown preset '{name}'"))),
        None => {
            let mut s = String::new();
            for p in PRESETS {
                s.push_str(&format!("{:<32} {:<10} {}\n{:<43} {}\n", p.name, p.task, p.model, "", p.description));
            }
            Ok(s)
        }
    }
}

fn execute(cli: &Cli) -> Result<String, CliError> {
    let task = match &cli.command {
        Command::Presets { show } => return list_presets(show.as_deref()),
        Command::Validate => return tasks::validate(&load(cli)?),
        Command::Transform => Task::Transform,
        Command::Simulate => Task::Simulate,
        Command::Ehrenfest => Task::Ehrenfest,
        Command::Probe => Task::Probe,
        Command::Check => Task::Check,
    };
    let scenario = load(cli)?;
    let opts = RunOptions {
        out: cli.out.clone(),
        jobs: cli.jobs,
        hbar_values: cli.hbar_scale.clone(),
        tolerance: cli.tolerance,
        seed: cli.seed,
    };
    Ok(tasks::run(task, &scenario, &opts)?.summary)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("fw: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
