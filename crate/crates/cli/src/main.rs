use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qmem_cli::commands;
use qmem_cli::error::{EXIT_NUMERIC, EXIT_USAGE, EXIT_VALIDATION};
use qmem_cli::{CliError, Scenario};

/// Deterministic control synthesis for finite-level open quantum memory
/// systems.
#[derive(Parser)]
#[command(name = "qmem", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Scenario configuration (JSON).
    config: PathBuf,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the integration step.
    #[arg(long)]
    dt: Option<f64>,
    /// Override the penalty scale (requires a {gamma, epsilon} penalty).
    #[arg(long)]
    eps: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run structural, admissibility and oracle checks.
    Validate(CommonArgs),
    /// Integrate the configured control and write trajectory.csv.
    Simulate(CommonArgs),
    /// Compare zero, pointwise and hjb1 controls under a shared penalty.
    Compare(CommonArgs),
    /// Value-expansion diagnostics: residual and Hamiltonian-drift tables.
    Hjb(CommonArgs),
    /// Generator-oracle consistency table.
    Oracle(CommonArgs),
}

fn load_scenario(args: &CommonArgs) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| CliError::io(args.config.display(), e))?;
    let raw: qmem_cli::RawConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Config { field: "<root>".into(), message: e.to_string() })?;
    let mut raw = qmem_cli::config::apply_preset(raw)?;
    if let Some(dt) = args.dt {
        raw.step = Some(dt);
    }
    if let Some(eps) = args.eps {
        match &mut raw.penalty {
            Some(p) if p.gamma.is_some() => p.epsilon = Some(eps),
            _ => {
                return Err(CliError::Validation(
                    "--eps needs a {gamma, epsilon} penalty in the config".into(),
                ))
            }
        }
    }
    if let Some(out) = &args.out {
        raw.output = Some(out.display().to_string());
    }
    Scenario::resolve(raw)
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    match &cli.command {
        Command::Validate(args) => {
            let scenario = load_scenario(args)?;
            let report = commands::cmd_validate(&scenario)?;
            print!("{}", report.render());
            if !report.all_pass() {
                eprintln!("failed checks: {}", report.failed_names().join(", "));
            }
            Ok(report.all_pass())
        }
        Command::Simulate(args) => {
            let scenario = load_scenario(args)?;
            let summary = commands::cmd_simulate(&scenario)?;
            println!(
                "wrote {} ({} samples); Delta(tau) = {:.9e}, penalty = {:.9e}, Phi = {:.9e}",
                summary.csv_path.display(),
                summary.samples,
                summary.delta_tau,
                summary.penalty,
                summary.phi
            );
            Ok(true)
        }
        Command::Compare(args) => {
            let scenario = load_scenario(args)?;
            let report = commands::cmd_compare(&scenario)?;
            print!("{}", report.render());
            println!("wrote {}", report.csv_path.display());
            Ok(true)
        }
        Command::Hjb(args) => {
            let scenario = load_scenario(args)?;
            let report = commands::cmd_hjb(&scenario)?;
            print!("{}", report.render());
            println!("wrote {}", report.csv_path.display());
            Ok(true)
        }
        Command::Oracle(args) => {
            let scenario = load_scenario(args)?;
            let report = commands::cmd_oracle(&scenario)?;
            print!("{}", report.render());
            if !report.all_pass() {
                eprintln!("failed checks: {}", report.failed_names().join(", "));
            }
            Ok(report.all_pass())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("QMEM_LOG")).init();

    // Map argument-parsing failures to the usage exit code.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not usage errors.
            use clap::error::ErrorKind;
            let _ = e.print();
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                return ExitCode::SUCCESS;
            }
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };

    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VALIDATION as u8),
        Err(e) => {
            eprintln!("error: {e}");
            let code = e.exit_code();
            ExitCode::from(if code == EXIT_NUMERIC { EXIT_NUMERIC } else { code } as u8)
        }
    }
}
