use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use nzme::cli_io::{
    cmd_build_model, cmd_compare, cmd_equilibrium, cmd_fit, cmd_simulate, cmd_validate_kernel, RunConfig, Which,
};

#[derive(Parser)]
#[command(name = "nzme", version, about = "Memory-kernel master equations for a central spin in a nuclear spin bath")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides io.out.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run seed; overrides io.seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum WhichArg {
    Sme,
    Exact,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the bath geometry and diagonalize the truncated bath.
    BuildModel(Common),
    /// Fit the SME kernel to the mean-field kernel.
    Fit(Common),
    /// Propagate the reference initial state.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "both")]
        which: WhichArg,
    },
    /// Recompute the SME-vs-exact comparison from saved observables.
    Compare(Common),
    /// Long-time limit of the SME.
    Equilibrium(Common),
    /// Check the positivity and equilibration conditions of the kernel.
    ValidateKernel(Common),
}

fn load(c: &Common) -> nzme::Result<RunConfig> {
    let cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    Ok(cfg.with_overrides(c.out.clone(), c.seed))
}

fn run(cli: Cli) -> nzme::Result<String> {
    match cli.command {
        Command::BuildModel(c) => cmd_build_model(&load(&c)?),
        Command::Fit(c) => cmd_fit(&load(&c)?),
        Command::Simulate { common, which } => {
            let w = match which {
                WhichArg::Sme => Which::Sme,
                WhichArg::Exact => Which::Exact,
                WhichArg::Both => Which::Both,
            };
            cmd_simulate(&load(&common)?, w)
        }
        Command::Compare(c) => cmd_compare(&load(&c)?),
        Command::Equilibrium(c) => cmd_equilibrium(&load(&c)?),
        Command::ValidateKernel(c) => cmd_validate_kernel(&load(&c)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(msg) => {
            print!("{msg}");
            if !msg.ends_with('\n') {
                println!();
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
