use clap::{Parser, Subcommand};

use sdmce_cli::{
    cmd_check, cmd_metrics, cmd_parameterize, CheckArgs, MetricsArgs, ParameterizeArgs,
};

/// Conformal flattening of simply connected open triangle meshes onto the
/// unit disk, with adaptive area-penalty tuning and folding repair.
#[derive(Parser)]
#[command(name = "sdmce", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Flatten a mesh onto the unit disk and write the results.
    Parameterize(ParameterizeArgs),
    /// Validate disk topology and print diagnostics as JSON.
    Check(CheckArgs),
    /// Re-audit an existing parameterization without solving.
    Metrics(MetricsArgs),
}

fn main() {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Parameterize(args) => cmd_parameterize(args),
        Command::Check(args) => cmd_check(args),
        Command::Metrics(args) => cmd_metrics(args),
    };
    std::process::exit(code);
}
