//! `testmig`: decide which unstable packages can migrate into testing.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "testmig", version, about = "Compute package migrations from unstable into testing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute a migration and print the resulting testing plus hints.
    Migrate(MigrateArgs),
    /// Explain why an unstable package cannot migrate.
    Explain(ExplainArgs),
    /// Check that testing is trimmed and free of duplicate names.
    Check(InputArgs),
    /// Print closure statistics and encoding sizes.
    Stats(StatsArgs),
    /// Write an encoding as DIMACS plus an atom map.
    Emit(EmitArgs),
    /// Write a random pair of Packages files.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Max,
    Min,
    Target,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EncodingArg {
    P1,
    P3,
    P4,
    P5,
    #[value(name = "p5-strict")]
    P5Strict,
    #[value(name = "p2-oracle")]
    P2Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Structured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Cnf,
    Wcnf,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Packages file of the testing repository.
    #[arg(long, value_name = "PATH")]
    pub testing: PathBuf,
    /// Packages file of the unstable repository.
    #[arg(long, value_name = "PATH")]
    pub unstable: PathBuf,
    /// Policy file with `group:` and `clause:` lines.
    #[arg(long, value_name = "PATH")]
    pub policy: Option<PathBuf>,
    /// Wall-clock limit per solver call.
    #[arg(long, value_name = "SECS")]
    pub timeout: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct EncodingOptions {
    #[arg(long, value_enum, default_value_t = EncodingArg::P5)]
    pub encoding: EncodingArg,
    /// Permit the all-pairs encoding, meant for testing on tiny inputs.
    #[arg(long)]
    pub test_oracle: bool,
}

#[derive(Debug, Args)]
pub struct MigrateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub encoding: EncodingOptions,
    #[arg(long, value_enum, default_value_t = ModeArg::Max)]
    pub mode: ModeArg,
    /// Package to bring in with `--mode target`, as NAME/VERSION.
    #[arg(long, value_name = "NAME/VER")]
    pub target: Option<String>,
    /// External PMAX-SAT solver command; the WCNF path is appended.
    #[arg(long, value_name = "CMD")]
    pub solver: Option<String>,
    /// Also report up to K further solutions.
    #[arg(long, value_name = "K")]
    pub all_deltas: Option<usize>,
    /// Write the hints to this file as well.
    #[arg(long, value_name = "PATH")]
    pub hints: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub encoding: EncodingOptions,
    /// The unstable package, as NAME/VERSION.
    pub package: String,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Number of largest closures to list.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
}

#[derive(Debug, Args)]
pub struct EmitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub encoding: EncodingOptions,
    /// Objective to add as soft clauses; none when omitted.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, value_name = "NAME/VER")]
    pub target: Option<String>,
    #[arg(long, value_enum, default_value_t = KindArg::Wcnf)]
    pub kind: KindArg,
    /// Output prefix; `.cnf` or `.wcnf` and `.map` are appended.
    #[arg(long, value_name = "PREFIX")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub packages: usize,
    /// Directory receiving the `testing` and `unstable` files.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Migrate(a) => commands::migrate(&a),
        Command::Explain(a) => commands::explain(&a),
        Command::Check(a) => commands::check(&a),
        Command::Stats(a) => commands::stats(&a),
        Command::Emit(a) => commands::emit(&a),
        Command::Generate(a) => commands::generate(&a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if let Some(m) = f.message() {
                eprintln!("testmig: {m}");
            }
            ExitCode::from(f.code())
        }
    }
}
