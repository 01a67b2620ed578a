use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nilflow_cli::{execute, Command};

#[derive(Parser)]
#[command(name = "nilflow", version, about = "Polynomial flows on nilmanifolds: certificates and averaging reports")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Degree, internal class, leading term and weight of each family member
    VerifyPoly(RunArgs),
    /// PET induction trace with per-step descent certificates
    Pet(RunArgs),
    /// Joining or mean ergodic averages over a horizon grid
    Average(RunArgs),
    /// Certified generic parameter off the configured varieties
    Generic(RunArgs),
    /// van der Corput correlation diagnostic on a scalar trajectory
    Vdc(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides the seed in the config
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = match cli.command {
        Cmd::VerifyPoly(a) => (Command::VerifyPoly, a),
        Cmd::Pet(a) => (Command::Pet, a),
        Cmd::Average(a) => (Command::Average, a),
        Cmd::Generic(a) => (Command::Generic, a),
        Cmd::Vdc(a) => (Command::Vdc, a),
    };
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(cmd, &args.config, &args.out, args.seed) {
        Ok((code, summary)) => {
            print!("{summary}");
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
