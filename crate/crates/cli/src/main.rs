use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use nucspin::io::{error_kind, exit_code, parse_config, run_command, Command, RunContext};
use nucspin::Error;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Subcommand {
    /// XY8 spectrum over the τ grid
    Spectrum,
    /// Fit {A∥, A⊥, f_L} to a spectrum CSV
    Fit,
    /// Scan the initialization τ and report the conditional gate
    Design,
    /// Nuclear Rabi oscillation versus N′
    Rabi,
    /// Nuclear Ramsey fringes for both electron branches
    Ramsey,
    /// Nuclear spin echo
    Echo,
    /// Nuclear Bloch trajectories through one XY8 block
    Trace,
}

impl From<Subcommand> for Command {
    fn from(s: Subcommand) -> Self {
        match s {
            Subcommand::Spectrum => Command::Spectrum,
            Subcommand::Fit => Command::Fit,
            Subcommand::Design => Command::Design,
            Subcommand::Rabi => Command::Rabi,
            Subcommand::Ramsey => Command::Ramsey,
            Subcommand::Echo => Command::Echo,
            Subcommand::Trace => Command::Trace,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "nucspin", version, about = "Electron-mediated nuclear spin control: figure data and fits")]
struct Args {
    #[arg(value_enum)]
    command: Subcommand,
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides output.dir; default ".")
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for Monte-Carlo readout noise (overrides monte_carlo.seed)
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for parallel sweeps
    #[arg(long)]
    threads: Option<usize>,
}

fn run(args: &Args) -> Result<Vec<PathBuf>, Error> {
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(Error::Config {
                path: "--threads".into(),
                message: "must be at least 1".into(),
            });
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config {
                path: "--threads".into(),
                message: e.to_string(),
            })?;
    }
    let document = fs::read_to_string(&args.config)?;
    let config = parse_config(&document)?;
    let out_dir = args
        .out
        .clone()
        .or_else(|| config.config.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let seed = args
        .seed
        .or_else(|| config.config.monte_carlo.as_ref().map(|m| m.seed))
        .unwrap_or(0);
    let ctx = RunContext {
        config: &config,
        out_dir: &out_dir,
        seed,
    };
    run_command(args.command.into(), &ctx)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            let mut report = serde_json::json!({
                "error": error_kind(&err),
                "message": err.to_string(),
            });
            if let Error::Config { path, .. } = &err {
                report["path"] = serde_json::Value::String(path.clone());
            }
            eprintln!("{report}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
