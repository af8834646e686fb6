use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fedflip_core::experiment::{self, DEFAULT_SWEEP};
use fedflip_core::{Error, ErrorCategory};

#[derive(Parser)]
#[command(
    name = "fedflip",
    version,
    about = "Federated learning label-flipping simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment (a sweep too, if the config lists one).
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Sweep flip percentages (2, 4, …, 20 unless the config sets `sweep`).
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write a synthetic dataset in pixel-CSV format.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err.category() {
        ErrorCategory::Config => 1,
        ErrorCategory::Data => 2,
        ErrorCategory::Runtime => 3,
    }
}

fn run_experiment(
    config: PathBuf,
    output: Option<PathBuf>,
    force_sweep: bool,
) -> Result<(), Error> {
    let mut cfg = experiment::parse_config(&config)?;
    if let Some(out) = output {
        cfg.output_dir = out;
    }
    if force_sweep && cfg.sweep.is_none() {
        if cfg.attack.is_some() {
            return Err(Error::ContradictoryKeys {
                first: "sweep".into(),
                second: "flip_percent".into(),
            });
        }
        cfg.sweep = Some(DEFAULT_SWEEP.to_vec());
    }
    let threads = experiment::threads_from_env()?;
    let outcome = experiment::run(&cfg, threads)?;
    for (dir, acc) in &outcome.runs {
        println!("{:<40} accuracy {:>7.3}%", dir.display(), 100.0 * acc);
    }
    if let Some(rows) = &outcome.sweep {
        print!("{}", experiment::format_sweep(rows));
    }
    println!("artifacts written to {}", cfg.output_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Run { config, output } => run_experiment(config, output, false),
        Command::Sweep { config, output } => run_experiment(config, output, true),
        Command::Synth { spec, out } => experiment::parse_synth_spec(&spec)
            .and_then(|req| experiment::synth_to_csv(&req, &out))
            .map(|d| println!("wrote {} rows to {}", d.len(), out.display())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
