use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use gwht_cli::{budget_from_env, parse_experiment, run, Command, Overrides};

/// Distributed hypothesis testing over the Gray-Wyner network.
#[derive(Parser)]
#[command(name = "gwht", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Experiment document (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Result file; `.json` or `.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replaces every trial count in the document.
    #[arg(long)]
    trials: Option<u64>,
    /// Replaces the document's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to one per core.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(t) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let src = match std::fs::read_to_string(&args.config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return ExitCode::from(1);
        }
    };
    let ov = Overrides {
        seed: args.seed,
        trials: args.trials,
        needs_seed: args.command.needs_seed(),
    };
    let exp = match parse_experiment(&src, ov) {
        Ok(e) => e,
        Err(issues) => {
            for i in &issues {
                eprintln!("{}: {i}", args.config.display());
            }
            return ExitCode::from(2);
        }
    };
    let result = budget_from_env().and_then(|b| run(args.command, &exp, b)).and_then(|records| {
        if let Some(out) = &args.out {
            records.write(out)?;
        }
        print!("{}", records.summary()?);
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
