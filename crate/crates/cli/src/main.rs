use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use dqdmeas_cli::{run, scenario, validate, RunConfig, RunOutput, THREADS_ENV};

#[derive(Parser)]
#[command(
    name = "dqdmeas",
    version,
    about = "Continuous measurement of a double quantum dot"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run { config: PathBuf },
    /// Run a preset: fig1, fig2a, fig2b, fig2c, purify, steer-demo.
    Scenario {
        name: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the preset as a config file instead of running it.
        #[arg(long)]
        print_config: bool,
    },
    /// Parse a config and print the validity checks.
    Validate { config: PathBuf },
}

fn report(out: &RunOutput) {
    for v in &out.validity {
        eprintln!("{v}");
    }
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    for f in &out.files {
        println!("{}", f.display());
    }
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .with_context(|| format!("{THREADS_ENV}={v} is not a thread count"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn main_inner() -> anyhow::Result<()> {
    let cli = Cli::parse();
    configure_threads()?;
    match cli.command {
        Command::Run { config } => {
            let cfg = RunConfig::load(&config)?;
            report(&run(&cfg)?);
        }
        Command::Scenario {
            name,
            seed,
            out,
            print_config,
        } => {
            let mut cfg = scenario(&name)?;
            if let Some(seed) = seed {
                cfg.grid.seed = seed;
            }
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            if print_config {
                print!("{}", cfg.to_toml()?);
            } else {
                report(&run(&cfg)?);
            }
        }
        Command::Validate { config } => {
            let cfg = RunConfig::load(&config)?;
            let (_, reports, warnings) = validate(&cfg)?;
            for r in reports {
                println!("{r}");
            }
            for w in warnings {
                println!("warning: {w}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
