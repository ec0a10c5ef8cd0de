use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dwsim::experiment::{run_experiment, validate, ExperimentConfig, ExperimentError, Kind};

#[derive(Parser)]
#[command(name = "dwsim", version, about = "Domain-wall encoding experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Overrides {
    /// write results here instead of the configured output directory
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// ensemble seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Check a config without running it.
    Validate {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// List the experiment kinds.
    ListKinds,
}

const VALIDATION: u8 = 1;
const RUNTIME: u8 = 2;

fn load(path: &PathBuf, o: &Overrides) -> Result<ExperimentConfig, ExitCode> {
    let mut cfg = ExperimentConfig::load(path).map_err(|errs| {
        eprintln!("{}", ExperimentError::Validation(errs));
        ExitCode::from(VALIDATION)
    })?;
    if let Some(d) = &o.output_dir {
        cfg.output = d.clone();
    }
    if let Some(s) = o.seed {
        cfg.ensemble.seed = Some(s);
    }
    if let Some(t) = o.threads {
        if t == 0 {
            eprintln!("--threads must be at least 1");
            return Err(ExitCode::from(VALIDATION));
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("thread pool: {e}");
            return Err(ExitCode::from(RUNTIME));
        }
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListKinds => {
            for k in Kind::ALL {
                println!("{:<16} {}", k.name(), k.describe());
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config, overrides } => {
            let cfg = match load(&config, &overrides) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let errs = validate(&cfg);
            if errs.is_empty() {
                println!("{}: ok ({}, {} sweep point(s))", config.display(), cfg.kind, cfg.grid_size());
                ExitCode::SUCCESS
            } else {
                eprint!("{}", ExperimentError::Validation(errs));
                ExitCode::from(VALIDATION)
            }
        }
        Command::Run { config, overrides } => {
            let cfg = match load(&config, &overrides) {
                Ok(c) => c,
                Err(code) => return code,
            };
            match run_experiment(&cfg) {
                Ok(m) => {
                    let files: usize = m.runs.iter().map(|r| r.files.len()).sum::<usize>() + m.files.len();
                    println!("{}: {} file(s) in {}", cfg.kind, files, cfg.output.display());
                    for (k, v) in &m.summary {
                        println!("  {k} = {v}");
                    }
                    ExitCode::SUCCESS
                }
                Err(e @ ExperimentError::Validation(_)) => {
                    eprint!("{e}");
                    ExitCode::from(VALIDATION)
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(RUNTIME)
                }
            }
        }
    }
}
