use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use rispla::experiments::{load_spec, run_experiment, ExperimentName, OutputFormat};
use rispla::Error;

#[derive(Parser)]
#[command(name = "rispla", version, about = "RIS-assisted backscatter PLA simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment described by a spec file.
    Run {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "both")]
        format: String,
        /// Overrides the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the spec's trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Worker threads (default: all cores). Does not affect results.
        #[arg(long)]
        threads: Option<usize>,
        /// Also write wall-clock runtimes to timing.json.
        #[arg(long)]
        timing: bool,
    },
    /// Print the available experiment names.
    List,
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::List => {
            for name in ExperimentName::ALL {
                println!("{:<20} {}", name.as_str(), name.description());
            }
            Ok(())
        }
        Command::Run {
            spec,
            out,
            format,
            seed,
            trials,
            threads,
            timing,
        } => {
            let format: OutputFormat = format.parse()?;
            let mut spec = load_spec(&spec).map_err(|e| match e {
                // a missing or unreadable spec file is the user's input problem
                Error::Io(io) => Error::Config {
                    field: "spec".into(),
                    message: io.to_string(),
                },
                other => other,
            })?;
            if let Some(s) = seed {
                spec.seed = s;
            }
            if let Some(t) = trials {
                spec.trials = t;
            }
            spec.validate()?;
            if threads == Some(0) {
                return Err(Error::Config {
                    field: "threads".into(),
                    message: "must be >= 1".into(),
                });
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.unwrap_or(0))
                .build()
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            let start = Instant::now();
            let output = pool.install(|| run_experiment(&spec))?;
            let elapsed = start.elapsed().as_secs_f64();
            for f in output.write(&out, format)? {
                println!("{}", out.join(f).display());
            }
            if timing {
                let t = serde_json::json!({
                    "experiment": spec.name.as_str(),
                    "threads": pool.current_num_threads(),
                    "runtime_s": elapsed,
                });
                std::fs::write(out.join("timing.json"), serde_json::to_string_pretty(&t)? + "\n")?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_spec_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
