use std::num::NonZeroUsize;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use bohmlab_cli::report::Tolerance;
use bohmlab_cli::{run_file, validate_file, RunOptions};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bohmlab", version, about = "Run and validate bohmlab scenarios")]
struct Cli {
    /// Worker threads for data-parallel kernels.
    #[arg(long, global = true, env = "BOHMLAB_THREADS")]
    threads: Option<NonZeroUsize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its tables and report.
    Run {
        config: PathBuf,
        /// Overrides `output_dir` from the configuration.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Overrides `ensemble.master_seed`.
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// Check a configuration without running it.
    Validate { config: PathBuf },
}

fn configure_threads(threads: Option<NonZeroUsize>) {
    let Some(n) = threads else { return };
    #[cfg(feature = "parallel")]
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.get()).build_global() {
        eprintln!("warning: could not configure {n} threads: {e}");
    }
    #[cfg(not(feature = "parallel"))]
    if n.get() > 1 {
        eprintln!("warning: built without the `parallel` feature; running on one thread");
    }
}

fn tolerance(t: &Tolerance) -> String {
    match *t {
        Tolerance::Below { value } => format!("< {value:e}"),
        Tolerance::AtMost { value } => format!("<= {value:e}"),
        Tolerance::AtLeast { value } => format!(">= {value:e}"),
        Tolerance::Range { lo, hi } => format!("in [{lo}, {hi}]"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads(cli.threads);
    match cli.command {
        Command::Validate { config } => match validate_file(&config) {
            Ok(d) if d.is_empty() => {
                eprintln!("{}: valid", config.display());
                ExitCode::SUCCESS
            }
            Ok(d) => {
                for diag in &d {
                    println!("{diag}");
                }
                ExitCode::from(2)
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Command::Run {
            config,
            output_dir,
            seed_override,
        } => {
            let start = Instant::now();
            let options = RunOptions {
                output_dir,
                seed_override,
            };
            match run_file(&config, &options) {
                Ok(out) => {
                    let r = &out.report;
                    for c in &r.checks {
                        let verdict = if c.passed { "PASS" } else { "FAIL" };
                        println!("{verdict} {}: {:e} ({})", c.name, c.measured, tolerance(&c.tolerance));
                    }
                    for e in &r.errors {
                        println!("ERROR {e}");
                    }
                    eprintln!(
                        "{}: {} checks, wrote {} in {:.2} s",
                        r.scenario,
                        r.checks.len(),
                        out.output_dir.display(),
                        start.elapsed().as_secs_f64()
                    );
                    if r.passed {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}
