use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use delaysync::cli::{
    cmd_certify, cmd_plot, cmd_run, cmd_synthesize, exit_status, init_logging, ExitStatus,
    RunOverrides,
};
use delaysync::engine::DEFAULT_GRID;

/// Delayed regulated synchronization of multi-agent networks.
#[derive(Parser)]
#[command(name = "delaysync", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write a result bundle.
    Run {
        file: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Frequency-sweep certificate of the closed loop.
    Certify {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        #[arg(long, default_value_t = 1e-3)]
        margin: f64,
        /// Also write the sweep as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a plotting script into a result bundle.
    Plot { dir: PathBuf },
    /// Print the gains a scenario runs with.
    Synthesize { file: PathBuf },
}

fn execute(cmd: Command) -> delaysync::Result<ExitStatus> {
    match cmd {
        Command::Run {
            file,
            out,
            horizon,
            tol,
            seed,
        } => {
            let o = RunOverrides {
                horizon,
                tolerance: tol,
                seed,
            };
            let outcome = cmd_run(&file, &out, &o)?;
            let m = &outcome.manifest;
            println!(
                "{}: final error {:e} (tolerance {:e}), {}",
                m.name,
                m.final_error,
                m.tolerance,
                if m.converged { "converged" } else { "not converged" }
            );
            println!("bundle written to {}", outcome.dir.display());
            Ok(outcome.status())
        }
        Command::Certify {
            file,
            grid,
            margin,
            out,
        } => {
            let report = cmd_certify(&file, grid, margin)?;
            println!(
                "{} points, margin {:e}: min distance {:e}, delay-free radius {}",
                report.points.len(),
                report.margin,
                report.min_distance,
                report.zero_delay_radius
            );
            if let Some(path) = out {
                std::fs::write(&path, delaysync::cli::bundle::certificate_csv(&report)).map_err(
                    |e| delaysync::Error::Io {
                        path: path.clone(),
                        source: e,
                    },
                )?;
            }
            if report.passed {
                println!("pass");
                Ok(ExitStatus::Success)
            } else {
                match report.first_failure() {
                    Some(p) => println!("fail at omega = {} (distance {:e})", p.omega, p.distance),
                    None => println!("fail: delay-free loop is not Schur with the margin"),
                }
                Ok(ExitStatus::Failure)
            }
        }
        Command::Plot { dir } => {
            let path = cmd_plot(&dir)?;
            println!("{}", path.display());
            Ok(ExitStatus::Success)
        }
        Command::Synthesize { file } => {
            print!("{}", cmd_synthesize(&file)?);
            Ok(ExitStatus::Success)
        }
    }
}

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    let status = match execute(cli.command) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {}", e);
            exit_status(&e)
        }
    };
    ExitCode::from(status.code() as u8)
}
