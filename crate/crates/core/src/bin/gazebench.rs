//! Benchmark harness CLI: generate suites, run controllers, rank and
//! report.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gazebench_core::bench::report::{
    read_results_json, write_rank_csv, write_report, write_results_json,
};
use gazebench_core::bench::suite::{generate_suite, load_suite, run_suite, write_suite, SuiteKind};
use gazebench_core::gaze::ControllerKind;

#[derive(Parser)]
#[command(name = "gazebench", version, about = "Active gaze control benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a canonical suite into a directory.
    Gen {
        /// Suite name: 2d-small or 3d-lite-dynamic.
        #[arg(long)]
        suite: String,
        /// Master seed; every sub-seed derives from it.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run controllers over a generated suite.
    Run {
        /// Suite directory produced by `gen`.
        #[arg(long)]
        suite: PathBuf,
        /// Comma-separated controllers (optimised,fixed,panning,lookahead).
        #[arg(long, default_value = "optimised,fixed,panning,lookahead")]
        controllers: String,
        /// Results JSON path.
        #[arg(long)]
        out: PathBuf,
        /// Optional directory for per-step belief frames.
        #[arg(long)]
        frames: Option<PathBuf>,
    },
    /// Rank controllers per task into a CSV.
    Rank {
        /// Results JSON produced by `run`.
        #[arg(long = "in")]
        input: PathBuf,
        /// Rank CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the aggregate report directory.
    Report {
        /// Results JSON produced by `run`.
        #[arg(long = "in")]
        input: PathBuf,
        /// Report directory.
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_controllers(spec: &str) -> gazebench_core::Result<Vec<ControllerKind>> {
    spec.split(',').filter(|s| !s.trim().is_empty()).map(|s| s.parse()).collect()
}

fn run(cli: Cli) -> gazebench_core::Result<()> {
    match cli.command {
        Command::Gen { suite, seed, out } => {
            let kind: SuiteKind = suite.parse()?;
            let suite = generate_suite(kind, seed)?;
            write_suite(&suite, &out)?;
            println!(
                "generated suite '{}' (seed {}): {} environments, {} tasks -> {}",
                suite.name,
                suite.seed,
                suite.environments.len(),
                suite.tasks.len(),
                out.display()
            );
        }
        Command::Run { suite, controllers, out, frames } => {
            let suite = load_suite(&suite)?;
            let controllers = parse_controllers(&controllers)?;
            let results = run_suite(&suite, &controllers, frames.as_deref())?;
            write_results_json(&results, &out)?;
            let successes = results.episodes.iter().filter(|e| e.success()).count();
            println!(
                "ran {} episodes ({} tasks x {} controllers), {} successes -> {}",
                results.episodes.len(),
                suite.tasks.len(),
                controllers.len(),
                successes,
                out.display()
            );
        }
        Command::Rank { input, out } => {
            let results = read_results_json(&input)?;
            write_rank_csv(&results, &out)?;
            println!("wrote rank table -> {}", out.display());
        }
        Command::Report { input, out } => {
            let results = read_results_json(&input)?;
            let summary = write_report(&results, &out)?;
            println!(
                "report over {}/{} filtered tasks -> {}",
                summary.tasks_filtered,
                summary.tasks_total,
                out.display()
            );
            for (name, c) in &summary.per_controller {
                println!(
                    "  {name:>10}: success {:.1}%  coverage {:.1}%  first place {:.1}%  latency {:.2} ms",
                    c.success_rate * 100.0,
                    c.mean_coverage * 100.0,
                    c.first_place_fraction * 100.0,
                    c.mean_decision_latency_ms
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
