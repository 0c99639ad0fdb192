use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use plypart_cli::commands::{self, BenchParams, CliError, RenderMode, EXIT_INFEASIBLE, EXIT_INPUT, EXIT_OK};
use plypart_cli::format::{load_project, load_result, to_json};
use plypart_core::search::Outcome;

/// Seam placement for composite plies.
#[derive(Debug, Parser)]
#[command(name = "plypart", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Seams,
    #[value(alias = "nests")]
    Nest,
    Overlaps,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Partition every ply of a project into sub-plies.
    Partition {
        project: PathBuf,
        /// Beam width; 1 runs the greedy search.
        #[arg(long, default_value_t = 1)]
        beam_width: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Result file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Production cost over a range of spool widths, as CSV.
    Sweep {
        project: PathBuf,
        #[arg(long, default_value_t = 9)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a result as SVG.
    Render {
        result: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "seams")]
        mode: Mode,
    },
    /// Check a result against a project; prints the violations as JSON.
    Validate {
        result: PathBuf,
        project: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare greedy and beam search on random problems, as CSV.
    Bench {
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        beam_width: usize,
        #[arg(long, default_value_t = 0.2)]
        spool_width: f64,
        #[arg(long, default_value_t = 0.01)]
        overlap_width: f64,
        #[arg(long, default_value_t = 0.1)]
        min_subply_width: f64,
        #[arg(long, default_value_t = 20)]
        max_zones: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("PLYPART_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError(format!("PLYPART_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError(e.to_string()))
}

fn run(cli: Cli) -> Result<i32, CliError> {
    configure_threads()?;
    match cli.command {
        Command::Partition {
            project,
            beam_width,
            seed,
            out,
        } => {
            let project = load_project(&project)?;
            let result = commands::partition(&project, beam_width, seed)?;
            emit(out.as_deref(), &to_json(&result))?;
            if result.outcome == Outcome::Infeasible {
                eprintln!("{}", commands::failure_message(&result));
                return Ok(EXIT_INFEASIBLE);
            }
            if !result.validation.is_empty() {
                eprintln!("{} violations in the final design", result.validation.len());
                return Ok(EXIT_INFEASIBLE);
            }
            eprintln!(
                "complete: {} seams in {} bundles, objective {}",
                result.plies.iter().map(|p| p.offsets.len()).sum::<usize>(),
                result.bundles.len(),
                result.objective
            );
            Ok(EXIT_OK)
        }
        Command::Sweep { project, steps, out } => {
            let project = load_project(&project)?;
            let (csv, any_feasible) = commands::sweep(&project, steps)?;
            emit(out.as_deref(), &csv)?;
            if any_feasible {
                Ok(EXIT_OK)
            } else {
                eprintln!("no spool width in the range gives a complete partition");
                Ok(EXIT_INFEASIBLE)
            }
        }
        Command::Render { result, out, mode } => {
            let result = load_result(&result)?;
            let mode = match mode {
                Mode::Seams => RenderMode::Seams,
                Mode::Nest => RenderMode::Nest,
                Mode::Overlaps => RenderMode::Overlaps,
            };
            emit(Some(&out), &commands::render(&result, mode)?)?;
            Ok(EXIT_OK)
        }
        Command::Validate { result, project, out } => {
            let result = load_result(&result)?;
            let project = load_project(&project)?;
            let report = commands::validate(&result, &project)?;
            emit(out.as_deref(), &to_json(&report))?;
            Ok(if report.is_clean() { EXIT_OK } else { EXIT_INFEASIBLE })
        }
        Command::Bench {
            trials,
            seed,
            beam_width,
            spool_width,
            overlap_width,
            min_subply_width,
            max_zones,
            out,
        } => {
            let params = BenchParams {
                trials,
                seed,
                beam_width,
                spool_width,
                overlap_width,
                min_subply_width,
                max_zones,
            };
            let rows = commands::bench(&params)?;
            emit(out.as_deref(), &commands::bench_csv(&rows))?;
            let summary = commands::bench_summary(&rows);
            if out.is_some() {
                println!("{summary}");
            } else {
                eprintln!("{summary}");
            }
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT as u8)
        }
    }
}
