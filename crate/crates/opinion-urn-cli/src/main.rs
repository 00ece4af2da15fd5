//! `opinion-urn`: command-line front end for the opinion-urn library.
//!
//! Subcommands:
//!
//! - `spectrum`      — influence-matrix eigenstructure of a graph as JSON;
//! - `simulate`      — one seeded trajectory as CSV (+ metadata sidecar);
//! - `ensemble`      — Monte-Carlo ensemble statistics as CSV + JSON summary;
//! - `verify`        — self-contained invariant suite, one line per check;
//! - `graph export`  — emit a graph's canonical JSON document.
//!
//! Exit codes: 0 on success, 1 on validation failure (the message names
//! the offending flag), 2 when `verify` finds failing checks (they are
//! listed on stderr). Identical invocations produce byte-identical
//! outputs, except for the `metadata` block of the ensemble summary.
//!
//! The `OPINION_URN_THREADS` environment variable caps the ensemble
//! worker count; trajectory results are merged in index order, so the
//! statistics do not depend on it.

mod config;
mod output;
mod verify;

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use config::{
    parse_fit_window, parse_graph, parse_init, parse_samples, thread_cap, CliError,
};
use opinion_urn::{
    eigenbasis, fit_power_law, run_ensemble, run_trajectory, EnsembleConfig,
};

#[derive(Parser)]
#[command(
    name = "opinion-urn",
    version,
    about = "Coupled Pólya-urn opinion dynamics on graphs",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the influence-matrix eigenstructure of a graph as JSON.
    Spectrum {
        /// Graph: path:<n>, cycle:<n>, complete:<n>, gnp:<n>:<p>:<seed>,
        /// or a JSON file path.
        #[arg(long)]
        graph: String,
        /// Write the JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one seeded trajectory and emit snapshots as CSV.
    Simulate {
        #[command(flatten)]
        process: ProcessArgs,
        /// CSV output path; a `<stem>.meta.json` sidecar is written next
        /// to it. Without --out the CSV goes to stdout (no sidecar).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a trajectory ensemble; emit statistics CSV and a JSON summary.
    Ensemble {
        #[command(flatten)]
        process: ProcessArgs,
        /// Number of independent trajectories.
        #[arg(long, default_value_t = 100)]
        trajectories: usize,
        /// Power-law fit window t_min,t_max for mean ‖z_t‖².
        #[arg(long, default_value = "100,10000")]
        fit_window: String,
        /// Statistics CSV path; the summary goes to `<stem>.summary.json`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the invariant suite and report pass/fail per check.
    Verify {
        /// Shrink Monte-Carlo sizes for a fast smoke run.
        #[arg(long)]
        quick: bool,
        /// Base seed for all checks.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Graph utilities.
    #[command(subcommand)]
    Graph(GraphCommand),
}

#[derive(Subcommand)]
enum GraphCommand {
    /// Emit the graph's canonical JSON ({"n": .., "edges": [[i,j], ..]}).
    Export {
        /// Graph: generator shorthand or a JSON file path.
        #[arg(long)]
        graph: String,
        /// Write the JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Flags shared by `simulate` and `ensemble`.
#[derive(Args)]
struct ProcessArgs {
    /// Graph: path:<n>, cycle:<n>, complete:<n>, gnp:<n>:<p>:<seed>, or a
    /// JSON file path.
    #[arg(long)]
    graph: String,
    /// Initial opinions x₀ (comma list; scalar broadcasts). Converted to
    /// weights via u₀ = x₀·g₀.
    #[arg(long)]
    x0: Option<String>,
    /// Initial U-state weights u₀ (alternative to --x0).
    #[arg(long)]
    u0: Option<String>,
    /// Initial total weights g₀ (comma list; scalar broadcasts).
    #[arg(long, default_value = "1")]
    g0: String,
    /// Number of urn steps.
    #[arg(long, default_value_t = 10_000)]
    steps: usize,
    /// Base RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sample grid: log:<points-per-decade> or a comma-separated list of
    /// times in [0, steps].
    #[arg(long, default_value = "log:20")]
    samples: String,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion)
            {
                0
            } else {
                1
            };
            err.print().expect("stdio");
            std::process::exit(code);
        }
    };
    let code = match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Spectrum { graph, out } => cmd_spectrum(&graph, out.as_deref()),
        Command::Simulate { process, out } => cmd_simulate(&process, out.as_deref()),
        Command::Ensemble {
            process,
            trajectories,
            fit_window,
            out,
        } => cmd_ensemble(&process, trajectories, &fit_window, &out),
        Command::Verify { quick, seed } => Ok(cmd_verify(quick, seed)),
        Command::Graph(GraphCommand::Export { graph, out }) => {
            cmd_graph_export(&graph, out.as_deref())
        }
    }
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn emit(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => write_file(path, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// Sidecar path: `runs/traj.csv` → `runs/traj.<suffix>`.
fn sidecar_path(out: &Path, suffix: &str) -> PathBuf {
    out.with_extension(suffix)
}

fn cmd_spectrum(graph_spec: &str, out: Option<&Path>) -> Result<i32, CliError> {
    let graph = parse_graph(graph_spec)?;
    let spectrum = eigenbasis(&graph).map_err(|e| CliError::Run(e.to_string()))?;
    let value = output::spectrum_json(&spectrum, &graph, graph_spec);
    let mut text = serde_json::to_string_pretty(&value).expect("valid JSON value");
    text.push('\n');
    emit(out, &text)?;
    Ok(0)
}

fn cmd_simulate(process: &ProcessArgs, out: Option<&Path>) -> Result<i32, CliError> {
    let graph = Arc::new(parse_graph(&process.graph)?);
    let n = graph.n_vertices();
    let (u0, g0) = parse_init(
        process.x0.as_deref(),
        process.u0.as_deref(),
        &process.g0,
        n,
    )?;
    let sample_times = parse_samples(&process.samples, process.steps)?;
    let record = run_trajectory(graph, &u0, &g0, process.steps, process.seed, &sample_times)
        .map_err(|e| CliError::Run(e.to_string()))?;
    let csv = output::trajectory_csv(&record);
    match out {
        Some(path) => {
            write_file(path, &csv)?;
            let meta = output::trajectory_meta_json(
                &record,
                &process.graph,
                process.steps,
                &sample_times,
            );
            let mut meta_text = serde_json::to_string_pretty(&meta).expect("valid JSON value");
            meta_text.push('\n');
            let meta_path = sidecar_path(path, "meta.json");
            write_file(&meta_path, &meta_text)?;
            println!("wrote {} and {}", path.display(), meta_path.display());
        }
        None => print!("{csv}"),
    }
    Ok(0)
}

fn cmd_ensemble(
    process: &ProcessArgs,
    trajectories: usize,
    fit_window: &str,
    out: &Path,
) -> Result<i32, CliError> {
    let graph = Arc::new(parse_graph(&process.graph)?);
    let n = graph.n_vertices();
    let (u0, g0) = parse_init(
        process.x0.as_deref(),
        process.u0.as_deref(),
        &process.g0,
        n,
    )?;
    let sample_times = parse_samples(&process.samples, process.steps)?;
    let window = parse_fit_window(fit_window)?;
    let threads = thread_cap()?;

    let config = EnsembleConfig {
        graph: graph.clone(),
        u0: u0.clone(),
        g0: g0.clone(),
        n_steps: process.steps,
        n_trajectories: trajectories,
        base_seed: process.seed,
        sample_times: sample_times.clone(),
        parallelism: threads,
    };
    let started = Instant::now();
    let stats = run_ensemble(&config).map_err(|e| CliError::Run(e.to_string()))?;
    let runtime_seconds = started.elapsed().as_secs_f64();

    let fit = fit_power_law(&stats, window);
    let fit_text = match &fit {
        Ok(fit) => format!(
            "fit: mean ‖z‖² ≈ {:.6} · t^{:.6} (r² = {:.4}) on t ∈ [{}, {}]",
            fit.amplitude, fit.exponent, fit.r_squared, window.0, window.1
        ),
        Err(err) => format!("no power-law fit: {err}"),
    };
    let fit_error_text = fit.as_ref().err().map(|e| e.to_string());
    let summary = output::ensemble_summary_json(
        fit.as_ref().map_err(|_| fit_error_text.as_deref().unwrap_or("unavailable")),
        &graph,
        &process.graph,
        &u0,
        &g0,
        process.steps,
        trajectories,
        process.seed,
        &sample_times,
        threads,
        window,
        runtime_seconds,
    );

    write_file(out, &output::ensemble_csv(&stats))?;
    let mut summary_text = serde_json::to_string_pretty(&summary).expect("valid JSON value");
    summary_text.push('\n');
    let summary_path = sidecar_path(out, "summary.json");
    write_file(&summary_path, &summary_text)?;
    println!(
        "wrote {} and {}\n{fit_text}",
        out.display(),
        summary_path.display()
    );
    Ok(0)
}

fn cmd_verify(quick: bool, seed: u64) -> i32 {
    let outcomes = verify::run_all(quick, seed);
    for outcome in &outcomes {
        let verdict = if outcome.passed { "pass" } else { "FAIL" };
        println!("check {}: {verdict} ({})", outcome.name, outcome.detail);
    }
    let failed: Vec<&str> = outcomes
        .iter()
        .filter(|o| !o.passed)
        .map(|o| o.name)
        .collect();
    if !failed.is_empty() {
        eprintln!("failed checks: {}", failed.join(", "));
    }
    verify::exit_code(&outcomes)
}

fn cmd_graph_export(graph_spec: &str, out: Option<&Path>) -> Result<i32, CliError> {
    let graph = parse_graph(graph_spec)?;
    let mut text = graph.to_json();
    text.push('\n');
    emit(out, &text)?;
    Ok(0)
}
