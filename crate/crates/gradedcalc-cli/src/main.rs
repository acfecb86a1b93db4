//! Command-line front end: parses a problem document, dispatches the named
//! command and writes append-only JSON reports plus CSV/JSON artifacts.
//! Exit codes: 0 pass, 1 usage error, 2 verified failure, 3 inconclusive.

mod commands;
mod dsl;
mod expr;

use clap::Parser;
use commands::{run, RunOptions};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "gradedcalc",
    about = "Symbolic and numeric checks for Shubin-type calculi on graded Lie groups"
)]
struct Cli {
    /// Problem document.
    #[arg(long)]
    input: PathBuf,
    /// Output directory for reports and artifacts.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Sampling seed for the numeric checks.
    #[arg(long)]
    seed: Option<u64>,
    /// Truncation ladder override, comma separated.
    #[arg(long, value_delimiter = ',')]
    truncation: Option<Vec<usize>>,
    /// Relative tolerance override for convergence checks.
    #[arg(long)]
    tolerance: Option<f64>,
}

fn next_report_index(dir: &Path) -> usize {
    let mut max = 0usize;
    if let Ok(entries) = std::fs::read_dir(dir) {
        for entry in entries.flatten() {
            let name = entry.file_name();
            let name = name.to_string_lossy();
            if let Some(rest) = name.strip_prefix("report-") {
                if let Some(idx) = rest.strip_suffix(".json") {
                    if let Ok(v) = idx.parse::<usize>() {
                        max = max.max(v);
                    }
                }
            }
        }
    }
    max + 1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match std::fs::read_to_string(&cli.input) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", cli.input.display());
            return ExitCode::from(1);
        }
    };
    let doc = match dsl::parse_document(&text) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: {}:{e}", cli.input.display());
            return ExitCode::from(1);
        }
    };
    let threads = std::env::var("GRADEDCALC_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(1)
        .max(1);
    let opts = RunOptions {
        seed: cli
            .seed
            .or_else(|| {
                doc.get("command", "seed")
                    .and_then(|e| e.value.as_int())
                    .map(|v| v as u64)
            })
            .unwrap_or(7),
        truncations: cli.truncation.clone(),
        tolerance: cli.tolerance,
        threads,
    };
    let outcome = match run(&doc, &opts) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };

    if let Err(e) = std::fs::create_dir_all(&cli.out) {
        eprintln!("error: cannot create {}: {e}", cli.out.display());
        return ExitCode::from(1);
    }
    let index = next_report_index(&cli.out);
    let mut artifact_paths = Vec::new();
    for (suffix, contents) in &outcome.artifacts {
        let path = cli
            .out
            .join(format!("{suffix}-{index:04}.{}", artifact_ext(suffix)));
        if let Err(e) = std::fs::write(&path, contents) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(1);
        }
        artifact_paths.push(path.display().to_string());
    }
    let command = doc
        .get_str("command", "name")
        .unwrap_or("unknown")
        .to_string();
    let report = json!({
        "schema": 1,
        "command": command,
        "input": cli.input.display().to_string(),
        "seed": opts.seed,
        "exit_code": outcome.exit_code,
        "verdict": outcome.verdict_line,
        "details": outcome.details,
        "artifacts": artifact_paths,
    });
    let report_path = cli.out.join(format!("report-{index:04}.json"));
    if let Err(e) = std::fs::write(&report_path, format!("{report:#}\n")) {
        eprintln!("error: cannot write {}: {e}", report_path.display());
        return ExitCode::from(1);
    }
    println!("{}", outcome.verdict_line);
    ExitCode::from(outcome.exit_code as u8)
}

fn artifact_ext(suffix: &str) -> &'static str {
    match suffix {
        "spectrum" => "csv",
        _ => "json",
    }
}
