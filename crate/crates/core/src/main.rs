use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use extremal::gram::{gram_entries, NodeWindow};
use extremal::solve::{solve_with, RouteChoice, SolveOptions};
use extremal::sweep::{render, run_sweep, OutputFormat, ResultRecord, SweepConfig};
use extremal::verify::{run_verify_with, VerifyLevel, VerifyOptions, SWEEP_DELTAS};
use extremal::{Bandwidth, Diagnostics, SymmetryGroup};

#[derive(Parser)]
#[command(name = "extremal", version, about = "Extremal problems in weighted Paley–Wiener spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem and print the result as JSON.
    Compute(ComputeArgs),
    /// Solve over an α grid and write CSV, JSON or SVG.
    Sweep(SweepArgs),
    /// Run the acceptance checks.
    Verify(VerifyArgs),
    /// Write the weighted Gram matrix over a node window as CSV.
    GramDump(GramDumpArgs),
}

/// Accepts decimals and simple fractions such as `4/3`.
fn parse_number(s: &str) -> Result<f64, String> {
    let parse = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    match s.split_once('/') {
        Some((n, d)) => Ok(parse(n)? / parse(d)?),
        None => parse(s),
    }
}

fn parse_bandwidth(s: &str) -> Result<Bandwidth, String> {
    Bandwidth::new(parse_number(s)?).map_err(|e| e.to_string())
}

fn parse_finite(s: &str) -> Result<f64, String> {
    let v = parse_number(s)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn parse_group(s: &str) -> Result<SymmetryGroup, String> {
    s.parse().map_err(|e: extremal::Error| e.to_string())
}

fn parse_route(s: &str) -> Result<RouteChoice, String> {
    s.parse().map_err(|e: extremal::Error| e.to_string())
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    s.parse().map_err(|e: extremal::Error| e.to_string())
}

fn parse_level(s: &str) -> Result<VerifyLevel, String> {
    s.parse().map_err(|e: extremal::Error| e.to_string())
}

fn parse_k(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("k must be at least 1".into()),
        Ok(k) => Ok(k),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Args)]
struct ComputeArgs {
    /// U, Sp, O, SO(even) or SO(odd).
    #[arg(long, value_parser = parse_group)]
    group: SymmetryGroup,
    #[arg(long, value_parser = parse_bandwidth)]
    delta: Bandwidth,
    #[arg(long, value_parser = parse_finite, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, default_value = "1", value_parser = parse_k)]
    k: usize,
    /// auto, variational, kernel or debranges.
    #[arg(long, default_value = "auto", value_parser = parse_route)]
    route: RouteChoice,
    /// Variational basis size.
    #[arg(long)]
    nodes: Option<usize>,
    /// Root bisection width.
    #[arg(long, value_parser = parse_finite)]
    tol: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated groups (default: all).
    #[arg(long, value_delimiter = ',', value_parser = parse_group)]
    groups: Vec<SymmetryGroup>,
    /// Comma-separated bandwidths (default: 1, 4/3, 3/2, 2).
    #[arg(long, value_delimiter = ',', value_parser = parse_bandwidth)]
    deltas: Vec<Bandwidth>,
    #[arg(long, default_value = "0", value_parser = parse_finite, allow_hyphen_values = true)]
    alpha_min: f64,
    #[arg(long, default_value = "4", value_parser = parse_finite, allow_hyphen_values = true)]
    alpha_max: f64,
    #[arg(long, default_value = "0.05", value_parser = parse_finite)]
    alpha_step: f64,
    #[arg(long, default_value = "1", value_parser = parse_k)]
    k: usize,
    #[arg(long, default_value = "auto", value_parser = parse_route)]
    route: RouteChoice,
    /// Output file (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv, json or svg (default: from the output extension, else csv).
    #[arg(long, value_parser = parse_format)]
    format: Option<OutputFormat>,
    /// Skip the variational cross-check at the sweep endpoints.
    #[arg(long)]
    no_cross_check: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value = "quick", value_parser = parse_level)]
    level: VerifyLevel,
    #[arg(long, hide = true)]
    corrupt_gram: bool,
}

#[derive(Args)]
struct GramDumpArgs {
    #[arg(long, value_parser = parse_group)]
    group: SymmetryGroup,
    #[arg(long, value_parser = parse_bandwidth)]
    delta: Bandwidth,
    #[arg(long, allow_hyphen_values = true)]
    n_min: i64,
    #[arg(long, allow_hyphen_values = true)]
    n_max: i64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct ComputeOutput {
    #[serde(flatten)]
    record: ResultRecord,
    #[serde(skip_serializing_if = "Option::is_none")]
    diagnostics: Option<Diagnostics>,
}

fn compute(args: ComputeArgs) -> ExitCode {
    let opts = SolveOptions {
        nodes: args.nodes,
        tol: args.tol,
    };
    let outcome = solve_with(args.group, args.delta, args.alpha, args.k, args.route, &opts);
    let record = ResultRecord::new(args.group, args.delta, args.alpha, args.k, args.route, &outcome);
    if let Ok(s) = &outcome {
        for w in &s.diagnostics.warnings {
            eprintln!("warning: {w}");
        }
    }
    let out = ComputeOutput {
        record,
        diagnostics: outcome.as_ref().ok().map(|s| s.diagnostics.clone()),
    };
    println!("{}", serde_json::to_string(&out).expect("record serializes"));
    if outcome.is_ok() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn infer_format(path: Option<&Path>) -> OutputFormat {
    match path.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
        Some("json") => OutputFormat::Json,
        Some("svg") => OutputFormat::Svg,
        _ => OutputFormat::Csv,
    }
}

fn write_output(path: Option<&Path>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => fs::write(p, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn sweep(args: SweepArgs) -> ExitCode {
    let format = args.format.unwrap_or_else(|| infer_format(args.out.as_deref()));
    let deltas = if args.deltas.is_empty() {
        SWEEP_DELTAS.iter().map(|&d| Bandwidth::new(d).expect("positive")).collect()
    } else {
        args.deltas
    };
    let cfg = SweepConfig {
        groups: if args.groups.is_empty() {
            SymmetryGroup::ALL.to_vec()
        } else {
            args.groups
        },
        deltas,
        alpha_min: args.alpha_min,
        alpha_max: args.alpha_max,
        alpha_step: args.alpha_step,
        k: args.k,
        route: args.route,
        out_path: args.out,
        format,
        cross_check: !args.no_cross_check,
    };
    if let Err(e) = cfg.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let report = match run_sweep(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if let Err(e) = write_output(cfg.out_path.as_deref(), &render(&report, cfg.format)) {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(1);
    }
    let failed = report.points.iter().filter(|p| p.outcome.is_err()).count();
    if failed > 0 {
        eprintln!("{failed} of {} points failed", report.points.len());
    }
    if report.succeeded() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn verify(args: VerifyArgs) -> ExitCode {
    let opts = VerifyOptions {
        level: args.level,
        corrupt_gram: args.corrupt_gram,
    };
    let outcomes = run_verify_with(&opts, |o| println!("{o}"));
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.passed).map(|o| o.name).collect();
    if failed.is_empty() {
        println!("all {} criteria passed", outcomes.len());
        ExitCode::SUCCESS
    } else {
        println!("failed: {}", failed.join(", "));
        ExitCode::from(1)
    }
}

fn gram_dump(args: GramDumpArgs) -> ExitCode {
    let window = match NodeWindow::new(args.n_min, args.n_max) {
        Ok(w) => w,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let g = gram_entries(args.group, args.delta, window);
    let mut csv = String::from("row,col,value\n");
    for (i, m) in window.indices().enumerate() {
        for (j, n) in window.indices().enumerate() {
            csv.push_str(&format!("{m},{n},{}\n", g[(i, j)]));
        }
    }
    match write_output(args.out.as_deref(), &csv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: cannot write output: {e}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Compute(a) => compute(a),
        Command::Sweep(a) => sweep(a),
        Command::Verify(a) => verify(a),
        Command::GramDump(a) => gram_dump(a),
    }
}
