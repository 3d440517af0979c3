use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use hybrid_ldu::harness::{run, Mode, RhsMode, RunConfig, RunStatus};
use hybrid_ldu::krylov::Method;

/// Factor and solve a Matrix Market system with the hybrid mixed-precision LDU.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    #[arg(long)]
    matrix: PathBuf,
    /// Postponing threshold.
    #[arg(long, default_value_t = 0.05)]
    tau: f64,
    /// Nested-dissection levels (default depends on the size).
    #[arg(long)]
    levels: Option<usize>,
    /// Extra entries moved into the postponed set.
    #[arg(long, default_value_t = 4)]
    n_extra: usize,
    /// Mixed pair: f32f64 or f64dd.
    #[arg(long, conflicts_with = "pure")]
    pair: Option<String>,
    /// Single-precision baseline: f32, f64 or dd.
    #[arg(long)]
    pure: Option<String>,
    /// ir, gcr or bgcr.
    #[arg(long, default_value = "bgcr")]
    method: Method,
    /// Relative residual target of the inner solver (default 50 eps).
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    /// mod11, file:PATH or seed:N.
    #[arg(long, default_value = "mod11")]
    rhs: RhsMode,
    /// CSV of the Schur-complement construction; the solve goes to *.solve.csv.
    #[arg(long)]
    history: Option<PathBuf>,
    /// JSON report (printed to stdout as well).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write the computed solution.
    #[arg(long)]
    solution: Option<PathBuf>,
}

fn config(cli: Cli) -> hybrid_ldu::Result<RunConfig> {
    let mode = match (&cli.pair, &cli.pure) {
        (_, Some(p)) => Mode::parse_pure(p)?,
        (Some(p), None) => Mode::parse_pair(p)?,
        (None, None) => Mode::parse_pair("f32f64")?,
    };
    let mut cfg = RunConfig::new(cli.matrix);
    cfg.tau = cli.tau;
    cfg.levels = cli.levels;
    cfg.n_extra = cli.n_extra;
    cfg.mode = mode;
    cfg.method = cli.method;
    cfg.tol = cli.tol;
    cfg.max_iter = cli.max_iter;
    cfg.rhs = cli.rhs;
    cfg.history_path = cli.history;
    cfg.report_path = cli.report;
    cfg.solution_path = cli.solution;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = config(cli).and_then(|cfg| run(&cfg));
    match out {
        Ok(out) => {
            match out.report.to_json() {
                Ok(json) => println!("{json}"),
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            }
            if out.report.status == RunStatus::Ok {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: inner solver did not converge");
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
