//! `swipt sweep` runs a Monte-Carlo sweep and writes the summary CSV;
//! `swipt solve` reports one instance in detail.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use swipt_core::scheme::SchemeRegistry;
use swipt_core::sim::{
    run_sweep, solve_one, write_csv, RunOptions, SimConfig, SweepSpec, TrialOutcome, FULL_SCALE_ERS,
};

#[derive(Parser)]
#[command(
    name = "swipt",
    version,
    about = "Secure SWIPT beamforming with a non-linear energy-harvesting model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo sweep; one CSV row per (sweep point, scheme).
    Sweep(SweepArgs),
    /// Solve trial 0 of the configured scenario and print a report.
    Solve(SolveArgs),
}

#[derive(Args)]
struct Common {
    /// Flat TOML scenario file; missing keys take the built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed of the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// proposed, baseline or both.
    #[arg(long, default_value = "both")]
    scheme: String,
    /// Use the full receiver count instead of the desk-scale default.
    #[arg(long)]
    full_scale: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Axes such as `n_t=4,8;gamma_req_db=5:30:5`.
    #[arg(long, default_value = "")]
    sweep: String,
    /// Overrides the trial count of the config file.
    #[arg(long)]
    trials: Option<usize>,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fill the wall-time column (the CSV is then no longer reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    /// Write the final linear-oracle SDP in SDPA sparse format.
    #[arg(long)]
    dump: Option<PathBuf>,
}

fn load(common: &Common) -> Result<SimConfig, String> {
    let mut cfg = match &common.config {
        Some(p) => SimConfig::load(p).map_err(|e| e.to_string())?,
        None => SimConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.scenario.seed = s;
    }
    if common.full_scale {
        eprintln!(
            "warning: full scale uses {FULL_SCALE_ERS} energy receivers; expect a much longer run"
        );
        cfg = cfg.full_scale();
    }
    Ok(cfg)
}

fn sweep(args: SweepArgs) -> Result<ExitCode, String> {
    let mut cfg = load(&args.common)?;
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    let spec = SweepSpec::parse(&args.sweep).map_err(|e| e.to_string())?;
    let registry = SchemeRegistry::default();
    let schemes = registry
        .select(&args.common.scheme)
        .map_err(|e| e.to_string())?;
    let out = run_sweep(
        &cfg,
        &spec,
        &schemes,
        RunOptions {
            timing: args.timing,
        },
    )
    .map_err(|e| e.to_string())?;
    for r in out.failures() {
        if let TrialOutcome::Failed(m) = &r.outcome {
            eprintln!("point {} trial {} {}: {m}", r.point, r.trial, r.scheme);
        }
    }
    let mut sink: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| format!("{}: {e}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    write_csv(&out, &mut sink).map_err(|e| e.to_string())?;
    sink.flush().map_err(|e| e.to_string())?;
    Ok(ExitCode::SUCCESS)
}

fn solve(args: SolveArgs) -> Result<ExitCode, String> {
    let cfg = load(&args.common)?;
    let registry = SchemeRegistry::default();
    let schemes = registry
        .select(&args.common.scheme)
        .map_err(|e| e.to_string())?;
    let report = solve_one(&cfg, &schemes, args.dump.as_deref()).map_err(|e| e.to_string())?;
    print!("{}", report.text);
    Ok(if report.feasible {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Sweep(a) => sweep(a),
        Command::Solve(a) => solve(a),
    };
    res.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::FAILURE
    })
}
