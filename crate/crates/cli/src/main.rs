use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use fpnet_core::harness::{
    emit_boxplot, random_init, run_sweep_with, summarize, write_csv, SweepGrid, SweepOptions, SweptParameter,
};
use fpnet_core::lorawan::{coordinate_names, STATE_DIM};
use fpnet_core::map::Subsystem;
use fpnet_core::nested::{nested_solve, NestedConfig};
use fpnet_core::verify::{Suite, SuiteOutcome};
use fpnet_core::{build_model, picard_solve, SolverConfig, SweepParameters, UnitPoint};

#[derive(Parser)]
#[command(
    name = "fpnet",
    version,
    about = "Fixed-point solvers for a reference single-gateway LoRaWAN model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one model instance.
    Solve(SolveArgs),
    /// Run a parameter sweep and write per-run CSV (and optionally a box plot).
    Sweep(SweepArgs),
    /// Run property suites; exits non-zero if any fails.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Init {
    Random,
    Midpoint,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Picard,
    Nested,
}

#[derive(Args)]
#[allow(non_snake_case)]
struct SolveArgs {
    /// JSON file with model parameters; flags below override it.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long = "C")]
    C: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long = "N")]
    N: Option<u32>,
    #[arg(long)]
    t7: Option<f64>,
    #[arg(long)]
    d: Option<u32>,
    /// Six comma-separated SF fractions, SF7 first.
    #[arg(long, value_delimiter = ',')]
    q: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "random")]
    init: Init,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    #[arg(long = "max-iters", default_value_t = 1000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1.0)]
    damping: f64,
    #[arg(long, value_enum, default_value = "picard")]
    method: Method,
    /// Nested method only: coordinates to solve (innermost first); the rest
    /// stay at the initial point. Defaults to all twelve.
    #[arg(long, value_delimiter = ',')]
    coords: Option<Vec<usize>>,
    /// Nested method only: depth guard.
    #[arg(long = "max-depth", default_value_t = NestedConfig::default().max_depth)]
    max_depth: usize,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep grid as JSON; the built-in 3600-run grid if omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    plot: Option<PathBuf>,
    #[arg(long = "group-by", default_value = "alpha")]
    group_by: String,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    #[arg(long = "max-iters", default_value_t = 1000)]
    max_iters: usize,
    /// Solve runs one after another instead of in parallel.
    #[arg(long)]
    serial: bool,
    /// Record wall-clock time per run (output is then not reproducible).
    #[arg(long = "wall-time")]
    wall_time: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyModule {
    Boundary,
    Continuity,
    Oracle,
    Contraction,
    All,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    module: VerifyModule,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn parameters(args: &SolveArgs) -> Result<SweepParameters> {
    let mut p = match &args.params {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            SweepParameters::from_json(&text)?
        }
        None => SweepParameters::default(),
    };
    if let Some(v) = args.alpha {
        p.alpha = v;
    }
    if let Some(v) = args.m {
        p.m = v;
    }
    if let Some(v) = args.p {
        p.p = v;
    }
    if let Some(v) = args.C {
        p.c = v;
    }
    if let Some(v) = args.lambda {
        p.lambda = v;
    }
    if let Some(v) = args.N {
        p.n = v;
    }
    if let Some(v) = args.t7 {
        p.t7 = v;
    }
    if let Some(v) = args.d {
        p.d = v;
    }
    if let Some(q) = &args.q {
        p.q = q
            .as_slice()
            .try_into()
            .map_err(|_| anyhow::anyhow!("--q needs exactly six values, got {}", q.len()))?;
    }
    p.validate()?;
    Ok(p)
}

fn solve(args: SolveArgs) -> Result<()> {
    let params = parameters(&args)?;
    let model = build_model(&params)?;
    let x0 = match args.init {
        Init::Random => random_init(STATE_DIM, args.seed),
        Init::Midpoint => UnitPoint::midpoint(STATE_DIM),
    };

    let report = match args.method {
        Method::Picard => {
            let config = SolverConfig {
                tolerance: args.tol,
                max_iterations: args.max_iters,
                damping: args.damping,
            };
            let r = picard_solve(&model, &x0, &config)?;
            json!({
                "method": "picard",
                "parameters": params,
                "x0": x0,
                "converged": r.converged,
                "iterations": r.iterations,
                "evaluations": r.evaluations,
                "final_step": r.final_step,
                "residual": r.residual,
                "solution": r.solution,
            })
        }
        Method::Nested => {
            let coords = args.coords.clone().unwrap_or_else(|| (0..STATE_DIM).collect());
            let sub = Subsystem::new(&model, coords.clone(), x0.values())?;
            let config = NestedConfig {
                max_depth: args.max_depth,
                ..NestedConfig::default()
            };
            let order: Vec<usize> = (0..coords.len()).collect();
            let r = nested_solve(&sub, &order, &config)?;
            json!({
                "method": "nested",
                "parameters": params,
                "x0": x0,
                "coords": coords,
                "evaluations": r.evaluations,
                "residual": r.residual,
                "solution": sub.lift(r.solution.values()),
            })
        }
    };

    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
        return Ok(());
    }
    for key in [
        "method",
        "converged",
        "iterations",
        "evaluations",
        "final_step",
        "residual",
    ] {
        if let Some(v) = report.get(key) {
            println!("{key}: {}", v.as_str().map_or_else(|| v.to_string(), String::from));
        }
    }
    if let Some(coords) = report.get("coords") {
        println!("coords: {coords}");
    }
    if let Some(sol) = report["solution"].as_array() {
        for (name, v) in coordinate_names().iter().zip(sol) {
            println!("{name}: {v}");
        }
    }
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<()> {
    let grid = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            SweepGrid::from_json(&text)?
        }
        None => SweepGrid::default(),
    };
    let group_by: SweptParameter = args.group_by.parse()?;
    let solver = SolverConfig {
        tolerance: args.tol,
        max_iterations: args.max_iters,
        damping: 1.0,
    };
    let options = SweepOptions {
        parallel: !args.serial,
        record_wall_time: args.wall_time,
    };
    let records = run_sweep_with(&grid, &solver, options)?;
    write_csv(&records, &args.out).with_context(|| format!("writing {}", args.out.display()))?;

    let converged = records.iter().filter(|r| r.converged).count();
    let max_iter = records.iter().filter(|r| r.converged).map(|r| r.iterations).max();
    eprintln!(
        "{} runs, {} converged, max iterations {}",
        records.len(),
        converged,
        max_iter.map_or("-".to_string(), |m| m.to_string())
    );
    let summaries = summarize(&records, group_by)?;
    for s in &summaries {
        let f = |v: Option<f64>| v.map_or("-".to_string(), |v| v.to_string());
        eprintln!(
            "{}: n={} (+{} not converged) min={} q1={} median={} q3={} max={}",
            s.group_key(),
            s.count,
            s.non_converged,
            f(s.min),
            f(s.q1),
            f(s.median),
            f(s.q3),
            f(s.max)
        );
    }
    if let Some(plot) = &args.plot {
        emit_boxplot(&summaries, plot).with_context(|| format!("writing {}", plot.display()))?;
    }
    Ok(())
}

fn verify(args: VerifyArgs) -> Result<bool> {
    let suites: Vec<Suite> = match args.module {
        VerifyModule::Boundary => vec![Suite::Boundary],
        VerifyModule::Continuity => vec![Suite::Continuity],
        VerifyModule::Oracle => vec![Suite::Oracle],
        VerifyModule::Contraction => vec![Suite::Contraction],
        VerifyModule::All => Suite::ALL.to_vec(),
    };
    let outcomes = suites
        .into_iter()
        .map(|s| s.run(args.seed))
        .collect::<Result<Vec<SuiteOutcome>, _>>()?;
    let passed = outcomes.iter().all(|o| o.passed);
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({ "passed": passed, "suites": outcomes }))?
    );
    Ok(passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => solve(a).map(|_| true),
        Command::Sweep(a) => sweep(a).map(|_| true),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
