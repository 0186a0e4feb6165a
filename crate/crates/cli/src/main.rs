use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use beds_core::analysis::{classify_run, optimal_obs_precision, predict};
use beds_core::engine::{run, run_with_flux, sweep, EngineError, GridAxis};
use beds_core::fluxgen::read_flux_csv;
use beds_core::overrides::{apply_overrides, parse_override};
use beds_core::{validate_scenario, Scenario};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "beds", version, about = "Dissipative belief simulation and energy bounds")]
struct Cli {
    /// Replaces the scenario seed.
    #[arg(long, env = "BEDS_SEED", global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form steady-state rate and power bounds.
    Predict(PredictArgs),
    /// Run one scenario and write its trace, ledger and summary.
    Simulate(SimulateArgs),
    /// Run a grid of scenario variants.
    Sweep(SweepArgs),
    /// Run one scenario and report problem-class verdicts.
    Classify(ScenarioArgs),
    /// Run the acceptance suite.
    Verify(VerifyArgs),
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct PredictArgs {
    #[arg(long, value_parser = positive)]
    gamma: f64,
    #[arg(long, value_parser = positive)]
    tau_star: f64,
    #[arg(long, value_parser = positive)]
    tau_d: f64,
    #[arg(long, value_parser = positive, default_value_t = 1.0)]
    kbt: f64,
    #[arg(long, value_parser = positive)]
    lambda_max: Option<f64>,
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value = ".")]
    output_dir: PathBuf,
    /// Dotted-path override, e.g. `beds.gamma=0.2`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: ScenarioArgs,
    /// Replay observations from a CSV instead of generating them.
    #[arg(long)]
    flux: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: ScenarioArgs,
    /// Axis as `path=v1,v2,...`. Repeatable; the first axis varies slowest.
    #[arg(long = "grid", value_name = "PATH=V1,V2,...", required = true)]
    grid: Vec<String>,
    #[arg(long, default_value_t = 1)]
    replicates: usize,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 1)]
    seed_base: u64,
    #[arg(long, default_value = ".")]
    output_dir: PathBuf,
}

fn positive(raw: &str) -> Result<f64, String> {
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        Ok(_) => Err("must be a positive finite number".into()),
        Err(e) => Err(e.to_string()),
    }
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Runtime(_) => 1,
            Failure::Config(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Runtime(m) => m,
        }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(format!("{}: {e}", path.display()))
}

fn engine_failure(e: EngineError) -> Failure {
    match e {
        EngineError::Validation(list) => Failure::Config(validation_text(&list)),
        EngineError::Override(e) => Failure::Config(e.to_string()),
        EngineError::NoReplicates => Failure::Config(e.to_string()),
        other => Failure::Runtime(other.to_string()),
    }
}

fn validation_text(list: &[beds_core::ValidationError]) -> String {
    let mut out = String::from("invalid scenario:");
    for e in list {
        out.push_str("\n  - ");
        out.push_str(&e.to_string());
    }
    out
}

fn load_scenario(args: &ScenarioArgs, seed: Option<u64>) -> Result<Scenario, Failure> {
    let text = fs::read_to_string(&args.scenario).map_err(|e| io_failure(&args.scenario, e))?;
    let parsed = Scenario::from_json(&text)
        .map_err(|e| Failure::Config(format!("{}: {e}", args.scenario.display())))?;
    let overrides = args
        .overrides
        .iter()
        .map(|raw| parse_override(raw))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure::Config(e.to_string()))?;
    let mut scenario = apply_overrides(&parsed, &overrides).map_err(|e| Failure::Config(e.to_string()))?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    validate_scenario(scenario).map_err(|list| Failure::Config(validation_text(&list)))
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| io_failure(path, e))
}

fn open(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| io_failure(path, e))
}

fn cmd_predict(a: &PredictArgs) -> Result<(), Failure> {
    let p = predict(a.gamma, a.tau_star, a.tau_d, a.kbt).map_err(|e| Failure::Config(e.to_string()))?;
    let mut doc = json!({
        "lambda_required": p.lambda_required,
        "p_min_exact": p.p_min_exact,
        "p_min_linear": p.p_min_linear,
        "e_obs_min": p.e_obs_min,
    });
    if let Some(lambda_max) = a.lambda_max {
        let opt = optimal_obs_precision(a.gamma, a.tau_star, lambda_max).map_err(|e| Failure::Config(e.to_string()))?;
        doc["tau_d_opt"] = json!(opt);
    }
    println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
    Ok(())
}

fn cmd_simulate(a: &SimulateArgs, seed: Option<u64>) -> Result<(), Failure> {
    let scenario = load_scenario(&a.common, seed)?;
    let trace = match &a.flux {
        Some(path) => {
            let file = File::open(path).map_err(|e| io_failure(path, e))?;
            let flux = read_flux_csv(file).map_err(|e| io_failure(path, e))?;
            run_with_flux(&scenario, &flux)
        }
        None => run(&scenario),
    }
    .map_err(engine_failure)?;

    let dir = &a.common.output_dir;
    create_dir(dir)?;
    let trace_path = dir.join("trace.csv");
    trace.write_csv(open(&trace_path)?).map_err(|e| io_failure(&trace_path, e))?;
    let ledger_path = dir.join("ledger.csv");
    trace.ledger.write_csv(open(&ledger_path)?).map_err(|e| io_failure(&ledger_path, e))?;
    let summary = trace.summary_json();
    write_text(&dir.join("summary.json"), &summary)?;
    println!("{summary}");
    Ok(())
}

fn parse_axis(raw: &str) -> Result<GridAxis, Failure> {
    let (path, list) = raw
        .split_once('=')
        .ok_or_else(|| Failure::Config(format!("malformed grid `{raw}`, expected path=v1,v2,...")))?;
    let values = list
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure::Config(format!("grid `{raw}`: {e}")))?;
    Ok(GridAxis::new(path.trim(), values))
}

fn cmd_sweep(a: &SweepArgs, seed: Option<u64>) -> Result<(), Failure> {
    let scenario = load_scenario(&a.common, seed)?;
    let grid = a.grid.iter().map(|g| parse_axis(g)).collect::<Result<Vec<_>, _>>()?;
    let table = sweep(&scenario, &grid, a.replicates).map_err(engine_failure)?;
    create_dir(&a.common.output_dir)?;
    let path = a.common.output_dir.join("sweep.csv");
    table.write_csv(open(&path)?).map_err(|e| io_failure(&path, e))?;
    println!("{} rows written to {}", table.rows.len(), path.display());
    Ok(())
}

fn cmd_classify(a: &ScenarioArgs, seed: Option<u64>) -> Result<(), Failure> {
    let scenario = load_scenario(a, seed)?;
    let trace = run(&scenario).map_err(engine_failure)?;
    let verdict = classify_run(&trace, &scenario.problem).map_err(|e| Failure::Runtime(e.to_string()))?;
    let text = serde_json::to_string_pretty(&verdict).expect("json");
    create_dir(&a.output_dir)?;
    write_text(&a.output_dir.join("verdict.json"), &text)?;
    println!("{text}");
    Ok(())
}

fn cmd_verify(a: &VerifyArgs) -> Result<(), Failure> {
    create_dir(&a.output_dir)?;
    let report = beds_verify::run_all(a.seed_base, Some(&a.output_dir));
    for check in &report.checks {
        println!("{}", check.line());
    }
    let text = serde_json::to_string_pretty(&report).expect("json");
    write_text(&a.output_dir.join("verify_report.json"), &text)?;
    if report.passed {
        Ok(())
    } else {
        let failed: Vec<Value> = report.checks.iter().filter(|c| !c.passed && !c.exploratory).map(|c| json!(c.id)).collect();
        Err(Failure::Runtime(format!("failed checks: {}", Value::from(failed))))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Predict(a) => cmd_predict(a),
        Command::Simulate(a) => cmd_simulate(a, cli.seed),
        Command::Sweep(a) => cmd_sweep(a, cli.seed),
        Command::Classify(a) => cmd_classify(a, cli.seed),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
