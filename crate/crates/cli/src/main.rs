//! `tss3dkp` command-line front end.
//!
//! Exit codes: 0 on success, 1 on bad input or a failed check, 2 when the
//! solver stops on a node or time limit. Diagnostics go to stderr as one JSON
//! object per line.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use tss3dkp::bound::printer_upper_bound;
use tss3dkp::det_equiv::{build_det_equiv, build_for_instance, evaluate_first_stage, solve_det_equiv, BuildOptions};
use tss3dkp::experiments::{run_sweep, SweepSpec};
use tss3dkp::generator::{generate, Aspect, GenConfig, SweepValue};
use tss3dkp::io::{export_mps, instance_to_json_seeded, read_instance, write_solution, MpsOptions, Solution};
use tss3dkp::mip::{solve_mip, MipParams, MipStatus};
use tss3dkp::model::FirstStageDecision;
use tss3dkp::oracle::{oracle_suite, OracleLimits, TinyConfig};
use tss3dkp::rational::{exact_decimal, format_decimal, format_rational, parse_rational, Rational};
use tss3dkp::Error;

const TIME_LIMIT_ENV: &str = "TSS3DKP_TIME_LIMIT";

#[derive(Parser)]
#[command(name = "tss3dkp", version, about = "Two-stage stochastic 3D-printing knapsack solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random instance.
    Gen(GenArgs),
    /// Solve an instance through its deterministic equivalent.
    Solve(SolveArgs),
    /// Expected reward of a fixed packing.
    Eval(EvalArgs),
    /// Reward gain of printers across one aspect's grid.
    Sweep(SweepArgs),
    /// Compare the solver against brute force on tiny instances.
    OracleCheck(OracleArgs),
    /// Printer count bounds.
    Bound(BoundArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    items: usize,
    #[arg(long)]
    demand_limit: u64,
    #[arg(long)]
    scenarios: usize,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the generator trace as JSON.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct Limits {
    #[arg(long, default_value_t = 0.001)]
    gap: f64,
    /// Seconds; falls back to TSS3DKP_TIME_LIMIT.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    node_limit: Option<u64>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[command(flatten)]
    limits: Limits,
    #[arg(long)]
    no_printers: bool,
    #[arg(long)]
    out_solution: Option<PathBuf>,
    #[arg(long)]
    export_mps: Option<PathBuf>,
    /// Write the MPS objective as a minimisation without OBJSENSE.
    #[arg(long)]
    negate_objective: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    instance: PathBuf,
    /// `a_1,...,a_n,a_p,a_b`
    #[arg(long)]
    first_stage: String,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    aspect: String,
    /// Comma-separated values; defaults to the aspect's full grid.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, default_value_t = 10)]
    per_value: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out_csv: Option<PathBuf>,
    #[command(flatten)]
    limits: Limits,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 200)]
    count: usize,
    #[arg(long, default_value_t = 4)]
    max_items: usize,
    #[arg(long, default_value_t = 3)]
    max_scenarios: usize,
    #[arg(long, default_value_t = 3)]
    max_demand: u64,
    #[arg(long)]
    seed: u64,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long)]
    instance: PathBuf,
}

enum Failure {
    Input(Error),
    Check(String),
    Limit(String),
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        Failure::Input(err)
    }
}

fn diagnostic(level: &str, code: &str, message: &str) {
    eprintln!("{}", json!({ "level": level, "code": code, "message": message }));
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format(|buf, record| {
            use std::io::Write;
            writeln!(
                buf,
                "{}",
                json!({ "level": record.level().as_str().to_lowercase(), "code": "log", "message": record.args().to_string() })
            )
        })
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{err}");
                return ExitCode::SUCCESS;
            }
            diagnostic("error", "usage", err.to_string().trim());
            return ExitCode::from(1);
        }
    };
    let outcome = match cli.command {
        Command::Gen(args) => gen(args),
        Command::Solve(args) => solve(args),
        Command::Eval(args) => eval(args),
        Command::Sweep(args) => sweep(args),
        Command::OracleCheck(args) => oracle_check(args),
        Command::Bound(args) => bound(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(err)) => {
            diagnostic("error", err.code(), &err.to_string());
            ExitCode::from(1)
        }
        Err(Failure::Check(message)) => {
            diagnostic("error", "check_failed", &message);
            ExitCode::from(1)
        }
        Err(Failure::Limit(message)) => {
            diagnostic("warning", "solver_limit", &message);
            ExitCode::from(2)
        }
    }
}

fn rational_arg(text: &str, flag: &str) -> Result<Rational, Error> {
    parse_rational(text).ok_or_else(|| Error::InvalidArgument(format!("--{flag}: '{text}' is not a number")))
}

fn decimal(value: &Rational) -> String {
    exact_decimal(value).unwrap_or_else(|| format_decimal(value, 9))
}

fn params(limits: &Limits) -> Result<MipParams, Error> {
    if !(limits.gap >= 0.0 && limits.gap.is_finite()) {
        return Err(Error::InvalidArgument(format!("--gap {} must be a finite non-negative number", limits.gap)));
    }
    let seconds = match limits.time_limit {
        Some(s) => Some(s),
        None => match std::env::var(TIME_LIMIT_ENV) {
            Ok(text) => Some(
                text.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidArgument(format!("{TIME_LIMIT_ENV}='{text}' is not a number")))?,
            ),
            Err(_) => None,
        },
    };
    let time_limit = match seconds {
        Some(s) if s.is_finite() && s > 0.0 => Some(Duration::from_secs_f64(s)),
        Some(s) => return Err(Error::InvalidArgument(format!("time limit {s} must be positive"))),
        None => None,
    };
    Ok(MipParams {
        relative_gap: limits.gap,
        node_limit: limits.node_limit,
        time_limit,
    })
}

fn gen(args: GenArgs) -> Result<(), Failure> {
    let mut config = GenConfig::new(args.items, args.demand_limit, args.scenarios);
    if let Some(alpha) = &args.alpha {
        config.alpha = rational_arg(alpha, "alpha")?;
    }
    let (instance, trace) = generate(&config, args.seed)?;
    let text = instance_to_json_seeded(&instance, Some(args.seed));
    if let Some(path) = &args.trace {
        let mut trace_text = serde_json::to_string_pretty(&trace).map_err(|e| Error::Internal(e.to_string()))?;
        trace_text.push('\n');
        std::fs::write(path, trace_text).map_err(Error::from)?;
    }
    match &args.out {
        Some(path) => std::fs::write(path, text).map_err(Error::from)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn solve(args: SolveArgs) -> Result<(), Failure> {
    let instance = read_instance(&args.instance)?;
    let params = params(&args.limits)?;
    let (problem, map) = build_for_instance(&instance, !args.no_printers)?;
    if let Some(path) = &args.export_mps {
        let options = MpsOptions {
            negate_objective: args.negate_objective,
        };
        export_mps(&problem, path, options)?;
    }
    let result = solve_det_equiv(&instance, &problem, &map, &params, None)?;
    let solution = Solution::from_result(&instance, &result, &map)?;
    println!("status: {}", result.status.as_str());
    if let Some(solution) = &solution {
        let d = &solution.decision;
        let items: Vec<String> = d.items.iter().map(u64::to_string).collect();
        println!(
            "objective: {} ({})",
            decimal(&solution.objective),
            format_rational(&solution.objective)
        );
        println!("first_stage: a={} a_p={} a_b={}", items.join(","), d.printers, d.material);
        if let Some(path) = &args.out_solution {
            write_solution(solution, path)?;
        }
    }
    println!("nodes: {} branches: {} gap: {:e}", result.nodes, result.branches, result.gap);
    match result.status {
        MipStatus::OptimalWithinGap => Ok(()),
        MipStatus::Infeasible => Err(Failure::Check("model is infeasible".into())),
        status => Err(Failure::Limit(format!(
            "stopped on {} after {} nodes",
            status.as_str(),
            result.nodes
        ))),
    }
}

fn eval(args: EvalArgs) -> Result<(), Failure> {
    let instance = read_instance(&args.instance)?;
    let values = args
        .first_stage
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<u64>()
                .map_err(|_| Error::InvalidArgument(format!("--first-stage: '{part}' is not a count")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let n = instance.num_items();
    if values.len() != n + 2 {
        return Err(Error::Dimension(format!("--first-stage needs {} values, got {}", n + 2, values.len())).into());
    }
    let decision = FirstStageDecision {
        items: values[..n].to_vec(),
        printers: values[n],
        material: values[n + 1],
    };
    let reward = evaluate_first_stage(&instance, &decision, &MipParams::exact())?;
    println!("expected_reward: {} ({})", decimal(&reward), format_rational(&reward));
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<(), Failure> {
    let aspect: Aspect = args.aspect.parse()?;
    let grid = match &args.grid {
        Some(text) => text
            .split(',')
            .map(|v| v.parse::<SweepValue>())
            .collect::<Result<Vec<_>, _>>()?,
        None => aspect.studied_grid(),
    };
    if args.per_value == 0 {
        return Err(Error::InvalidArgument("--per-value must be positive".into()).into());
    }
    let mut spec = SweepSpec::desk(aspect, args.per_value, args.seed);
    spec.grid = grid;
    spec.params = params(&args.limits)?;
    let report = run_sweep(&spec)?;
    let csv = report.to_csv();
    match &args.out_csv {
        Some(path) => std::fs::write(path, csv).map_err(Error::from)?,
        None => print!("{csv}"),
    }
    let fails: usize = report.rows.iter().map(|row| row.fails).sum();
    if fails > 0 {
        return Err(Failure::Limit(format!("{fails} instances did not finish within the solver limits")));
    }
    Ok(())
}

fn oracle_check(args: OracleArgs) -> Result<(), Failure> {
    if args.count == 0 || args.max_items == 0 || args.max_scenarios == 0 {
        return Err(Error::InvalidArgument("--count, --max-items and --max-scenarios must be positive".into()).into());
    }
    let config = TinyConfig {
        max_items: args.max_items,
        max_scenarios: args.max_scenarios,
        max_demand: args.max_demand,
    };
    let limits = OracleLimits { max_states: 10_000_000 };
    let cases = oracle_suite(args.count, config, args.seed, limits)?;
    println!("# seed={} count={}", args.seed, args.count);
    let mut matched = 0usize;
    for case in &cases {
        let z = printer_upper_bound(&case.instance).z;
        let (problem, _) = build_det_equiv(&case.instance, z, BuildOptions::default())?;
        let result = solve_mip(&problem, &MipParams::exact())?;
        if result.status == MipStatus::OptimalWithinGap && result.objective.as_ref() == Some(&case.optimum) {
            matched += 1;
        } else {
            let got = result.objective.as_ref().map(format_rational).unwrap_or_else(|| "none".into());
            println!(
                "mismatch seed={} oracle={} solver={}",
                case.seed,
                format_rational(&case.optimum),
                got
            );
        }
    }
    println!("{matched}/{} match", cases.len());
    if matched == cases.len() {
        Ok(())
    } else {
        Err(Failure::Check(format!("{} of {} cases disagree", cases.len() - matched, cases.len())))
    }
}

fn bound(args: BoundArgs) -> Result<(), Failure> {
    let instance = read_instance(&args.instance)?;
    let result = printer_upper_bound(&instance);
    let counts: Vec<String> = result.per_scenario.iter().map(u64::to_string).collect();
    println!("per_scenario={}", counts.join(","));
    println!("caps={},{}", result.cap_weight, result.cap_volume);
    println!("U={} Z={}", result.max_needed, result.z);
    Ok(())
}
