//! `mepomdp`: solve multi-environment POMDPs, generate benchmark models,
//! cross-check against the brute-force oracle and run benchmark suites.
//!
//! Exit codes: 0 success, 1 usage or parse error, 2 timeout, 3 budget
//! exceeded, 4 oracle mismatch.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use mepomdp::bench::{
    builtin_map, gen_iff, gen_micro_suite, gen_robotnav, gen_rocksample, IffParams, MicroParams, RobotNavParams,
    RockSampleParams,
};
use mepomdp::frontier::MergeStrategy;
use mepomdp::harness::{
    oracle_case, oracle_suite, run, run_suite, scatter_svg, write_csv, Algorithm, ColorBy, RunRecord, SolveOptions,
    Status, Suite,
};
use mepomdp::model::{parse_model, write_model};
use mepomdp::scalar::{format_rational, parse_rational};
use mepomdp::{Error, MultiEnvPomdp};

const EXIT_USAGE: u8 = 1;
const EXIT_TIMEOUT: u8 = 2;
const EXIT_BUDGET: u8 = 3;
const EXIT_MISMATCH: u8 = 4;

#[derive(Parser)]
#[command(name = "mepomdp", version, about = "Max-min planning for multi-environment POMDPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the value (or a threshold verdict) of a model file.
    Solve(SolveArgs),
    /// Write a benchmark model.
    Generate(GenerateArgs),
    /// Compare the frontier algorithm with the brute-force oracle.
    Oracle(OracleArgs),
    /// Run a suite file and write CSV results.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Frontier,
    Exact,
    Brute,
}

#[derive(Clone, Copy, ValueEnum)]
enum MergeArg {
    Naive,
    Incremental,
}

#[derive(Args)]
struct SolveArgs {
    model: PathBuf,
    #[arg(long, short = 'k')]
    horizon: usize,
    /// Decide whether the value is at least this number.
    #[arg(long)]
    threshold: Option<String>,
    /// Gap guarantee for float threshold decisions.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, value_enum, default_value = "frontier")]
    algorithm: AlgorithmArg,
    /// Exact rational arithmetic for the frontier algorithm.
    #[arg(long)]
    exact_arith: bool,
    /// Memoize frontier nodes by multi-belief.
    #[arg(long)]
    cache: bool,
    #[arg(long, value_enum, default_value = "incremental")]
    merge: MergeArg,
    /// Write the optimal mixed policy as JSON.
    #[arg(long)]
    emit_policy: Option<PathBuf>,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    timeout: Option<f64>,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(subcommand)]
    family: Family,
    /// Output model file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Family {
    Rocksample {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        g: usize,
        #[arg(long)]
        t: usize,
        /// Rock cells as `x,y;x,y;...`.
        #[arg(long)]
        positions: Option<String>,
        #[arg(long)]
        d0: Option<f64>,
    },
    Robotnav {
        /// Built-in map name or path to an ASCII map.
        #[arg(long)]
        map: String,
        #[arg(long)]
        d: usize,
    },
    Iff {
        #[arg(long)]
        d1: usize,
        #[arg(long)]
        d2: usize,
        #[arg(long)]
        v1: usize,
        #[arg(long)]
        v2: usize,
        /// Distance bins.
        #[arg(long, default_value_t = 10)]
        bins: usize,
        #[arg(long)]
        friend_visibility: Option<usize>,
    },
    /// One random micro instance.
    Micro {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct OracleArgs {
    /// Model file; random micro instances when absent.
    model: Option<PathBuf>,
    /// Horizon for a model file.
    #[arg(long, short = 'k')]
    horizon: Option<usize>,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Shift every frontier value by one (negative control).
    #[arg(long, hide = true)]
    corrupt_frontier: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ColorArg {
    N,
    States,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    suite: PathBuf,
    /// Per-run wall-clock limit in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    /// Write an SVG scatter of horizon against time.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Column that colours the plot.
    #[arg(long, value_enum, default_value = "n")]
    color: ColorArg,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Generate(a) => cmd_generate(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::Timeout) => EXIT_TIMEOUT,
        Some(Error::BudgetExceeded(_) | Error::NumericOverflow(_)) => EXIT_BUDGET,
        _ => EXIT_USAGE,
    }
}

fn status_code(status: Status) -> u8 {
    match status {
        Status::Ok => 0,
        Status::Timeout => EXIT_TIMEOUT,
        Status::Budget => EXIT_BUDGET,
    }
}

fn seconds(s: Option<f64>) -> anyhow::Result<Option<Duration>> {
    s.map(|s| Duration::try_from_secs_f64(s).with_context(|| format!("invalid timeout {s}")))
        .transpose()
}

fn load_model(path: &Path) -> anyhow::Result<MultiEnvPomdp> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_model(&text).with_context(|| format!("in {}", path.display()))
}

fn model_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".into())
}

fn print_records(records: &[RunRecord]) -> anyhow::Result<()> {
    write_csv(records, std::io::stdout().lock())?;
    Ok(())
}

fn cmd_solve(a: SolveArgs) -> anyhow::Result<u8> {
    let m = load_model(&a.model)?;
    let algorithm = match a.algorithm {
        AlgorithmArg::Frontier => Algorithm::Frontier,
        AlgorithmArg::Exact => Algorithm::Exact,
        AlgorithmArg::Brute => Algorithm::Brute,
    };
    if a.emit_policy.is_some() && algorithm != Algorithm::Frontier {
        bail!("--emit-policy needs --algorithm frontier");
    }
    let threshold = a
        .threshold
        .as_deref()
        .map(parse_rational)
        .transpose()
        .context("invalid --threshold")?;
    let opts = SolveOptions {
        algorithm,
        exact_arith: a.exact_arith,
        cache: a.cache,
        merge: match a.merge {
            MergeArg::Naive => MergeStrategy::NaiveProduct,
            MergeArg::Incremental => MergeStrategy::Incremental,
        },
        threshold: threshold.clone(),
        epsilon: a.epsilon,
        timeout: seconds(a.timeout)?,
        emit_policy: a.emit_policy.is_some(),
    };
    let (record, outcome) = run(&model_name(&a.model), &m, a.horizon, &opts)?;
    if let Some(out) = &outcome {
        if out.exact.is_some() || out.value.is_some() {
            println!("value: {}", out.render_value());
        }
        if let (Some(v), Some(l)) = (out.verdict, &threshold) {
            println!("threshold {}: {}", format_rational(l), if v { "YES" } else { "NO" });
        }
        if let (Some(policy), Some(path)) = (&out.policy, &a.emit_policy) {
            std::fs::write(path, serde_json::to_string_pretty(policy)?)
                .with_context(|| format!("cannot write {}", path.display()))?;
        }
    } else {
        eprintln!("run stopped: {:?}", record.status);
    }
    print_records(std::slice::from_ref(&record))?;
    Ok(status_code(record.status))
}

fn parse_positions(text: &str) -> anyhow::Result<Vec<(usize, usize)>> {
    text.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (x, y) = p.split_once(',').with_context(|| format!("position {p:?} is not x,y"))?;
            Ok((x.trim().parse()?, y.trim().parse()?))
        })
        .collect()
}

fn cmd_generate(a: GenerateArgs) -> anyhow::Result<u8> {
    let m = match a.family {
        Family::Rocksample { m, g, t, positions, d0 } => gen_rocksample(&RockSampleParams {
            m,
            g,
            t,
            positions: positions.as_deref().map(parse_positions).transpose()?,
            d0,
        })?,
        Family::Robotnav { map, d } => {
            let map = if builtin_map(&map).is_some() {
                map
            } else {
                std::fs::read_to_string(&map).with_context(|| format!("no built-in map or file named {map}"))?
            };
            gen_robotnav(&RobotNavParams { map, d })?
        }
        Family::Iff {
            d1,
            d2,
            v1,
            v2,
            bins,
            friend_visibility,
        } => gen_iff(&IffParams {
            bins,
            d1,
            d2,
            v1,
            v2,
            friend_visibility,
        })?,
        Family::Micro { seed } => gen_micro_suite(&MicroParams::default(), seed, 1)?.remove(0).model,
    };
    let text = write_model(&m);
    match &a.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?,
        None => println!("{text}"),
    }
    let p = m.pomdp();
    let summary = format!(
        "|S|={} |A|={} |O|={} n={}",
        p.num_states(),
        p.num_actions(),
        p.num_observations(),
        m.num_envs()
    );
    if a.out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(0)
}

fn cmd_oracle(a: OracleArgs) -> anyhow::Result<u8> {
    let cases = match &a.model {
        Some(path) => {
            let k = a.horizon.context("--horizon is required with a model file")?;
            vec![oracle_case(&model_name(path), &load_model(path)?, k, a.corrupt_frontier)?]
        }
        None => oracle_suite(
            &gen_micro_suite(&MicroParams::default(), a.seed, a.trials)?,
            a.corrupt_frontier,
        )?,
    };
    let mut worst = None;
    let mut failures = 0usize;
    for c in &cases {
        let d = c.discrepancy();
        if c.frontier != c.brute {
            failures += 1;
            println!(
                "mismatch {} k={}: frontier {} brute {}",
                c.name,
                c.k,
                format_rational(&c.frontier),
                format_rational(&c.brute)
            );
        }
        if worst.as_ref().map_or(true, |w| d > *w) {
            worst = Some(d);
        }
    }
    let worst = worst.map(|w| format_rational(&w)).unwrap_or_else(|| "0".into());
    let verdict = if failures == 0 { "PASS" } else { "FAIL" };
    println!("cases: {}, mismatches: {failures}, max discrepancy: {worst}, {verdict}", cases.len());
    Ok(if failures == 0 { 0 } else { EXIT_MISMATCH })
}

fn threads() -> usize {
    std::env::var("MEPOMDP_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|n: &usize| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn cmd_bench(a: BenchArgs) -> anyhow::Result<u8> {
    let text = std::fs::read_to_string(&a.suite).with_context(|| format!("cannot read {}", a.suite.display()))?;
    let suite = Suite::from_json(&text).with_context(|| format!("in {}", a.suite.display()))?;
    let base = a.suite.parent().unwrap_or(Path::new("."));
    let records = run_suite(&suite, base, seconds(a.timeout)?, threads())?;
    let file = std::fs::File::create(&a.out).with_context(|| format!("cannot write {}", a.out.display()))?;
    write_csv(&records, file)?;
    if let Some(plot) = &a.plot {
        let color = match a.color {
            ColorArg::N => ColorBy::Envs,
            ColorArg::States => ColorBy::States,
        };
        std::fs::write(plot, scatter_svg(&records, color)).with_context(|| format!("cannot write {}", plot.display()))?;
    }
    for r in &records {
        println!("{} k={} {:?} {:.3}s {}", r.model, r.k, r.status, r.time_s, r.value);
    }
    if records.is_empty() || records.iter().any(|r| r.status == Status::Ok) {
        return Ok(0);
    }
    Ok(if records.iter().any(|r| r.status == Status::Timeout) {
        EXIT_TIMEOUT
    } else {
        EXIT_BUDGET
    })
}
