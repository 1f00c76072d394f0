//! Experiment plumbing shared by the command line: solver dispatch, run
//! records, suite files, CSV output, the scatter plot and the oracle
//! comparison.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::{GeneratorSpec, MicroInstance};
use crate::error::{Error, Result};
use crate::exactspace::{oracle_value, ExactConfig, ExactSolver};
use crate::frontier::{FrontierConfig, FrontierSolver, MergeStrategy};
use crate::mixture::{assemble_policy, max_min_value, reduce_support, MixedPolicy};
use crate::model::{parse_model, MultiEnvPomdp};
use crate::scalar::{format_rational, Rational, Scalar};

/// Largest number of payoff vectors the brute-force oracle may enumerate.
pub const BRUTE_FORCE_BUDGET: usize = 10_000_000;

/// CSV columns, in order.
pub const CSV_HEADER: [&str; 10] = ["model", "S", "A", "O", "n", "k", "algorithm", "time_s", "value", "status"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    #[default]
    Frontier,
    Exact,
    Brute,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Frontier => "frontier",
            Self::Exact => "exact",
            Self::Brute => "brute",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    pub algorithm: Algorithm,
    /// Rational arithmetic for the frontier algorithm; the other two are
    /// always exact.
    pub exact_arith: bool,
    pub cache: bool,
    pub merge: MergeStrategy,
    pub threshold: Option<Rational>,
    pub epsilon: Option<f64>,
    pub timeout: Option<Duration>,
    /// Build a mixed-policy document (frontier only).
    pub emit_policy: bool,
}

/// Result of one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    /// Exact value when the run was exact.
    pub exact: Option<Rational>,
    pub value: Option<f64>,
    /// Threshold verdict when a threshold was given.
    pub verdict: Option<bool>,
    pub policy: Option<MixedPolicy>,
}

impl SolveOutcome {
    /// The value as printed: exact decimal or `p/q` when exact, else a
    /// float.
    pub fn render_value(&self) -> String {
        match (&self.exact, self.value) {
            (Some(q), _) => format_rational(q),
            (None, Some(v)) => format!("{v}"),
            (None, None) => String::new(),
        }
    }
}

/// Runs the selected algorithm at horizon `k` from the initial states.
pub fn solve(m: &MultiEnvPomdp, k: usize, opts: &SolveOptions) -> Result<SolveOutcome> {
    let deadline = opts.timeout.map(|t| Instant::now() + t);
    match opts.algorithm {
        Algorithm::Frontier if opts.exact_arith => solve_frontier::<Rational>(m, k, opts, deadline),
        Algorithm::Frontier => solve_frontier::<f64>(m, k, opts, deadline),
        Algorithm::Exact => {
            let cfg = ExactConfig {
                deadline,
                ..ExactConfig::default()
            };
            let solver = ExactSolver::new(m, k, cfg)?;
            match &opts.threshold {
                Some(lambda) => Ok(SolveOutcome {
                    exact: None,
                    value: None,
                    verdict: Some(solver.solve(lambda)?),
                    policy: None,
                }),
                None => Ok(exact_outcome(solver.value()?.value, None)),
            }
        }
        Algorithm::Brute => {
            let v = oracle_value(m, k, BRUTE_FORCE_BUDGET)?.value;
            let verdict = opts.threshold.as_ref().map(|l| v >= *l);
            Ok(exact_outcome(v, verdict))
        }
    }
}

fn exact_outcome(v: Rational, verdict: Option<bool>) -> SolveOutcome {
    SolveOutcome {
        value: Some(v.to_f64()),
        exact: Some(v),
        verdict,
        policy: None,
    }
}

fn solve_frontier<N: Scalar>(
    m: &MultiEnvPomdp,
    k: usize,
    opts: &SolveOptions,
    deadline: Option<Instant>,
) -> Result<SolveOutcome> {
    let cfg = FrontierConfig {
        memoize: opts.cache,
        merge: opts.merge,
        track_policies: opts.emit_policy,
        deadline,
        ..FrontierConfig::default()
    };
    let frontier = FrontierSolver::<N>::new(m, cfg)?.build_initial(k)?;
    let result = max_min_value(frontier.points())?;
    let verdict = match &opts.threshold {
        Some(lambda) => {
            let lambda = N::from_rational(lambda)
                .ok_or_else(|| Error::Number(format_rational(lambda)))?;
            let tol = opts.epsilon.map_or(crate::scalar::DEFAULT_TOLERANCE, |e| e / 2.0);
            Some(result.value.at_least(&lambda, tol))
        }
        None => None,
    };
    let policy = if opts.emit_policy {
        Some(assemble_policy(&reduce_support(&result.mixture)?, m.pomdp())?)
    } else {
        None
    };
    Ok(SolveOutcome {
        exact: N::EXACT.then(|| result.value.to_rational()),
        value: Some(result.value.to_f64()),
        verdict,
        policy,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Timeout,
    Budget,
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub model: String,
    /// States reachable within the horizon.
    #[serde(rename = "S")]
    pub states: usize,
    #[serde(rename = "A")]
    pub actions: usize,
    #[serde(rename = "O")]
    pub observations: usize,
    pub n: usize,
    pub k: usize,
    pub algorithm: Algorithm,
    pub time_s: f64,
    /// Empty unless the run finished.
    pub value: String,
    pub status: Status,
}

/// Solves and records; deadline and budget failures become statuses.
pub fn run(name: &str, m: &MultiEnvPomdp, k: usize, opts: &SolveOptions) -> Result<(RunRecord, Option<SolveOutcome>)> {
    let start = Instant::now();
    let result = solve(m, k, opts);
    let time_s = start.elapsed().as_secs_f64();
    let (status, outcome) = match result {
        Ok(o) => (Status::Ok, Some(o)),
        Err(Error::Timeout) => (Status::Timeout, None),
        Err(Error::BudgetExceeded(_) | Error::NumericOverflow(_)) => (Status::Budget, None),
        Err(e) => return Err(e),
    };
    let record = RunRecord {
        model: name.to_string(),
        states: m.reachable_states(k),
        actions: m.pomdp().num_actions(),
        observations: m.pomdp().num_observations(),
        n: m.num_envs(),
        k,
        algorithm: opts.algorithm,
        time_s,
        value: outcome.as_ref().map(SolveOutcome::render_value).unwrap_or_default(),
        status,
    };
    Ok((record, outcome))
}

/// Writes the header and `records` as CSV.
pub fn write_csv<W: Write>(records: &[RunRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|x| x.map_err(Error::from)).collect()
}

/// Suite file: a list of runs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    pub runs: Vec<SuiteEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteEntry {
    /// Generator to build the model from; exclusive with `model`.
    #[serde(default)]
    pub generator: Option<GeneratorSpec>,
    /// Model file, relative to the suite file; exclusive with `generator`.
    #[serde(default)]
    pub model: Option<PathBuf>,
    /// Label for the CSV; defaults to the generator or file name.
    #[serde(default)]
    pub name: Option<String>,
    pub horizons: Vec<usize>,
    #[serde(default)]
    pub algorithm: Algorithm,
    #[serde(default)]
    pub exact_arith: bool,
    #[serde(default)]
    pub cache: bool,
}

impl Suite {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::MalformedDocument {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }
}

impl SuiteEntry {
    fn load(&self, base: &Path) -> Result<(String, MultiEnvPomdp)> {
        let (default_name, model) = match (&self.generator, &self.model) {
            (Some(g), None) => (g.name(), g.generate()?),
            (None, Some(path)) => {
                let path = base.join(path);
                let text = std::fs::read_to_string(&path)?;
                let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned());
                (stem.unwrap_or_else(|| "model".into()), parse_model(&text)?)
            }
            _ => {
                return Err(Error::InvalidParams(
                    "each suite run needs exactly one of generator and model".into(),
                ))
            }
        };
        Ok((self.name.clone().unwrap_or(default_name), model))
    }
}

/// Runs every (entry, horizon) pair on up to `threads` workers. Records
/// come back in suite order.
pub fn run_suite(suite: &Suite, base: &Path, timeout: Option<Duration>, threads: usize) -> Result<Vec<RunRecord>> {
    let mut jobs = Vec::new();
    for entry in &suite.runs {
        let (name, model) = entry.load(base)?;
        let opts = SolveOptions {
            algorithm: entry.algorithm,
            exact_arith: entry.exact_arith,
            cache: entry.cache,
            timeout,
            ..SolveOptions::default()
        };
        for &k in &entry.horizons {
            jobs.push((name.clone(), model.clone(), k, opts.clone()));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidParams(e.to_string()))?;
    pool.install(|| {
        jobs.par_iter()
            .map(|(name, m, k, opts)| run(name, m, *k, opts).map(|(r, _)| r))
            .collect()
    })
}

/// Column that colours the scatter points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ColorBy {
    #[default]
    Envs,
    States,
}

const PALETTE: [&str; 8] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666"];

/// Horizon against computation time on a log axis, one point per finished
/// run.
pub fn scatter_svg(records: &[RunRecord], color: ColorBy) -> String {
    let (w, h, left, right, top, bottom) = (640.0, 420.0, 70.0, 130.0, 20.0, 50.0);
    let pts: Vec<&RunRecord> = records.iter().filter(|r| r.status == Status::Ok).collect();
    let key = |r: &RunRecord| match color {
        ColorBy::Envs => r.n,
        ColorBy::States => r.states,
    };
    let mut keys: Vec<usize> = pts.iter().map(|r| key(r)).collect();
    keys.sort_unstable();
    keys.dedup();

    let kmin = pts.iter().map(|r| r.k).min().unwrap_or(0) as f64;
    let kmax = pts.iter().map(|r| r.k).max().unwrap_or(1).max(kmin as usize + 1) as f64;
    let log = |t: f64| t.max(1e-6).log10();
    let lo = pts.iter().map(|r| log(r.time_s)).fold(f64::INFINITY, f64::min).floor();
    let hi = pts.iter().map(|r| log(r.time_s)).fold(f64::NEG_INFINITY, f64::max).ceil();
    let (lo, hi) = if lo.is_finite() { (lo, hi.max(lo + 1.0)) } else { (-3.0, 0.0) };
    let px = |k: f64| left + (k - kmin) / (kmax - kmin) * (w - left - right);
    let py = |t: f64| top + (hi - log(t)) / (hi - lo) * (h - top - bottom);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let (x0, x1, y0, y1) = (left, w - right, top, h - bottom);
    let _ = writeln!(s, r#"<path d="M{x0},{y0} V{y1} H{x1}" stroke="black" fill="none"/>"#);
    for k in kmin as usize..=kmax as usize {
        let x = px(k as f64);
        let _ = writeln!(s, r#"<line x1="{x}" y1="{y1}" x2="{x}" y2="{}" stroke="black"/>"#, y1 + 5.0);
        let _ = writeln!(s, r#"<text x="{x}" y="{}" text-anchor="middle">{k}</text>"#, y1 + 18.0);
    }
    for e in lo as i32..=hi as i32 {
        let y = py(10f64.powi(e));
        let _ = writeln!(s, r#"<line x1="{}" y1="{y}" x2="{x0}" y2="{y}" stroke="black"/>"#, x0 - 5.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">1e{e}</text>"#, x0 - 8.0, y + 4.0);
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">horizon</text>"#,
        (x0 + x1) / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{y}" text-anchor="middle" transform="rotate(-90 16 {y})">time (s)</text>"#,
        y = (y0 + y1) / 2.0
    );
    let colour = |v: usize| PALETTE[keys.iter().position(|x| *x == v).unwrap_or(0) % PALETTE.len()];
    for r in &pts {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{}"><title>{} k={} {:.4}s</title></circle>"#,
            px(r.k as f64),
            py(r.time_s),
            colour(key(r)),
            r.model,
            r.k,
            r.time_s
        );
    }
    let label = match color {
        ColorBy::Envs => "n",
        ColorBy::States => "|S|",
    };
    let _ = writeln!(s, r#"<text x="{}" y="{}">{label}</text>"#, x1 + 20.0, y0 + 10.0);
    for (i, v) in keys.iter().enumerate() {
        let y = y0 + 30.0 + 18.0 * i as f64;
        let _ = writeln!(s, r#"<circle cx="{}" cy="{}" r="4" fill="{}"/>"#, x1 + 24.0, y - 4.0, colour(*v));
        let _ = writeln!(s, r#"<text x="{}" y="{y}">{v}</text>"#, x1 + 34.0);
    }
    s.push_str("</svg>\n");
    s
}

/// Frontier and brute-force values of one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCase {
    pub name: String,
    pub k: usize,
    pub frontier: Rational,
    pub brute: Rational,
}

impl OracleCase {
    pub fn discrepancy(&self) -> Rational {
        num_traits::Signed::abs(&(&self.frontier - &self.brute))
    }
}

/// Compares the exact frontier value with the brute-force oracle.
/// `corrupt` shifts the frontier value by one, as a negative control.
pub fn oracle_case(name: &str, m: &MultiEnvPomdp, k: usize, corrupt: bool) -> Result<OracleCase> {
    let frontier = FrontierSolver::<Rational>::new(
        m,
        FrontierConfig {
            track_policies: false,
            ..FrontierConfig::default()
        },
    )?
    .build_initial(k)?;
    let mut value = max_min_value(frontier.points())?.value;
    if corrupt {
        value += Rational::from_integer(1.into());
    }
    Ok(OracleCase {
        name: name.to_string(),
        k,
        frontier: value,
        brute: oracle_value(m, k, BRUTE_FORCE_BUDGET)?.value,
    })
}

/// Oracle comparison over a generated micro suite.
pub fn oracle_suite(instances: &[MicroInstance], corrupt: bool) -> Result<Vec<OracleCase>> {
    instances
        .iter()
        .map(|i| oracle_case(&i.name, &i.model, i.horizon, corrupt))
        .collect()
}
