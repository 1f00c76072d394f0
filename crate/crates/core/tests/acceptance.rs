//! Acceptance suite: prints one `criterion N: PASS|FAIL` line per criterion
//! and exits nonzero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::Zero;

use common::*;
use mepomdp::bench::{
    fork_example, gen_iff, gen_robotnav, gen_rocksample, IffParams, MicroInstance, MicroParams, RobotNavParams,
    RockSampleParams,
};
use mepomdp::exactspace::{brute_force_payoffs, denominator_bound, oracle_value, solve_exactspace};
use mepomdp::frontier::{FrontierConfig, MergeStrategy};
use mepomdp::harness::{solve, SolveOptions};
use mepomdp::mixture::{best_deterministic, max_min_value};
use mepomdp::{MultiEnvPomdp, Rational, Scalar};

/// Float agreement tolerance.
const FLOAT_TOL: f64 = 1e-9;
const FORK_LIMIT: Duration = Duration::from_secs(1);
const ORACLE_LIMIT: Duration = Duration::from_secs(60);
const EXACTSPACE_LIMIT: Duration = Duration::from_secs(120);
/// Required growth of solve time per horizon step beyond `k = 3`.
const GROWTH: f64 = 2.0;
/// Repetitions per horizon; the fastest is kept.
const TIMING_REPS: usize = 3;
const BUDGET: usize = 10_000_000;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let m = fork_example();
    let cfg = FrontierConfig::default();
    let exact = frontier::<Rational>(&m, 1, cfg.clone());
    let r = max_min_value(&exact).map_err(|e| e.to_string())?;
    check(r.value == q("3/4"), || format!("exact value {}", r.value))?;
    let names: Vec<(Rational, String)> = r
        .mixture
        .components
        .iter()
        .map(|(w, p)| {
            let a = p.policy.as_ref().and_then(|t| t.action()).expect("annotated policy");
            (w.clone(), m.pomdp().actions()[a].clone())
        })
        .collect();
    check(
        names == vec![(q("1/2"), "c".to_string()), (q("1/2"), "d".to_string())],
        || format!("mixture {names:?}"),
    )?;
    let (det, _) = best_deterministic(&exact).map_err(|e| e.to_string())?;
    check(det == q("3/5"), || format!("deterministic value {det}"))?;
    let float = value(&frontier::<f64>(&m, 1, cfg));
    check((float - 0.75).abs() <= FLOAT_TOL, || format!("float value {float}"))?;
    let elapsed = start.elapsed();
    check(elapsed < FORK_LIMIT, || format!("took {elapsed:?}"))?;
    Ok(format!("value 3/4, mixture 1/2 c + 1/2 d, deterministic 3/5, {elapsed:.2?}"))
}

fn criterion_2(suite: &[MicroInstance]) -> Outcome {
    let start = Instant::now();
    for inst in suite {
        let (m, k) = (&inst.model, inst.horizon);
        let f = value(&frontier::<Rational>(m, k, config(MergeStrategy::Incremental, false)));
        let b = oracle_value(m, k, BUDGET).map_err(|e| format!("{}: {e}", inst.name))?.value;
        check(f == b, || format!("{}: frontier {f} vs brute force {b}", inst.name))?;
    }
    let elapsed = start.elapsed();
    check(elapsed < ORACLE_LIMIT, || format!("took {elapsed:?}"))?;
    Ok(format!("{} instances equal, {elapsed:.2?}", suite.len()))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let p = MicroParams {
        max_den: 2,
        max_envs: 1,
        max_horizon: 2,
        reward_min: -1,
        reward_max: 1,
        ..MicroParams::default()
    };
    let suite = mepomdp::bench::gen_micro_suite(&p, SUITE_SEED, 25).map_err(|e| e.to_string())?;
    let mut decisions = 0usize;
    for inst in &suite {
        let (m, k) = (&inst.model, inst.horizon);
        let bound = denominator_bound(m, k);
        check(bound.c <= BigInt::from(2), || format!("{}: C = {}", inst.name, bound.c))?;
        let v = oracle_value(m, k, BUDGET).map_err(|e| e.to_string())?.value;
        let unit = Rational::new(1.into(), bound.script_c.clone());
        let half = &unit / Rational::from_integer(2.into());
        let top = bound.max_numerator();
        let mut i = -top.clone();
        while i <= top {
            let g = Rational::from_integer(i.clone()) * &unit;
            for lambda in [&g - &half, g.clone(), &g + &half] {
                let got = solve_exactspace(m, k, &lambda).map_err(|e| format!("{}: {e}", inst.name))?;
                check(got == (v >= lambda), || {
                    format!("{}: verdict {got} at {lambda}, value {v}", inst.name)
                })?;
                decisions += 1;
            }
            i += 1;
        }
    }
    let elapsed = start.elapsed();
    check(elapsed < EXACTSPACE_LIMIT, || format!("took {elapsed:?}"))?;
    Ok(format!("{decisions} verdicts on 25 instances, {elapsed:.2?}"))
}

fn criterion_4(suite: &[MicroInstance]) -> Outcome {
    for inst in suite {
        let (m, k) = (&inst.model, inst.horizon);
        let naive = frontier::<Rational>(m, k, config(MergeStrategy::NaiveProduct, false));
        let inc = frontier::<Rational>(m, k, config(MergeStrategy::Incremental, false));
        check(key_set(&naive) == key_set(&inc), || format!("{}: frontiers differ", inst.name))?;
    }
    Ok(format!("{} instances set-equal", suite.len()))
}

fn shape(m: &MultiEnvPomdp) -> (usize, usize, usize) {
    (m.pomdp().num_actions(), m.pomdp().num_observations(), m.num_envs())
}

fn criterion_5() -> Outcome {
    let err = |e: mepomdp::Error| e.to_string();
    let rs = |m, g, t| gen_rocksample(&RockSampleParams::new(m, g, t)).map(|x| shape(&x));
    let got = [
        ("RS_3_1_2", rs(3, 1, 2).map_err(err)?, (7, 3, 2)),
        ("RS_3_2_7", rs(3, 2, 7).map_err(err)?, (12, 3, 21)),
        ("RS_3_4_7", rs(3, 4, 7).map_err(err)?, (12, 3, 35)),
        (
            "RN_synth1_3",
            shape(&gen_robotnav(&RobotNavParams { map: "synth1".into(), d: 3 }).map_err(err)?),
            (4, 28, 2),
        ),
        ("IFF_1_2_2_4", shape(&gen_iff(&IffParams::new(1, 2, 2, 4)).map_err(err)?), (4, 22, 3)),
    ];
    for (name, have, want) in &got {
        check(have == want, || format!("{name}: {have:?}, expected {want:?}"))?;
    }
    Ok("RS_3_1_2, RS_3_2_7, RS_3_4_7, robotnav and IFF shapes match".into())
}

fn criterion_6(suite: &[MicroInstance]) -> Outcome {
    let mut coords = 0usize;
    for inst in suite {
        let (m, k) = (&inst.model, inst.horizon);
        let script_c = denominator_bound(m, k).script_c;
        let pts = brute_force_payoffs::<Rational>(m, &m.initial_multibelief(), k, BUDGET).map_err(|e| e.to_string())?;
        for p in &pts {
            for c in p.coords.iter().flatten() {
                check((&script_c % c.denom()).is_zero(), || {
                    format!("{}: denominator {} does not divide {script_c}", inst.name, c.denom())
                })?;
                coords += 1;
            }
        }
    }
    Ok(format!("{coords} coordinates checked"))
}

fn criterion_7() -> Outcome {
    let m = gen_rocksample(&RockSampleParams::new(3, 1, 2)).map_err(|e| e.to_string())?;
    let opts = SolveOptions::default();
    let mut times = Vec::new();
    for k in 1..=5 {
        let mut best = f64::INFINITY;
        for _ in 0..TIMING_REPS {
            let start = Instant::now();
            solve(&m, k, &opts).map_err(|e| e.to_string())?;
            best = best.min(start.elapsed().as_secs_f64());
        }
        times.push(best);
    }
    let shown: Vec<String> = times.iter().map(|t| format!("{t:.4}s")).collect();
    for k in 4..=5 {
        let ratio = times[k - 1] / times[k - 2];
        check(ratio >= GROWTH, || format!("k={k} only {ratio:.2}x k={}; times {shown:?}", k - 1))?;
    }
    Ok(format!("times k=1..5: {}", shown.join(", ")))
}

fn frontier_invariants<N: Scalar>(inst: &MicroInstance, tol: f64) -> Result<(), String> {
    let (m, k) = (&inst.model, inst.horizon);
    let name = &inst.name;
    let inc = frontier::<N>(m, k, config(MergeStrategy::Incremental, false));
    // 1: pruning loses no value
    let brute = brute_force_payoffs::<N>(m, &m.initial_multibelief(), k, BUDGET).map_err(|e| e.to_string())?;
    let (a, b) = (value(&inc), value(&brute));
    check(a.close_to(&b, tol), || format!("{name}: pruned {a:?} vs unpruned {b:?}"))?;
    // 2: merge strategies agree
    let naive = frontier::<N>(m, k, config(MergeStrategy::NaiveProduct, false));
    check(approx_set_eq(&naive, &inc, tol), || format!("{name}: merge strategies differ"))?;
    // 3: no point dominates another
    check(mutually_non_dominated(&inc, tol), || format!("{name}: dominated point kept"))?;
    // 5: memoization changes nothing
    let memo = frontier::<N>(m, k, config(MergeStrategy::Incremental, true));
    check(approx_set_eq(&memo, &inc, tol), || format!("{name}: memoized frontier differs"))?;
    Ok(())
}

fn monotone<N: Scalar>(inst: &MicroInstance, tol: f64) -> Result<(), String> {
    let m = &inst.model;
    let values: Vec<N> = (0..=3)
        .map(|k| value(&frontier::<N>(m, k, config(MergeStrategy::Incremental, false))))
        .collect();
    check(values.windows(2).all(|w| w[1].at_least(&w[0], tol)), || {
        format!("{}: values {values:?} decrease", inst.name)
    })
}

fn criterion_8(suite: &[MicroInstance]) -> Outcome {
    for inst in suite {
        frontier_invariants::<Rational>(inst, 0.0)?;
        frontier_invariants::<f64>(inst, FLOAT_TOL)?;
    }
    let nonnegative = MicroParams {
        reward_min: 0,
        ..MicroParams::default()
    };
    let positive_suite = mepomdp::bench::gen_micro_suite(&nonnegative, SUITE_SEED, 50).map_err(|e| e.to_string())?;
    for inst in &positive_suite {
        monotone::<Rational>(inst, 0.0)?;
        monotone::<f64>(inst, FLOAT_TOL)?;
    }
    Ok(format!(
        "{} instances for invariants 1-3 and 5, {} for monotonicity, both numeric modes",
        suite.len(),
        positive_suite.len()
    ))
}

fn run(n: usize, f: impl FnOnce() -> Outcome) -> bool {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(format!("panicked: {msg}"))
    });
    match outcome {
        Ok(detail) => {
            println!("criterion {n}: PASS ({detail})");
            true
        }
        Err(detail) => {
            println!("criterion {n}: FAIL ({detail})");
            false
        }
    }
}

fn main() -> ExitCode {
    let suite = micro_suite();
    let results = [
        run(1, criterion_1),
        run(2, || criterion_2(&suite)),
        run(3, criterion_3),
        run(4, || criterion_4(&suite)),
        run(5, criterion_5),
        run(6, || criterion_6(&suite)),
        run(7, criterion_7),
        run(8, || criterion_8(&suite)),
    ];
    if results.iter().all(|ok| *ok) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
