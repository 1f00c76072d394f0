//! Property tests for the model, frontier, exact, mixture and generator
//! invariants on seeded random micro instances.

mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

use common::*;
use mepomdp::bench::{gen_iff, gen_rocksample, IffParams, MicroParams, RockSampleParams};
use mepomdp::exactspace::{
    brute_force_payoffs, denominator_bound, oracle_value, ExactConfig, ExactSolver, GridMode,
};
use mepomdp::frontier::MergeStrategy;
use mepomdp::mixture::{max_min_value, reduce_support, threshold_decide, Mixture};
use mepomdp::model::{expected_payoff, multi_expected_payoff, Belief, MultiBelief};
use mepomdp::{PayoffVector, PolicyTree, Rational, Scalar};

const BUDGET: usize = 10_000_000;

fn params(nonnegative: bool, stochastic: bool) -> MicroParams {
    MicroParams {
        reward_min: if nonnegative { 0 } else { -2 },
        stochastic_observations: stochastic,
        ..MicroParams::default()
    }
}

/// A belief over the states of `weights`, normalized exactly.
fn belief(weights: &[u8], ns: usize) -> Belief<Rational> {
    let entries: Vec<(usize, Rational)> = weights
        .iter()
        .enumerate()
        .take(ns)
        .filter(|(_, w)| **w > 0)
        .map(|(s, w)| (s, Rational::from_integer(i64::from(*w).into())))
        .collect();
    let entries = if entries.is_empty() {
        vec![(0, Rational::one())]
    } else {
        entries
    };
    let total: Rational = entries.iter().map(|(_, w)| w.clone()).sum();
    Belief::from_entries(entries.into_iter().map(|(s, w)| (s, w / &total)))
}

fn f(x: &Rational) -> f64 {
    Scalar::to_f64(x)
}

fn to_f64_belief(b: &Belief<Rational>) -> Belief<f64> {
    Belief::from_entries(b.entries().iter().map(|(s, p)| (*s, f(p))))
}

/// A full policy tree of depth `k` with actions drawn from `choices`.
fn policy_from(choices: &[u8], actions: usize, observations: usize, k: usize, next: &mut usize) -> Arc<PolicyTree> {
    if k == 0 {
        return PolicyTree::leaf();
    }
    let a = choices[*next % choices.len()] as usize % actions;
    *next += 1;
    let branches = (0..observations)
        .map(|o| (o, policy_from(choices, actions, observations, k - 1, next)))
        .collect();
    PolicyTree::node(a, branches)
}

fn points_strategy() -> impl Strategy<Value = Vec<Vec<i32>>> {
    (1usize..=3).prop_flat_map(|n| prop::collection::vec(prop::collection::vec(-8i32..=8, n), 1..=7))
}

fn exact_points(rows: &[Vec<i32>]) -> Vec<PayoffVector<Rational>> {
    rows.iter()
        .map(|r| PayoffVector::from_values(r.iter().map(|v| Rational::new((*v).into(), 4.into())).collect()))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn belief_updates_sum_to_one(seed in any::<u64>(), weights in prop::collection::vec(0u8..4, 6), stochastic in any::<bool>()) {
        let inst = one_micro(&params(false, stochastic), seed);
        let p = inst.model.pomdp();
        let exact = inst.model.kernel::<Rational>().unwrap();
        let float = inst.model.kernel::<f64>().unwrap();
        let b = belief(&weights, p.num_states());
        let bf = to_f64_belief(&b);
        for a in 0..p.num_actions() {
            for o in 0..p.num_observations() {
                if exact.obs_probability(&b, a, o).is_zero() {
                    prop_assert!(exact.belief_update(&b, a, o).is_err());
                    continue;
                }
                prop_assert_eq!(exact.belief_update(&b, a, o).unwrap().total(), Rational::one());
                let f = float.belief_update(&bf, a, o).unwrap();
                prop_assert!((f.total() - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn eliminated_entries_stay_eliminated(seed in any::<u64>(), weights in prop::collection::vec(0u8..4, 6), mask in prop::collection::vec(any::<bool>(), 3)) {
        let inst = one_micro(&params(false, true), seed);
        let p = inst.model.pomdp();
        let kernel = inst.model.kernel::<Rational>().unwrap();
        let mut entries: Vec<Option<Belief<Rational>>> = mask
            .iter()
            .map(|alive| alive.then(|| belief(&weights, p.num_states())))
            .collect();
        entries[0] = Some(belief(&weights, p.num_states()));
        let mb = MultiBelief::new(entries);
        for a in 0..p.num_actions() {
            for o in 0..p.num_observations() {
                if let Ok(next) = kernel.multibelief_update(&mb, a, o) {
                    for (before, after) in mb.entries().iter().zip(next.entries()) {
                        prop_assert!(before.is_some() || after.is_none());
                    }
                }
            }
        }
    }

    #[test]
    fn total_expectation(seed in any::<u64>(), choices in prop::collection::vec(any::<u8>(), 1..20), stochastic in any::<bool>()) {
        let inst = one_micro(&params(false, stochastic), seed);
        let p = inst.model.pomdp();
        let kernel = inst.model.kernel::<Rational>().unwrap();
        let k = inst.horizon;
        let policy = policy_from(&choices, p.num_actions(), p.num_observations(), k, &mut 0);
        let a = policy.action().unwrap();
        for s in 0..p.num_states() {
            let b = Belief::point(s);
            let mut rhs = kernel.reward_expectation(&b);
            for o in 0..p.num_observations() {
                let po = kernel.obs_probability(&b, a, o);
                if po.is_zero() {
                    continue;
                }
                let next = kernel.belief_update(&b, a, o).unwrap();
                let child = policy.child(o).unwrap();
                for (t, pt) in next.entries() {
                    rhs += &po * pt * expected_payoff(p, *t, child, k - 1).unwrap();
                }
            }
            prop_assert_eq!(expected_payoff(p, s, &policy, k).unwrap(), rhs);
        }
    }

    #[test]
    fn observation_encodings_agree(seed in any::<u64>()) {
        let inst = one_micro(&params(false, false), seed);
        let stochastic = inst.model.with_pomdp(inst.model.pomdp().to_stochastic_observations()).unwrap();
        let cfg = config(MergeStrategy::Incremental, false);
        let a = frontier::<Rational>(&inst.model, inst.horizon, cfg.clone());
        let b = frontier::<Rational>(&stochastic, inst.horizon, cfg);
        prop_assert_eq!(key_set(&a), key_set(&b));
        prop_assert_eq!(value(&a), value(&b));
    }

    #[test]
    fn pruning_is_sound(seed in any::<u64>(), stochastic in any::<bool>()) {
        let inst = one_micro(&params(false, stochastic), seed);
        let (m, k) = (&inst.model, inst.horizon);
        let oracle = oracle_value(m, k, BUDGET).unwrap().value;
        let exact = frontier::<Rational>(m, k, config(MergeStrategy::Incremental, false));
        prop_assert_eq!(value(&exact), oracle.clone());
        let float = frontier::<f64>(m, k, config(MergeStrategy::Incremental, false));
        prop_assert!((value(&float) - f(&oracle)).abs() <= 1e-9);
    }

    #[test]
    fn merge_strategies_agree(seed in any::<u64>(), stochastic in any::<bool>()) {
        let inst = one_micro(&params(false, stochastic), seed);
        let (m, k) = (&inst.model, inst.horizon);
        let naive = frontier::<Rational>(m, k, config(MergeStrategy::NaiveProduct, false));
        let inc = frontier::<Rational>(m, k, config(MergeStrategy::Incremental, false));
        prop_assert_eq!(key_set(&naive), key_set(&inc));
        let naive = frontier::<f64>(m, k, config(MergeStrategy::NaiveProduct, false));
        let inc = frontier::<f64>(m, k, config(MergeStrategy::Incremental, false));
        prop_assert!(approx_set_eq(&naive, &inc, 1e-9));
    }

    #[test]
    fn frontiers_are_mutually_non_dominated(seed in any::<u64>(), stochastic in any::<bool>()) {
        let inst = one_micro(&params(false, stochastic), seed);
        let (m, k) = (&inst.model, inst.horizon);
        for merge in [MergeStrategy::NaiveProduct, MergeStrategy::Incremental] {
            prop_assert!(mutually_non_dominated(&frontier::<Rational>(m, k, config(merge, false)), 0.0));
            prop_assert!(mutually_non_dominated(&frontier::<f64>(m, k, config(merge, false)), 1e-9));
        }
    }

    #[test]
    fn value_grows_with_the_horizon(seed in any::<u64>(), stochastic in any::<bool>()) {
        let inst = one_micro(&params(true, stochastic), seed);
        let m = &inst.model;
        let mut prev_exact: Option<Rational> = None;
        let mut prev_float: Option<f64> = None;
        for k in 0..=3 {
            let e = value(&frontier::<Rational>(m, k, config(MergeStrategy::Incremental, false)));
            let f = value(&frontier::<f64>(m, k, config(MergeStrategy::Incremental, false)));
            if let (Some(pe), Some(pf)) = (&prev_exact, prev_float) {
                prop_assert!(e >= *pe);
                prop_assert!(f >= pf - 1e-9);
            }
            prev_exact = Some(e);
            prev_float = Some(f);
        }
    }

    #[test]
    fn memoization_is_transparent(seed in any::<u64>(), stochastic in any::<bool>()) {
        let inst = one_micro(&params(false, stochastic), seed);
        let (m, k) = (&inst.model, inst.horizon);
        let off = frontier::<Rational>(m, k, config(MergeStrategy::Incremental, false));
        let on = frontier::<Rational>(m, k, config(MergeStrategy::Incremental, true));
        prop_assert_eq!(key_set(&off), key_set(&on));
        let off = frontier::<f64>(m, k, config(MergeStrategy::Incremental, false));
        let on = frontier::<f64>(m, k, config(MergeStrategy::Incremental, true));
        prop_assert!(approx_set_eq(&off, &on, 1e-9));
    }

    #[test]
    fn brute_force_denominators_divide_the_bound(seed in any::<u64>(), stochastic in any::<bool>()) {
        let inst = one_micro(&params(false, stochastic), seed);
        let (m, k) = (&inst.model, inst.horizon);
        let bound = denominator_bound(m, k);
        for p in brute_force_payoffs::<Rational>(m, &m.initial_multibelief(), k, BUDGET).unwrap() {
            for c in p.values().unwrap() {
                prop_assert!((&bound.script_c % c.denom()).is_zero());
            }
        }
    }

    #[test]
    fn lp_certificate(rows in points_strategy()) {
        let points = exact_points(&rows);
        let r = max_min_value(&points).unwrap();
        let total: Rational = r.mixture.components.iter().map(|(w, _)| w.clone()).sum();
        prop_assert_eq!(total, Rational::one());
        prop_assert!(r.mixture.components.iter().all(|(w, _)| w.is_positive()));
        // primal: the mixture guarantees the value everywhere
        prop_assert!(r.guarantees.iter().all(|g| *g >= r.value));
        // dual: against the adversary no point pays more than the value
        let qsum: Rational = r.adversary.iter().cloned().sum();
        prop_assert_eq!(qsum, Rational::one());
        prop_assert!(r.adversary.iter().all(|q| !q.is_negative()));
        for p in &points {
            let pay: Rational = p.values().unwrap().iter().zip(&r.adversary).map(|(x, q)| x * q).sum();
            prop_assert!(pay <= r.value);
        }
        // float mode agrees
        let fp: Vec<PayoffVector<f64>> = rows
            .iter()
            .map(|r| PayoffVector::from_values(r.iter().map(|v| f64::from(*v) / 4.0).collect()))
            .collect();
        prop_assert!((max_min_value(&fp).unwrap().value - f(&r.value)).abs() <= 1e-9);
    }

    #[test]
    fn support_reduction(rows in points_strategy(), weights in prop::collection::vec(1u8..5, 7)) {
        let points = exact_points(&rows);
        let n = points[0].len();
        let total: i64 = weights.iter().take(points.len()).map(|w| i64::from(*w)).sum();
        let mix = Mixture {
            components: points
                .iter()
                .zip(&weights)
                .map(|(p, w)| (Rational::new(i64::from(*w).into(), total.into()), p.clone()))
                .collect(),
        };
        let reduced = reduce_support(&mix).unwrap();
        prop_assert!(reduced.len() <= n);
        prop_assert!(reduced.guarantee().unwrap() >= mix.guarantee().unwrap());
    }

    #[test]
    fn threshold_matches_value(rows in points_strategy(), num in -40i64..40) {
        let points = exact_points(&rows);
        let v = max_min_value(&points).unwrap().value;
        let step = Rational::new(1.into(), 7.into());
        for lambda in [v.clone(), &v + &step, &v - &step, Rational::new(num.into(), 8.into())] {
            prop_assert_eq!(threshold_decide(&points, &lambda, None).unwrap(), v >= lambda);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mixed_policies_are_linear(seed in any::<u64>()) {
        let inst = one_micro(&params(false, true), seed);
        let (m, k) = (&inst.model, inst.horizon);
        let cfg = mepomdp::frontier::FrontierConfig::default();
        let points = frontier::<Rational>(m, k, cfg);
        let r = max_min_value(&points).unwrap();
        let mut sum = vec![Rational::zero(); m.num_envs()];
        for (w, p) in &r.mixture.components {
            let tree = p.policy.as_ref().unwrap();
            let mep = multi_expected_payoff(m, tree, k).unwrap();
            prop_assert_eq!(&mep, &p.values().unwrap());
            for (s, x) in sum.iter_mut().zip(&mep) {
                *s += w * x;
            }
        }
        prop_assert_eq!(sum, r.guarantees);
    }

    #[test]
    fn achievability_matches_brute_force(seed in any::<u64>()) {
        let p = MicroParams { max_den: 2, max_envs: 2, max_horizon: 2, max_states: 4, reward_min: -1, reward_max: 1, ..MicroParams::default() };
        let inst = one_micro(&p, seed);
        let (m, k) = (&inst.model, inst.horizon);
        let bound = denominator_bound(m, k);
        let brute: BTreeSet<Vec<Rational>> = brute_force_payoffs::<Rational>(m, &m.initial_multibelief(), k, BUDGET)
            .unwrap()
            .iter()
            .map(|p| p.values().unwrap())
            .collect();
        let solver = ExactSolver::new(m, k, ExactConfig::default()).unwrap();
        let grid = solver.root_grid();
        prop_assert!(grid.iter().all(|x| bound.on_grid(x)));
        let n = m.num_envs();
        let mut idx = vec![0usize; n];
        loop {
            let x: Vec<Rational> = idx.iter().map(|&i| grid[i].clone()).collect();
            let got = solver.check_achievable_value(&PayoffVector::from_values(x.clone())).unwrap();
            prop_assert_eq!(got, brute.contains(&x), "x = {:?}", x);
            let mut d = 0;
            while d < n {
                idx[d] += 1;
                if idx[d] < grid.len() { break; }
                idx[d] = 0;
                d += 1;
            }
            if d == n { break; }
        }
    }

    #[test]
    fn exact_threshold_matches_oracle(seed in any::<u64>()) {
        let p = MicroParams { max_den: 2, max_envs: 2, max_horizon: 2, max_states: 4, reward_min: -1, reward_max: 1, ..MicroParams::default() };
        let inst = one_micro(&p, seed);
        let (m, k) = (&inst.model, inst.horizon);
        let v = oracle_value(m, k, BUDGET).unwrap().value;
        let solver = ExactSolver::new(m, k, ExactConfig::default()).unwrap();
        let half = solver.unit() / Rational::from_integer(2.into());
        for lambda in [v.clone(), &v + &half, &v - &half] {
            prop_assert_eq!(solver.solve(&lambda).unwrap(), v >= lambda);
        }
        prop_assert_eq!(solver.value().unwrap().value, v);
    }

    #[test]
    fn policy_enumeration_matches_brute_force(seed in any::<u64>(), stochastic in any::<bool>()) {
        let inst = one_micro(&params(false, stochastic), seed);
        let (m, k) = (&inst.model, inst.horizon);
        let brute: BTreeSet<Vec<Rational>> = brute_force_payoffs::<Rational>(m, &m.initial_multibelief(), k, BUDGET)
            .unwrap()
            .iter()
            .map(|p| p.values().unwrap())
            .collect();
        prop_assert_eq!(brute, enumerated_payoffs(m, k));
    }
}

#[test]
fn fast_and_faithful_exact_modes_agree() {
    let p = MicroParams {
        max_den: 2,
        max_envs: 1,
        max_horizon: 2,
        max_states: 4,
        ..MicroParams::default()
    };
    for seed in 0..8 {
        let inst = one_micro(&p, seed);
        let (m, k) = (&inst.model, inst.horizon);
        let fast = ExactSolver::new(m, k, ExactConfig::default()).unwrap();
        let slow = ExactSolver::new(
            m,
            k,
            ExactConfig {
                reward_bounds: false,
                direct_last: false,
                grid: GridMode::ReachScaled,
                ..ExactConfig::default()
            },
        )
        .unwrap();
        for x in fast.root_grid() {
            let x = PayoffVector::from_values(vec![x]);
            assert_eq!(
                fast.check_achievable_value(&x).unwrap(),
                slow.check_achievable_value(&x).unwrap()
            );
        }
    }
}

#[test]
fn generated_models_validate() {
    for (m, g, t) in [(3, 1, 2), (3, 1, 3), (3, 1, 4), (3, 1, 5), (3, 2, 5), (3, 2, 7), (3, 4, 7), (3, 1, 7)] {
        let model = gen_rocksample(&RockSampleParams::new(m, g, t)).unwrap();
        assert!(model.violations().is_empty());
    }
    for (d1, d2) in [(0, 1), (1, 2), (1, 3), (3, 4)] {
        for v in 0..5 {
            let model = gen_iff(&IffParams::new(d1, d2, v, 4 - v)).unwrap();
            assert!(model.violations().is_empty());
            let p = model.pomdp();
            for s in 0..p.num_states() {
                for a in 0..p.num_actions() {
                    let total: Rational = p.transition(s, a).iter().map(|(_, q)| q.clone()).sum();
                    assert_eq!(total, Rational::one());
                }
            }
        }
    }
}

#[test]
fn exact_and_float_runs_agree_on_the_micro_suite() {
    for inst in micro_suite().iter().take(60) {
        let (m, k) = (&inst.model, inst.horizon);
        let e = value(&frontier::<Rational>(m, k, config(MergeStrategy::Incremental, false)));
        let x = value(&frontier::<f64>(m, k, config(MergeStrategy::Incremental, false)));
        assert!((f(&e) - x).abs() <= 1e-9, "{}", inst.name);
    }
}

