//! Helpers shared by the integration tests and the acceptance suite.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use mepomdp::bench::{gen_micro_suite, MicroInstance, MicroParams};
use mepomdp::frontier::{dominates, FrontierConfig, FrontierSolver, MergeStrategy};
use mepomdp::mixture::max_min_value;
use mepomdp::model::multi_expected_payoff;
use mepomdp::scalar::ScalarKey;
use mepomdp::{MultiEnvPomdp, PayoffVector, PolicyTree, Rational, Scalar};

/// Seed of the shared random micro suite.
pub const SUITE_SEED: u64 = 2024;
pub const SUITE_SIZE: usize = 200;

pub fn micro_suite() -> Vec<MicroInstance> {
    gen_micro_suite(&MicroParams::default(), SUITE_SEED, SUITE_SIZE).expect("micro suite")
}

pub fn one_micro(params: &MicroParams, seed: u64) -> MicroInstance {
    gen_micro_suite(params, seed, 1).expect("micro instance").remove(0)
}

pub fn config(merge: MergeStrategy, memoize: bool) -> FrontierConfig {
    FrontierConfig {
        merge,
        memoize,
        track_policies: false,
        ..FrontierConfig::default()
    }
}

pub fn frontier<N: Scalar>(m: &MultiEnvPomdp, k: usize, cfg: FrontierConfig) -> Vec<PayoffVector<N>> {
    FrontierSolver::<N>::new(m, cfg)
        .and_then(|s| s.build_initial(k))
        .expect("frontier")
        .into_points()
}

pub fn value<N: Scalar>(points: &[PayoffVector<N>]) -> N {
    max_min_value(points).expect("value").value
}

pub fn key_set<N: Scalar>(points: &[PayoffVector<N>]) -> BTreeSet<Vec<Option<ScalarKey>>> {
    points
        .iter()
        .map(|p| p.coords.iter().map(|c| c.as_ref().map(Scalar::key)).collect())
        .collect()
}

/// Same points up to `tol` per coordinate, in any order.
pub fn approx_set_eq<N: Scalar>(a: &[PayoffVector<N>], b: &[PayoffVector<N>], tol: f64) -> bool {
    let close = |x: &PayoffVector<N>, y: &PayoffVector<N>| {
        x.coords.len() == y.coords.len()
            && x.coords.iter().zip(&y.coords).all(|(u, v)| match (u, v) {
                (None, None) => true,
                (Some(u), Some(v)) => u.close_to(v, tol),
                _ => false,
            })
    };
    a.len() == b.len() && a.iter().all(|x| b.iter().any(|y| close(x, y))) && b.iter().all(|y| a.iter().any(|x| close(x, y)))
}

/// No point dominates another distinct point.
pub fn mutually_non_dominated<N: Scalar>(points: &[PayoffVector<N>], tol: f64) -> bool {
    points.iter().enumerate().all(|(i, x)| {
        points
            .iter()
            .enumerate()
            .all(|(j, y)| i == j || !dominates(x, y, tol).expect("same pattern"))
    })
}

/// Every deterministic policy tree of depth `k` over all observations.
pub fn all_policies(actions: usize, observations: usize, k: usize) -> Vec<Arc<PolicyTree>> {
    if k == 0 {
        return vec![PolicyTree::leaf()];
    }
    let sub = all_policies(actions, observations, k - 1);
    let mut out = Vec::new();
    for a in 0..actions {
        // odometer over one subtree per observation
        let mut idx = vec![0usize; observations];
        loop {
            out.push(PolicyTree::node(
                a,
                idx.iter().enumerate().map(|(o, &i)| (o, sub[i].clone())).collect(),
            ));
            let mut d = 0;
            while d < observations {
                idx[d] += 1;
                if idx[d] < sub.len() {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
            if d == observations {
                break;
            }
        }
    }
    out
}

/// Payoff vectors of every deterministic policy, by trajectory enumeration.
pub fn enumerated_payoffs(m: &MultiEnvPomdp, k: usize) -> BTreeSet<Vec<Rational>> {
    let p = m.pomdp();
    all_policies(p.num_actions(), p.num_observations(), k)
        .iter()
        .map(|t| multi_expected_payoff(m, t, k).expect("full policy"))
        .collect()
}

pub fn q(text: &str) -> Rational {
    mepomdp::scalar::parse_rational(text).expect("rational literal")
}
