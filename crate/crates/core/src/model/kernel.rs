//! A model compiled to a numeric type, with belief and multi-belief updates.

use std::collections::BTreeMap;

use num_traits::Zero;

use super::{Pomdp, Rational};
use crate::error::{Error, Result};
use crate::scalar::{Scalar, ScalarKey};

/// One observation outcome of a `(state, action)` pair: every successor `t`
/// with its joint probability `δ(s,a)(t) · O(o|t,a) > 0`.
#[derive(Debug, Clone)]
pub struct ObsBranch<N> {
    pub observation: usize,
    pub successors: Vec<(usize, N)>,
}

/// A [`Pomdp`] compiled to scalar type `N`.
///
/// Rows are indexed `s * |A| + a`; each row lists its observation branches
/// in increasing observation order.
#[derive(Debug, Clone)]
pub struct Kernel<N> {
    num_states: usize,
    num_actions: usize,
    num_observations: usize,
    rows: Vec<Vec<ObsBranch<N>>>,
    rewards: Vec<N>,
}

/// A probability distribution over states, stored sparsely and sorted by
/// state. Every stored probability is strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief<N> {
    entries: Vec<(usize, N)>,
}

impl<N: Scalar> Belief<N> {
    pub fn point(s: usize) -> Self {
        Self {
            entries: vec![(s, N::one())],
        }
    }

    /// Builds a belief from `(state, probability)` pairs; zero entries are
    /// dropped and duplicates summed. The caller guarantees a unit sum.
    pub fn from_entries(entries: impl IntoIterator<Item = (usize, N)>) -> Self {
        Self {
            entries: merge_sorted(entries.into_iter().collect()),
        }
    }

    pub fn entries(&self) -> &[(usize, N)] {
        &self.entries
    }

    pub fn probability(&self, s: usize) -> N {
        match self.entries.binary_search_by_key(&s, |(t, _)| *t) {
            Ok(i) => self.entries[i].1.clone(),
            Err(_) => N::zero(),
        }
    }

    pub fn total(&self) -> N {
        self.entries
            .iter()
            .fold(N::zero(), |acc, (_, p)| acc + p.clone())
    }

    fn key(&self) -> Vec<(usize, ScalarKey)> {
        self.entries.iter().map(|(s, p)| (*s, p.key())).collect()
    }
}

/// Hashable canonical form of a [`MultiBelief`].
pub type MultiBeliefKey = Vec<Option<Vec<(usize, ScalarKey)>>>;

/// One belief per environment; `None` marks an eliminated environment (⊥).
#[derive(Debug, Clone, PartialEq)]
pub struct MultiBelief<N> {
    entries: Vec<Option<Belief<N>>>,
}

impl<N: Scalar> MultiBelief<N> {
    pub fn new(entries: Vec<Option<Belief<N>>>) -> Self {
        Self { entries }
    }

    pub fn entries(&self) -> &[Option<Belief<N>>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `true` at eliminated positions.
    pub fn bot_pattern(&self) -> Vec<bool> {
        self.entries.iter().map(Option::is_none).collect()
    }

    pub fn key(&self) -> MultiBeliefKey {
        self.entries
            .iter()
            .map(|b| b.as_ref().map(Belief::key))
            .collect()
    }
}

/// Outcome of taking an action in a multi-belief and observing
/// `observation`.
#[derive(Debug, Clone)]
pub struct Branch<N> {
    pub observation: usize,
    /// `P_i(o | β_i, a)` per environment; zero for ⊥ entries and for
    /// environments where `o` is impossible.
    pub weights: Vec<N>,
    pub child: MultiBelief<N>,
}

fn merge_sorted<N: Scalar>(mut v: Vec<(usize, N)>) -> Vec<(usize, N)> {
    v.sort_by_key(|(s, _)| *s);
    let mut out: Vec<(usize, N)> = Vec::with_capacity(v.len());
    for (s, p) in v {
        match out.last_mut() {
            Some((t, q)) if *t == s => *q = q.clone() + p,
            _ => out.push((s, p)),
        }
    }
    out.retain(|(_, p)| !p.is_zero());
    out
}

fn convert<N: Scalar>(r: &Rational) -> Result<N> {
    N::from_rational(r).ok_or_else(|| Error::NumericOverflow(r.to_string()))
}

impl<N: Scalar> Kernel<N> {
    pub fn new(p: &Pomdp) -> Result<Self> {
        let (ns, na) = (p.num_states(), p.num_actions());
        let mut rows = Vec::with_capacity(ns * na);
        for s in 0..ns {
            for a in 0..na {
                let mut by_obs: BTreeMap<usize, BTreeMap<usize, Rational>> = BTreeMap::new();
                for (t, pt) in p.transition(s, a) {
                    for (o, po) in p.observation_distribution(*t, a) {
                        let joint = pt * &po;
                        if joint.is_zero() {
                            continue;
                        }
                        *by_obs.entry(o).or_default().entry(*t).or_insert_with(Rational::zero) +=
                            joint;
                    }
                }
                let mut row = Vec::with_capacity(by_obs.len());
                for (o, succ) in by_obs {
                    let successors = succ
                        .iter()
                        .map(|(t, q)| Ok((*t, convert(q)?)))
                        .collect::<Result<Vec<_>>>()?;
                    row.push(ObsBranch {
                        observation: o,
                        successors,
                    });
                }
                rows.push(row);
            }
        }
        Ok(Self {
            num_states: ns,
            num_actions: na,
            num_observations: p.num_observations(),
            rows,
            rewards: p.rewards().iter().map(|&r| N::from_int(r)).collect(),
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_observations(&self) -> usize {
        self.num_observations
    }

    pub fn reward(&self, s: usize) -> &N {
        &self.rewards[s]
    }

    pub fn row(&self, s: usize, a: usize) -> &[ObsBranch<N>] {
        &self.rows[s * self.num_actions + a]
    }

    /// `Σ_s β(s) r(s)`.
    pub fn reward_expectation(&self, b: &Belief<N>) -> N {
        b.entries.iter().fold(N::zero(), |acc, (s, p)| {
            acc + p.clone() * self.rewards[*s].clone()
        })
    }

    /// Horizon-0 payoff vector: expected current reward per environment.
    pub fn leaf_value(&self, mb: &MultiBelief<N>) -> Vec<Option<N>> {
        mb.entries
            .iter()
            .map(|b| b.as_ref().map(|b| self.reward_expectation(b)))
            .collect()
    }

    /// `P(o | β, a)`.
    pub fn obs_probability(&self, b: &Belief<N>, a: usize, o: usize) -> N {
        let mut total = N::zero();
        for (s, p) in &b.entries {
            if let Some(br) = self.row(*s, a).iter().find(|br| br.observation == o) {
                for (_, q) in &br.successors {
                    total = total + p.clone() * q.clone();
                }
            }
        }
        total
    }

    /// Bayesian update of `b` after taking `a` and observing `o`.
    pub fn belief_update(&self, b: &Belief<N>, a: usize, o: usize) -> Result<Belief<N>> {
        let mut mass = Vec::new();
        for (s, p) in &b.entries {
            if let Some(br) = self.row(*s, a).iter().find(|br| br.observation == o) {
                for (t, q) in &br.successors {
                    mass.push((*t, p.clone() * q.clone()));
                }
            }
        }
        normalize(mass).ok_or(Error::ZeroProbabilityObservation {
            action: a,
            observation: o,
        })
    }

    /// Every observation with positive probability after `a`, with its
    /// probability and the updated belief, in observation order.
    pub fn split(&self, b: &Belief<N>, a: usize) -> Vec<(usize, N, Belief<N>)> {
        let mut buckets: BTreeMap<usize, Vec<(usize, N)>> = BTreeMap::new();
        for (s, p) in &b.entries {
            for br in self.row(*s, a) {
                let bucket = buckets.entry(br.observation).or_default();
                for (t, q) in &br.successors {
                    bucket.push((*t, p.clone() * q.clone()));
                }
            }
        }
        buckets
            .into_iter()
            .filter_map(|(o, mass)| {
                let merged = merge_sorted(mass);
                let total = merged
                    .iter()
                    .fold(N::zero(), |acc, (_, p)| acc + p.clone());
                if !(total > N::zero()) {
                    return None;
                }
                let belief = Belief {
                    entries: merged
                        .into_iter()
                        .map(|(t, p)| (t, p / total.clone()))
                        .collect(),
                };
                Some((o, total, belief))
            })
            .collect()
    }

    /// Updates every environment; entries with zero observation probability
    /// become ⊥ and ⊥ entries stay ⊥.
    pub fn multibelief_update(
        &self,
        mb: &MultiBelief<N>,
        a: usize,
        o: usize,
    ) -> Result<MultiBelief<N>> {
        let entries: Vec<Option<Belief<N>>> = mb
            .entries
            .iter()
            .map(|b| b.as_ref().and_then(|b| self.belief_update(b, a, o).ok()))
            .collect();
        if entries.iter().all(Option::is_none) {
            return Err(Error::GloballyImpossibleObservation {
                action: a,
                observation: o,
            });
        }
        Ok(MultiBelief { entries })
    }

    /// All observation branches of `mb` under `a` that are possible in at
    /// least one environment, in observation order.
    pub fn branches(&self, mb: &MultiBelief<N>, a: usize) -> Vec<Branch<N>> {
        let n = mb.entries.len();
        let mut by_obs: BTreeMap<usize, (Vec<N>, Vec<Option<Belief<N>>>)> = BTreeMap::new();
        for (i, b) in mb.entries.iter().enumerate() {
            let Some(b) = b else { continue };
            for (o, w, child) in self.split(b, a) {
                let slot = by_obs
                    .entry(o)
                    .or_insert_with(|| (vec![N::zero(); n], vec![None; n]));
                slot.0[i] = w;
                slot.1[i] = Some(child);
            }
        }
        by_obs
            .into_iter()
            .map(|(observation, (weights, entries))| Branch {
                observation,
                weights,
                child: MultiBelief { entries },
            })
            .collect()
    }
}

fn normalize<N: Scalar>(mass: Vec<(usize, N)>) -> Option<Belief<N>> {
    let merged = merge_sorted(mass);
    let total = merged
        .iter()
        .fold(N::zero(), |acc, (_, p)| acc + p.clone());
    if !(total > N::zero()) {
        return None;
    }
    Some(Belief {
        entries: merged
            .into_iter()
            .map(|(t, p)| (t, p / total.clone()))
            .collect(),
    })
}
