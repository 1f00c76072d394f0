//! POMDPs with several possible initial states.
//!
//! A [`Pomdp`] stores its transition kernel, observation function and integer
//! rewards exactly (probabilities are [`Rational`]). A [`MultiEnvPomdp`] adds
//! the ordered list of initial states, one per environment. Numeric work
//! happens on a [`Kernel`], which is the model compiled to a chosen
//! [`crate::Scalar`].
//!
//! Payoff convention: a trajectory of horizon `k` visits `k + 1` states and
//! its payoff is the sum of all `k + 1` state rewards, the initial state
//! included.

mod document;
mod kernel;
mod payoff;

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{format_rational, Rational};

pub use document::{parse_model, validate_model, write_model, ModelDocument, ObservationDocument};
pub use kernel::{Belief, Branch, Kernel, MultiBelief, MultiBeliefKey, ObsBranch};
pub use payoff::{expected_payoff, multi_expected_payoff, PayoffVector, PolicyTree};

/// Sparse distribution: `(index, probability)` pairs sorted by index, zero
/// entries omitted.
pub type Distribution = Vec<(usize, Rational)>;

/// One invariant violation found while validating a model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// Where the problem is, e.g. `transitions[s1][a]`.
    pub location: String,
    pub message: String,
}

impl Violation {
    pub fn new(location: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            location: location.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

/// How observations are emitted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ObservationFn {
    /// Each state carries one observation.
    Deterministic(Vec<usize>),
    /// Distribution over observations given the reached state `t` and the
    /// action `a` that led there, indexed `t * |A| + a`.
    Stochastic(Vec<Distribution>),
}

/// A finite POMDP with integer state rewards.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pomdp {
    states: Vec<String>,
    actions: Vec<String>,
    observations: Vec<String>,
    /// Indexed `s * |A| + a`.
    transitions: Vec<Distribution>,
    observation_fn: ObservationFn,
    rewards: Vec<i64>,
}

impl Pomdp {
    /// Builds a POMDP, rejecting it when any invariant is violated.
    pub fn new(
        states: Vec<String>,
        actions: Vec<String>,
        observations: Vec<String>,
        transitions: Vec<Distribution>,
        observation_fn: ObservationFn,
        rewards: Vec<i64>,
    ) -> Result<Self> {
        let pomdp = Self::new_unchecked(
            states,
            actions,
            observations,
            transitions,
            observation_fn,
            rewards,
        );
        let violations = pomdp.violations();
        if violations.is_empty() {
            Ok(pomdp)
        } else {
            Err(Error::InvalidModel(violations))
        }
    }

    pub(crate) fn new_unchecked(
        states: Vec<String>,
        actions: Vec<String>,
        observations: Vec<String>,
        mut transitions: Vec<Distribution>,
        mut observation_fn: ObservationFn,
        rewards: Vec<i64>,
    ) -> Self {
        for row in transitions.iter_mut() {
            normalize_sparse(row);
        }
        if let ObservationFn::Stochastic(rows) = &mut observation_fn {
            for row in rows.iter_mut() {
                normalize_sparse(row);
            }
        }
        Self {
            states,
            actions,
            observations,
            transitions,
            observation_fn,
            rewards,
        }
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn observations(&self) -> &[String] {
        &self.observations
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn num_observations(&self) -> usize {
        self.observations.len()
    }

    pub fn rewards(&self) -> &[i64] {
        &self.rewards
    }

    pub fn observation_fn(&self) -> &ObservationFn {
        &self.observation_fn
    }

    /// `δ(s, a)` as a sparse distribution.
    pub fn transition(&self, s: usize, a: usize) -> &Distribution {
        &self.transitions[s * self.actions.len() + a]
    }

    /// `O(· | t, a)`: the observation distribution after reaching `t` by `a`.
    pub fn observation_distribution(&self, t: usize, a: usize) -> Distribution {
        match &self.observation_fn {
            ObservationFn::Deterministic(obs) => vec![(obs[t], Rational::one())],
            ObservationFn::Stochastic(rows) => rows[t * self.actions.len() + a].clone(),
        }
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|s| s == name)
    }

    pub fn observation_index(&self, name: &str) -> Option<usize> {
        self.observations.iter().position(|s| s == name)
    }

    /// Maximum absolute reward.
    pub fn max_abs_reward(&self) -> i64 {
        self.rewards.iter().map(|r| r.abs()).max().unwrap_or(0)
    }

    /// Re-encodes a deterministic observation function as the equivalent
    /// stochastic one (point masses independent of the action).
    pub fn to_stochastic_observations(&self) -> Pomdp {
        let mut out = self.clone();
        if let ObservationFn::Deterministic(obs) = &self.observation_fn {
            let rows = (0..self.states.len())
                .flat_map(|t| (0..self.actions.len()).map(move |_| vec![(obs[t], Rational::one())]))
                .collect();
            out.observation_fn = ObservationFn::Stochastic(rows);
        }
        out
    }

    /// Structural invariant check; empty iff the POMDP is well formed.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let (ns, na, no) = (self.states.len(), self.actions.len(), self.observations.len());
        check_unique("states", &self.states, &mut out);
        check_unique("actions", &self.actions, &mut out);
        check_unique("observations", &self.observations, &mut out);
        if ns == 0 {
            out.push(Violation::new("states", "at least one state is required"));
        }
        if na == 0 {
            out.push(Violation::new("actions", "at least one action is required"));
        }
        if no == 0 {
            out.push(Violation::new("observations", "at least one observation is required"));
        }
        if self.rewards.len() != ns {
            out.push(Violation::new(
                "rewards",
                format!("expected {ns} rewards, found {}", self.rewards.len()),
            ));
        }
        if self.transitions.len() != ns * na {
            out.push(Violation::new(
                "transitions",
                format!("expected {} rows, found {}", ns * na, self.transitions.len()),
            ));
        } else {
            for s in 0..ns {
                for a in 0..na {
                    let loc = format!("transitions[{}][{}]", self.states[s], self.actions[a]);
                    check_distribution(&loc, self.transition(s, a), ns, "state", &mut out);
                }
            }
        }
        match &self.observation_fn {
            ObservationFn::Deterministic(obs) => {
                if obs.len() != ns {
                    out.push(Violation::new(
                        "observation_fn.deterministic",
                        format!("expected {ns} entries, found {}", obs.len()),
                    ));
                }
                for (t, &o) in obs.iter().enumerate() {
                    if o >= no {
                        out.push(Violation::new(
                            format!("observation_fn.deterministic[{}]", self.state_name(t)),
                            format!("observation index {o} out of range"),
                        ));
                    }
                }
            }
            ObservationFn::Stochastic(rows) => {
                if rows.len() != ns * na {
                    out.push(Violation::new(
                        "observation_fn.stochastic",
                        format!("expected {} rows, found {}", ns * na, rows.len()),
                    ));
                } else {
                    for t in 0..ns {
                        for a in 0..na {
                            let loc = format!(
                                "observation_fn.stochastic[{}][{}]",
                                self.states[t], self.actions[a]
                            );
                            check_distribution(&loc, &rows[t * na + a], no, "observation", &mut out);
                        }
                    }
                }
            }
        }
        out
    }

    fn state_name(&self, s: usize) -> &str {
        self.states.get(s).map(String::as_str).unwrap_or("?")
    }
}

fn normalize_sparse(row: &mut Distribution) {
    row.retain(|(_, p)| !p.is_zero());
    row.sort_by_key(|(i, _)| *i);
}

fn check_unique(kind: &str, names: &[String], out: &mut Vec<Violation>) {
    let mut seen = BTreeSet::new();
    for n in names {
        if !seen.insert(n.as_str()) {
            out.push(Violation::new(kind, format!("duplicate identifier {n:?}")));
        }
    }
}

fn check_distribution(loc: &str, row: &Distribution, bound: usize, what: &str, out: &mut Vec<Violation>) {
    let mut sum = Rational::zero();
    let mut seen = BTreeSet::new();
    for (i, p) in row {
        if *i >= bound {
            out.push(Violation::new(loc, format!("{what} index {i} out of range")));
        }
        if !seen.insert(*i) {
            out.push(Violation::new(loc, format!("{what} index {i} listed twice")));
        }
        if p.is_negative() {
            out.push(Violation::new(loc, format!("negative probability {}", format_rational(p))));
        }
        sum += p;
    }
    if !sum.is_one() {
        out.push(Violation::new(
            loc,
            format!("distribution sums to {}", format_rational(&sum)),
        ));
    }
}

/// A POMDP together with `n ≥ 1` initial states, one per environment.
///
/// Environments are indexed positionally; duplicates are allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiEnvPomdp {
    pomdp: Pomdp,
    initial_states: Vec<usize>,
}

impl MultiEnvPomdp {
    pub fn new(pomdp: Pomdp, initial_states: Vec<usize>) -> Result<Self> {
        let m = Self {
            pomdp,
            initial_states,
        };
        let violations = m.violations();
        if violations.is_empty() {
            Ok(m)
        } else {
            Err(Error::InvalidModel(violations))
        }
    }

    pub fn pomdp(&self) -> &Pomdp {
        &self.pomdp
    }

    pub fn initial_states(&self) -> &[usize] {
        &self.initial_states
    }

    /// Number of environments `n`.
    pub fn num_envs(&self) -> usize {
        self.initial_states.len()
    }

    /// Same initial states over a replaced POMDP (used to switch observation
    /// encodings).
    pub fn with_pomdp(&self, pomdp: Pomdp) -> Result<Self> {
        Self::new(pomdp, self.initial_states.clone())
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut out = self.pomdp.violations();
        let ns = self.pomdp.num_states();
        if self.initial_states.is_empty() {
            out.push(Violation::new("initial_states", "at least one initial state is required"));
        }
        for &s in &self.initial_states {
            if s >= ns {
                out.push(Violation::new(
                    "initial_states",
                    format!("state index {s} out of range"),
                ));
            }
        }
        if let ObservationFn::Deterministic(obs) = &self.pomdp.observation_fn {
            let seen: BTreeSet<usize> = self
                .initial_states
                .iter()
                .filter_map(|&s| obs.get(s).copied())
                .collect();
            if seen.len() > 1 {
                out.push(Violation::new(
                    "initial_states",
                    "initial states must share one observation under a deterministic observation function",
                ));
            }
        }
        out
    }

    /// Compiles the model to numeric type `N`.
    pub fn kernel<N: crate::Scalar>(&self) -> Result<Kernel<N>> {
        Kernel::new(&self.pomdp)
    }

    /// The initial multi-belief: environment `i` is a point mass on `s_i`.
    pub fn initial_multibelief<N: crate::Scalar>(&self) -> MultiBelief<N> {
        MultiBelief::new(
            self.initial_states
                .iter()
                .map(|&s| Some(Belief::point(s)))
                .collect(),
        )
    }

    /// Number of distinct states reachable from the initial states in at most
    /// `k` steps under any actions (initial states included).
    pub fn reachable_states(&self, k: usize) -> usize {
        let mut seen = vec![false; self.pomdp.num_states()];
        let mut frontier: Vec<usize> = Vec::new();
        for &s in &self.initial_states {
            if !seen[s] {
                seen[s] = true;
                frontier.push(s);
            }
        }
        let mut count = frontier.len();
        for _ in 0..k {
            let mut next = Vec::new();
            for &s in &frontier {
                for a in 0..self.pomdp.num_actions() {
                    for (t, _) in self.pomdp.transition(s, a) {
                        if !seen[*t] {
                            seen[*t] = true;
                            next.push(*t);
                        }
                    }
                }
            }
            count += next.len();
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        count
    }
}
