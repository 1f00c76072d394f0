//! Deterministic policy trees and their expected payoffs by trajectory
//! enumeration.

use std::sync::Arc;

use num_traits::Zero;

use super::{MultiEnvPomdp, Pomdp, Rational};
use crate::error::{Error, Result};

/// A deterministic policy over observation histories.
///
/// `Leaf` ends the horizon. A `Node` names the action to play and the
/// subtree to follow after each observation it may produce.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PolicyTree {
    Leaf,
    Node {
        action: usize,
        branches: Vec<(usize, Arc<PolicyTree>)>,
    },
}

impl PolicyTree {
    pub fn leaf() -> Arc<Self> {
        Arc::new(PolicyTree::Leaf)
    }

    pub fn node(action: usize, mut branches: Vec<(usize, Arc<PolicyTree>)>) -> Arc<Self> {
        branches.sort_by_key(|(o, _)| *o);
        Arc::new(PolicyTree::Node { action, branches })
    }

    /// The same action at every step for `k` steps, after any observation
    /// in `observations`.
    pub fn constant(action: usize, observations: usize, k: usize) -> Arc<Self> {
        let mut tree = Self::leaf();
        for _ in 0..k {
            tree = Self::node(
                action,
                (0..observations).map(|o| (o, tree.clone())).collect(),
            );
        }
        tree
    }

    pub fn action(&self) -> Option<usize> {
        match self {
            PolicyTree::Leaf => None,
            PolicyTree::Node { action, .. } => Some(*action),
        }
    }

    pub fn child(&self, o: usize) -> Option<&Arc<PolicyTree>> {
        match self {
            PolicyTree::Leaf => None,
            PolicyTree::Node { branches, .. } => branches
                .binary_search_by_key(&o, |(p, _)| *p)
                .ok()
                .map(|i| &branches[i].1),
        }
    }

    /// Number of decision nodes.
    pub fn size(&self) -> usize {
        match self {
            PolicyTree::Leaf => 0,
            PolicyTree::Node { branches, .. } => {
                1 + branches.iter().map(|(_, c)| c.size()).sum::<usize>()
            }
        }
    }

    /// Every decision as `(history, action)`, where a history alternates
    /// action and observation names, in depth-first order.
    pub fn decisions(&self, p: &Pomdp) -> Vec<(Vec<String>, String)> {
        let mut out = Vec::new();
        self.collect(p, &mut Vec::new(), &mut out);
        out
    }

    fn collect(&self, p: &Pomdp, history: &mut Vec<String>, out: &mut Vec<(Vec<String>, String)>) {
        if let PolicyTree::Node { action, branches } = self {
            out.push((history.clone(), p.actions()[*action].clone()));
            for (o, child) in branches {
                history.push(p.actions()[*action].clone());
                history.push(p.observations()[*o].clone());
                child.collect(p, history, out);
                history.truncate(history.len() - 2);
            }
        }
    }
}

/// One multi-expected payoff; `None` coordinates are ⊥.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffVector<N> {
    pub coords: Vec<Option<N>>,
    pub policy: Option<Arc<PolicyTree>>,
}

impl<N> PayoffVector<N> {
    pub fn new(coords: Vec<Option<N>>) -> Self {
        Self {
            coords,
            policy: None,
        }
    }

    /// A vector without ⊥ coordinates.
    pub fn from_values(values: Vec<N>) -> Self {
        Self::new(values.into_iter().map(Some).collect())
    }

    pub fn with_policy(mut self, policy: Arc<PolicyTree>) -> Self {
        self.policy = Some(policy);
        self
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn bot_pattern(&self) -> Vec<bool> {
        self.coords.iter().map(Option::is_none).collect()
    }

    /// All coordinates, or [`Error::BotCoordinate`] if any is ⊥.
    pub fn values(&self) -> Result<Vec<N>>
    where
        N: Clone,
    {
        self.coords
            .iter()
            .map(|c| c.clone().ok_or(Error::BotCoordinate))
            .collect()
    }
}

/// Expected payoff of `policy` from state `s` over `k` steps, summing all
/// `k + 1` state rewards along each trajectory.
pub fn expected_payoff(p: &Pomdp, s: usize, policy: &PolicyTree, k: usize) -> Result<Rational> {
    let mut history = Vec::new();
    payoff_from(p, s, policy, k, &mut history)
}

fn payoff_from(
    p: &Pomdp,
    s: usize,
    policy: &PolicyTree,
    k: usize,
    history: &mut Vec<String>,
) -> Result<Rational> {
    let mut total = Rational::from_integer(p.rewards()[s].into());
    if k == 0 {
        return Ok(total);
    }
    let Some(a) = policy.action() else {
        return Err(Error::PolicyIncomplete {
            history: history.clone(),
        });
    };
    for (t, pt) in p.transition(s, a) {
        for (o, po) in p.observation_distribution(*t, a) {
            let w = pt * &po;
            if w.is_zero() {
                continue;
            }
            history.push(p.actions()[a].clone());
            history.push(p.observations()[o].clone());
            let Some(child) = policy.child(o) else {
                return Err(Error::PolicyIncomplete {
                    history: history.clone(),
                });
            };
            let v = payoff_from(p, *t, child, k - 1, history)?;
            history.truncate(history.len() - 2);
            total += w * v;
        }
    }
    Ok(total)
}

/// `expected_payoff` from each initial state.
pub fn multi_expected_payoff(m: &MultiEnvPomdp, policy: &PolicyTree, k: usize) -> Result<Vec<Rational>> {
    m.initial_states()
        .iter()
        .map(|&s| expected_payoff(m.pomdp(), s, policy, k))
        .collect()
}
