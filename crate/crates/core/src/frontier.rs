//! Non-dominated sets of achievable payoff vectors.
//!
//! For a multi-belief `β̄` and horizon `ℓ`, the frontier is the set of
//! payoff vectors reachable by deterministic policies from `β̄` that no
//! other reachable vector dominates coordinatewise. It is built bottom-up:
//! a horizon-0 node has the single vector of expected current rewards, and
//! a node at horizon `ℓ` combines, per action, one child point per possible
//! observation:
//!
//! ```text
//! y_i = Σ_s β_i(s) r(s) + Σ_o P_i(o | β_i, a) · x^o_i
//! ```
//!
//! Eliminated environments (⊥) stay eliminated and contribute nothing; a
//! child coordinate that is ⊥ always carries weight zero.
//!
//! All points of one node share the ⊥ pattern of its multi-belief.
//! Internally ⊥ coordinates are stored as zero, which leaves domination
//! between points of the same node unchanged.

use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Instant;

use dashmap::DashMap;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Kernel, MultiBelief, MultiBeliefKey, MultiEnvPomdp, PayoffVector, PolicyTree};
use crate::scalar::{Scalar, DEFAULT_TOLERANCE};

/// How the per-observation child frontiers of one action are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MergeStrategy {
    /// Enumerate the full cross product of child points, then prune.
    NaiveProduct,
    /// Fold observations one at a time, pruning partial sums after each.
    #[default]
    Incremental,
}

#[derive(Debug, Clone)]
pub struct FrontierConfig {
    /// Domination tolerance in float mode; ignored by exact scalars.
    pub tolerance: f64,
    pub memoize: bool,
    pub merge: MergeStrategy,
    /// Evaluate the actions of a node on the rayon pool.
    pub parallel: bool,
    /// Attach a policy tree to every point while fewer than
    /// `policy_budget` tree nodes have been created.
    pub track_policies: bool,
    pub policy_budget: usize,
    /// Largest candidate set one combination step may enumerate.
    pub max_candidates: usize,
    pub deadline: Option<Instant>,
}

impl Default for FrontierConfig {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            memoize: false,
            merge: MergeStrategy::Incremental,
            parallel: false,
            track_policies: true,
            policy_budget: 1_000_000,
            max_candidates: 10_000_000,
            deadline: None,
        }
    }
}

/// Mutually non-dominated payoff vectors of one node.
#[derive(Debug, Clone, PartialEq)]
pub struct Frontier<N> {
    points: Vec<PayoffVector<N>>,
}

impl<N: Scalar> Frontier<N> {
    pub fn points(&self) -> &[PayoffVector<N>] {
        &self.points
    }

    pub fn into_points(self) -> Vec<PayoffVector<N>> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Coordinates of every point, or [`Error::BotCoordinate`] if the node
    /// has eliminated environments.
    pub fn values(&self) -> Result<Vec<Vec<N>>> {
        self.points.iter().map(PayoffVector::values).collect()
    }
}

/// Whether `y` dominates `x`: `y_i ≥ x_i − tol` at every non-⊥ coordinate.
pub fn dominates<N: Scalar>(x: &PayoffVector<N>, y: &PayoffVector<N>, tol: f64) -> Result<bool> {
    if x.len() != y.len() {
        return Err(Error::MismatchedBotPattern);
    }
    let mut all = true;
    for (a, b) in x.coords.iter().zip(&y.coords) {
        match (a, b) {
            (None, None) => {}
            (Some(a), Some(b)) => all &= b.at_least(a, tol),
            _ => return Err(Error::MismatchedBotPattern),
        }
    }
    Ok(all)
}

/// Inserts `y` into the mutually non-dominated set `v`.
///
/// Leaves `v` unchanged if some point dominates `y` (ties keep the
/// incumbent); otherwise removes every point `y` dominates and adds `y`.
/// Returns whether `y` was inserted.
pub fn prune<N: Scalar>(v: &mut Vec<PayoffVector<N>>, y: PayoffVector<N>, tol: f64) -> Result<bool> {
    for x in v.iter() {
        if dominates(&y, x, tol)? {
            return Ok(false);
        }
    }
    let mut err = None;
    v.retain(|x| match dominates(x, &y, tol) {
        Ok(d) => !d,
        Err(e) => {
            err = Some(e);
            true
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    v.push(y);
    Ok(true)
}

/// Payoff vector of playing `a` in `mb` and then following, after each
/// possible observation `o`, a policy whose payoff from the updated
/// multi-belief is the supplied child for `o`.
///
/// `children` pairs observation indices with child vectors. The result
/// carries a policy when every used child does.
pub fn bellman_combine<N: Scalar>(
    kernel: &Kernel<N>,
    mb: &MultiBelief<N>,
    a: usize,
    children: &[(usize, PayoffVector<N>)],
) -> Result<PayoffVector<N>> {
    let mut coords: Vec<Option<N>> = kernel.leaf_value(mb);
    let mut picks = Vec::new();
    let mut tracked = true;
    for br in kernel.branches(mb, a) {
        let Some((_, child)) = children.iter().find(|(o, _)| *o == br.observation) else {
            return Err(Error::MissingChild {
                observation: br.observation,
            });
        };
        if child.len() != coords.len() {
            return Err(Error::MismatchedBotPattern);
        }
        for (i, w) in br.weights.iter().enumerate() {
            if w.is_zero() {
                continue;
            }
            let x = child.coords[i].clone().ok_or(Error::BotCoordinate)?;
            if let Some(c) = coords[i].as_mut() {
                *c = c.clone() + w.clone() * x;
            }
        }
        match &child.policy {
            Some(p) => picks.push((br.observation, p.clone())),
            None => tracked = false,
        }
    }
    let mut out = PayoffVector::new(coords);
    if tracked {
        out.policy = Some(PolicyTree::node(a, picks));
    }
    Ok(out)
}

/// Builds the frontier of `mb` at horizon `k`.
pub fn build_frontier<N: Scalar>(
    m: &MultiEnvPomdp,
    mb: &MultiBelief<N>,
    k: usize,
    cfg: &FrontierConfig,
) -> Result<Frontier<N>> {
    FrontierSolver::new(m, cfg.clone())?.build(mb, k)
}

/// Counters collected while building frontiers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FrontierStats {
    pub nodes: u64,
    pub cache_hits: u64,
    pub policy_nodes: usize,
}

#[derive(Debug, Clone)]
struct Point<N> {
    vals: Vec<N>,
    policy: Option<Arc<PolicyTree>>,
}

/// Observation choices of a partial combination, newest first.
struct Pick {
    observation: usize,
    tree: Arc<PolicyTree>,
    prev: Option<Arc<Pick>>,
}

struct Partial<N> {
    vals: Vec<N>,
    picks: Option<Arc<Pick>>,
    tracked: bool,
}

type NodeKey = (usize, MultiBeliefKey);

/// Frontier builder over one compiled model; reusable across horizons and
/// multi-beliefs, sharing its cache.
pub struct FrontierSolver<N> {
    kernel: Kernel<N>,
    cfg: FrontierConfig,
    cache: DashMap<NodeKey, Arc<Vec<Point<N>>>>,
    leaf: Arc<PolicyTree>,
    nodes: AtomicU64,
    cache_hits: AtomicU64,
    policy_nodes: AtomicUsize,
    initial: MultiBelief<N>,
}

fn covers<N: Scalar>(a: &[N], b: &[N], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| x.at_least(y, tol))
}

fn insert<N: Scalar, T>(set: &mut Vec<T>, y: T, vals: impl Fn(&T) -> &[N], tol: f64) {
    let yv = vals(&y);
    if set.iter().any(|x| covers(vals(x), yv, tol)) {
        return;
    }
    set.retain(|x| !covers(yv, vals(x), tol));
    set.push(y);
}

impl<N: Scalar> FrontierSolver<N> {
    pub fn new(m: &MultiEnvPomdp, cfg: FrontierConfig) -> Result<Self> {
        Ok(Self {
            kernel: m.kernel()?,
            cfg,
            cache: DashMap::new(),
            leaf: PolicyTree::leaf(),
            nodes: AtomicU64::new(0),
            cache_hits: AtomicU64::new(0),
            policy_nodes: AtomicUsize::new(0),
            initial: m.initial_multibelief(),
        })
    }

    pub fn kernel(&self) -> &Kernel<N> {
        &self.kernel
    }

    pub fn config(&self) -> &FrontierConfig {
        &self.cfg
    }

    pub fn stats(&self) -> FrontierStats {
        FrontierStats {
            nodes: self.nodes.load(Ordering::Relaxed),
            cache_hits: self.cache_hits.load(Ordering::Relaxed),
            policy_nodes: self.policy_nodes.load(Ordering::Relaxed),
        }
    }

    /// Frontier of the initial multi-belief.
    pub fn build_initial(&self, k: usize) -> Result<Frontier<N>> {
        let mb = self.initial.clone();
        self.build(&mb, k)
    }

    pub fn build(&self, mb: &MultiBelief<N>, k: usize) -> Result<Frontier<N>> {
        let pattern = mb.bot_pattern();
        let points = self.node(mb, k)?;
        Ok(Frontier {
            points: points
                .iter()
                .map(|p| PayoffVector {
                    coords: p
                        .vals
                        .iter()
                        .zip(&pattern)
                        .map(|(v, bot)| (!bot).then(|| v.clone()))
                        .collect(),
                    policy: p.policy.clone(),
                })
                .collect(),
        })
    }

    fn base(&self, mb: &MultiBelief<N>) -> Vec<N> {
        self.kernel
            .leaf_value(mb)
            .into_iter()
            .map(|v| v.unwrap_or_else(N::zero))
            .collect()
    }

    fn node(&self, mb: &MultiBelief<N>, ell: usize) -> Result<Arc<Vec<Point<N>>>> {
        if let Some(deadline) = self.cfg.deadline {
            if Instant::now() >= deadline {
                return Err(Error::Timeout);
            }
        }
        self.nodes.fetch_add(1, Ordering::Relaxed);
        if ell == 0 {
            let policy = self.cfg.track_policies.then(|| self.leaf.clone());
            return Ok(Arc::new(vec![Point {
                vals: self.base(mb),
                policy,
            }]));
        }
        let key = self.cfg.memoize.then(|| (ell, mb.key()));
        if let Some(key) = &key {
            if let Some(hit) = self.cache.get(key) {
                self.cache_hits.fetch_add(1, Ordering::Relaxed);
                return Ok(hit.clone());
            }
        }
        let base = self.base(mb);
        let na = self.kernel.num_actions();
        let per_action: Vec<Vec<Point<N>>> = if self.cfg.parallel {
            (0..na)
                .into_par_iter()
                .map(|a| self.action_points(mb, &base, ell, a))
                .collect::<Result<_>>()?
        } else {
            (0..na)
                .map(|a| self.action_points(mb, &base, ell, a))
                .collect::<Result<_>>()?
        };
        let tol = self.cfg.tolerance;
        let mut out: Vec<Point<N>> = Vec::new();
        for points in per_action {
            for p in points {
                insert(&mut out, p, |p: &Point<N>| &p.vals, tol);
            }
        }
        let out = Arc::new(out);
        if let Some(key) = key {
            self.cache.insert(key, out.clone());
        }
        Ok(out)
    }

    fn action_points(
        &self,
        mb: &MultiBelief<N>,
        base: &[N],
        ell: usize,
        a: usize,
    ) -> Result<Vec<Point<N>>> {
        let branches = self.kernel.branches(mb, a);
        let mut children = Vec::with_capacity(branches.len());
        for br in &branches {
            children.push(self.node(&br.child, ell - 1)?);
        }
        let partials = match self.cfg.merge {
            MergeStrategy::Incremental => self.fold(base, &branches, &children)?,
            MergeStrategy::NaiveProduct => self.product(base, &branches, &children)?,
        };
        Ok(partials.into_iter().map(|p| self.finish(a, p)).collect())
    }

    fn start(&self, base: &[N]) -> Partial<N> {
        Partial {
            vals: base.to_vec(),
            picks: None,
            tracked: self.cfg.track_policies,
        }
    }

    fn extend(&self, p: &Partial<N>, weights: &[N], observation: usize, x: &Point<N>) -> Partial<N> {
        let vals = p
            .vals
            .iter()
            .zip(weights)
            .zip(&x.vals)
            .map(|((v, w), c)| {
                if w.is_zero() {
                    v.clone()
                } else {
                    v.clone() + w.clone() * c.clone()
                }
            })
            .collect();
        let (picks, tracked) = match (&x.policy, p.tracked) {
            (Some(tree), true) => (
                Some(Arc::new(Pick {
                    observation,
                    tree: tree.clone(),
                    prev: p.picks.clone(),
                })),
                true,
            ),
            _ => (None, false),
        };
        Partial {
            vals,
            picks,
            tracked,
        }
    }

    fn fold(
        &self,
        base: &[N],
        branches: &[crate::model::Branch<N>],
        children: &[Arc<Vec<Point<N>>>],
    ) -> Result<Vec<Partial<N>>> {
        let tol = self.cfg.tolerance;
        let mut partial = vec![self.start(base)];
        for (br, child) in branches.iter().zip(children) {
            if partial.len().saturating_mul(child.len()) > self.cfg.max_candidates {
                return Err(Error::BudgetExceeded(format!(
                    "{} candidate combinations in one step",
                    partial.len().saturating_mul(child.len())
                )));
            }
            let mut next: Vec<Partial<N>> = Vec::new();
            for p in &partial {
                for x in child.iter() {
                    let y = self.extend(p, &br.weights, br.observation, x);
                    insert(&mut next, y, |p: &Partial<N>| &p.vals, tol);
                }
            }
            partial = next;
        }
        Ok(partial)
    }

    fn product(
        &self,
        base: &[N],
        branches: &[crate::model::Branch<N>],
        children: &[Arc<Vec<Point<N>>>],
    ) -> Result<Vec<Partial<N>>> {
        let tol = self.cfg.tolerance;
        let total = children
            .iter()
            .try_fold(1usize, |acc, c| acc.checked_mul(c.len()))
            .filter(|t| *t <= self.cfg.max_candidates);
        let Some(total) = total else {
            return Err(Error::BudgetExceeded(
                "cross product of child frontiers too large".into(),
            ));
        };
        let mut out: Vec<Partial<N>> = Vec::new();
        let mut index = vec![0usize; children.len()];
        for _ in 0..total {
            let mut y = self.start(base);
            for (j, (br, child)) in branches.iter().zip(children).enumerate() {
                y = self.extend(&y, &br.weights, br.observation, &child[index[j]]);
            }
            insert(&mut out, y, |p: &Partial<N>| &p.vals, tol);
            // odometer, last branch fastest
            for j in (0..index.len()).rev() {
                index[j] += 1;
                if index[j] < children[j].len() {
                    break;
                }
                index[j] = 0;
            }
        }
        Ok(out)
    }

    fn finish(&self, a: usize, p: Partial<N>) -> Point<N> {
        let policy = if p.tracked && self.policy_nodes.load(Ordering::Relaxed) < self.cfg.policy_budget {
            self.policy_nodes.fetch_add(1, Ordering::Relaxed);
            let mut picks = Vec::new();
            let mut cur = p.picks;
            while let Some(pick) = cur {
                picks.push((pick.observation, pick.tree.clone()));
                cur = pick.prev.clone();
            }
            Some(PolicyTree::node(a, picks))
        } else {
            None
        };
        Point {
            vals: p.vals,
            policy,
        }
    }
}
