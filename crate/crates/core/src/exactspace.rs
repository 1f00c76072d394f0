//! Exhaustive exact-arithmetic routines.
//!
//! * [`brute_force_payoffs`] enumerates every payoff vector reachable by a
//!   deterministic policy, without pruning. It is the ground truth the
//!   frontier solver is tested against.
//! * [`ExactSolver`] decides achievability of a given payoff vector and the
//!   threshold problem by enumerating candidate child values on a finite
//!   grid, keeping only one root-to-leaf path of the recursion in memory.
//! * [`denominator_bound`] gives the grid: with `C` the lcm of all step
//!   probability denominators, every payoff from point beliefs over `k`
//!   steps is a multiple of `1 / C^k` in `[-(k+1)R, (k+1)R]`.
//!
//! # Grid below the root
//!
//! After an observation the payoff is a conditional expectation, which
//! need not lie on the root grid. What does lie on it is the payoff scaled
//! by the probability `π_i` of reaching the node in environment `i`. With
//! [`GridMode::ReachScaled`] (the default) candidate child values are
//! therefore `U / π_i` for `U` on the root grid, which coincides with the
//! root grid at the root. [`GridMode::Printed`] enumerates the root grid at
//! every node; it rejects some achievable vectors and is kept to
//! demonstrate that.

use std::collections::HashSet;
use std::time::Instant;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::mixture::{max_min_value, ValueResult};
use crate::model::{Branch, Kernel, MultiBelief, MultiEnvPomdp, PayoffVector};
use crate::scalar::{lcm_of_denominators, Rational, Scalar, ScalarKey, SmallRational};

/// Grid of possible payoff values for a model and horizon.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenominatorBound {
    /// lcm of the denominators of all step probabilities `δ(s,a)(t)·O(o|t,a)`.
    pub c: BigInt,
    /// `C^k`: every payoff from a point belief is a multiple of `1/script_c`.
    pub script_c: BigInt,
    /// Largest absolute reward.
    pub r: i64,
    pub k: usize,
}

impl DenominatorBound {
    /// Largest grid numerator: payoffs lie in `[-(k+1)R, (k+1)R]`.
    pub fn max_numerator(&self) -> BigInt {
        BigInt::from(self.k as u64 + 1) * BigInt::from(self.r) * &self.script_c
    }

    /// Number of grid points `|N|`.
    pub fn grid_size(&self) -> BigInt {
        self.max_numerator() * 2 + 1
    }

    /// Whether `x` has a reduced denominator dividing `C^k`.
    pub fn on_grid(&self, x: &Rational) -> bool {
        self.script_c.is_multiple_of(x.denom())
    }
}

/// The grid bound for `m` at horizon `k`.
pub fn denominator_bound(m: &MultiEnvPomdp, k: usize) -> DenominatorBound {
    let p = m.pomdp();
    let mut probs = Vec::new();
    for s in 0..p.num_states() {
        for a in 0..p.num_actions() {
            for (t, pt) in p.transition(s, a) {
                for (_, po) in p.observation_distribution(*t, a) {
                    probs.push(pt * &po);
                }
            }
        }
    }
    let c = lcm_of_denominators(probs.iter());
    let script_c = num_traits::pow(c.clone(), k);
    DenominatorBound {
        c,
        script_c,
        r: p.max_abs_reward(),
        k,
    }
}

/// Every payoff vector a deterministic policy reaches from `mb` in `k`
/// steps, without duplicates, in discovery order.
///
/// Fails with [`Error::BudgetExceeded`] once more than `budget` vectors
/// have been generated in total.
pub fn brute_force_payoffs<N: Scalar>(
    m: &MultiEnvPomdp,
    mb: &MultiBelief<N>,
    k: usize,
    budget: usize,
) -> Result<Vec<PayoffVector<N>>> {
    let kernel = m.kernel::<N>()?;
    let mut generated = 0usize;
    let all = enumerate(&kernel, mb, k, budget, &mut generated)?;
    Ok(all.into_iter().map(PayoffVector::new).collect())
}

type Coords<N> = Vec<Option<N>>;

fn coords_key<N: Scalar>(v: &Coords<N>) -> Vec<Option<ScalarKey>> {
    v.iter().map(|c| c.as_ref().map(Scalar::key)).collect()
}

fn enumerate<N: Scalar>(
    kernel: &Kernel<N>,
    mb: &MultiBelief<N>,
    ell: usize,
    budget: usize,
    generated: &mut usize,
) -> Result<Vec<Coords<N>>> {
    let base = kernel.leaf_value(mb);
    if ell == 0 {
        return Ok(vec![base]);
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for a in 0..kernel.num_actions() {
        let branches = kernel.branches(mb, a);
        let mut partial = vec![base.clone()];
        for br in &branches {
            let child = enumerate(kernel, &br.child, ell - 1, budget, generated)?;
            let mut next = Vec::with_capacity(partial.len() * child.len());
            for p in &partial {
                for x in &child {
                    *generated += 1;
                    if *generated > budget {
                        return Err(Error::BudgetExceeded(format!(
                            "more than {budget} payoff vectors enumerated"
                        )));
                    }
                    let y: Coords<N> = p
                        .iter()
                        .zip(&br.weights)
                        .zip(x)
                        .map(|((v, w), c)| match (v, c) {
                            (Some(v), Some(c)) if !w.is_zero() => Some(v.clone() + w.clone() * c.clone()),
                            (v, _) => v.clone(),
                        })
                        .collect();
                    next.push(y);
                }
            }
            partial = next;
        }
        for y in partial {
            if seen.insert(coords_key(&y)) {
                out.push(y);
            }
        }
    }
    Ok(out)
}

/// Max-min value over all mixtures of deterministic policies, by brute
/// force over the initial multi-belief.
pub fn oracle_value(m: &MultiEnvPomdp, k: usize, budget: usize) -> Result<ValueResult<Rational>> {
    let pts = brute_force_payoffs::<Rational>(m, &m.initial_multibelief(), k, budget)?;
    max_min_value(&pts)
}

/// Candidate grid used below the root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GridMode {
    /// Child values `U / π_i` with `U` on the root grid.
    #[default]
    ReachScaled,
    /// The root grid at every node.
    Printed,
}

#[derive(Debug, Clone)]
pub struct ExactConfig {
    pub grid: GridMode,
    /// Skip candidates outside `[ℓ·min r, ℓ·max r]`, which no policy
    /// reaches with `ℓ` rewards left.
    pub reward_bounds: bool,
    /// At the last possible observation, solve for the one candidate that
    /// can close the sum instead of enumerating.
    pub direct_last: bool,
    /// Largest number of candidate vectors one enumeration step may visit.
    pub level_budget: u64,
    /// Largest number of `n`-tuples of root points the threshold search
    /// may visit.
    pub tuple_budget: u64,
    pub deadline: Option<Instant>,
}

impl Default for ExactConfig {
    fn default() -> Self {
        Self {
            grid: GridMode::ReachScaled,
            reward_bounds: true,
            direct_last: true,
            level_budget: 10_000_000,
            tuple_budget: 10_000_000,
            deadline: None,
        }
    }
}

/// Integer range `lo..=hi` of multiples of `step`.
#[derive(Debug, Clone)]
struct Axis {
    step: SmallRational,
    lo: i128,
    hi: i128,
}

impl Axis {
    fn len(&self) -> u64 {
        if self.hi < self.lo {
            0
        } else {
            (self.hi - self.lo + 1) as u64
        }
    }

    fn contains(&self, x: &SmallRational) -> bool {
        let p = x / &self.step;
        p.is_integer() && (self.lo..=self.hi).contains(p.numer())
    }

    fn value(&self, p: i128) -> SmallRational {
        self.step * Ratio::from_integer(p)
    }
}

fn to_small(x: &BigInt) -> Result<i128> {
    x.to_i128()
        .filter(|v| v.abs() < (1i128 << 60))
        .ok_or_else(|| Error::NumericOverflow(x.to_string()))
}

/// Achievability and threshold decisions by grid enumeration.
pub struct ExactSolver {
    kernel: Kernel<SmallRational>,
    cfg: ExactConfig,
    k: usize,
    /// Root grid unit is `1 / unit_den`.
    unit_den: i128,
    /// `(k+1)·R`.
    span: i128,
    r_min: i128,
    r_max: i128,
    initial: MultiBelief<SmallRational>,
    n: usize,
}

impl ExactSolver {
    /// Solver for horizon `k` from the initial multi-belief of `m`.
    pub fn new(m: &MultiEnvPomdp, k: usize, cfg: ExactConfig) -> Result<Self> {
        let kernel = m.kernel::<SmallRational>()?;
        let initial = m.initial_multibelief::<SmallRational>();
        Self::build(m, kernel, initial, k, BigInt::one(), cfg)
    }

    /// Solver rooted at an arbitrary multi-belief. The grid unit absorbs the
    /// lcm of the belief's denominators.
    pub fn at(m: &MultiEnvPomdp, mb: &MultiBelief<Rational>, k: usize, cfg: ExactConfig) -> Result<Self> {
        let kernel = m.kernel::<SmallRational>()?;
        let mut dens = BigInt::one();
        let mut entries = Vec::with_capacity(mb.len());
        for b in mb.entries() {
            entries.push(match b {
                None => None,
                Some(b) => {
                    dens = dens.lcm(&lcm_of_denominators(b.entries().iter().map(|(_, p)| p)));
                    let conv = b
                        .entries()
                        .iter()
                        .map(|(s, p)| {
                            SmallRational::from_rational(p)
                                .map(|q| (*s, q))
                                .ok_or_else(|| Error::NumericOverflow(p.to_string()))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Some(crate::model::Belief::from_entries(conv))
                }
            });
        }
        Self::build(m, kernel, MultiBelief::new(entries), k, dens, cfg)
    }

    fn build(
        m: &MultiEnvPomdp,
        kernel: Kernel<SmallRational>,
        initial: MultiBelief<SmallRational>,
        k: usize,
        belief_den: BigInt,
        cfg: ExactConfig,
    ) -> Result<Self> {
        let bound = denominator_bound(m, k);
        let unit = &bound.script_c * &belief_den;
        let unit_den = to_small(&unit)?;
        let span = (k as i128 + 1) * bound.r as i128;
        // candidate numerators reach span·unit²; keep products in range
        to_small(&(BigInt::from(span.max(1)) * &unit * &unit))?;
        let rewards = m.pomdp().rewards();
        Ok(Self {
            kernel,
            n: initial.len(),
            initial,
            cfg,
            k,
            unit_den,
            span,
            r_min: rewards.iter().copied().min().unwrap_or(0) as i128,
            r_max: rewards.iter().copied().max().unwrap_or(0) as i128,
        })
    }

    pub fn horizon(&self) -> usize {
        self.k
    }

    /// Grid unit `1 / (C^k · D)`, with `D` the belief denominator lcm.
    pub fn unit(&self) -> Rational {
        Rational::new(BigInt::one(), BigInt::from(self.unit_den))
    }

    /// Candidate values for a coordinate whose node is reached with
    /// probability `pi` and has `terms` rewards left.
    fn axis(&self, pi: &SmallRational, terms: usize) -> Axis {
        let unit = SmallRational::new(1, self.unit_den);
        let (step, reach) = match self.cfg.grid {
            GridMode::ReachScaled => (unit / pi, *pi),
            GridMode::Printed => (unit, SmallRational::one()),
        };
        // |x| ≤ (k+1)R at every node; on the scaled grid |π x| ≤ π (k+1)R
        let limit = (reach * Ratio::from_integer(self.span) / unit).floor().to_integer();
        let (mut lo, mut hi) = (-limit, limit);
        if self.cfg.reward_bounds {
            let t = terms as i128;
            let low = (Ratio::from_integer(t * self.r_min) / step).ceil().to_integer();
            let high = (Ratio::from_integer(t * self.r_max) / step).floor().to_integer();
            lo = lo.max(low);
            hi = hi.min(high);
        }
        Axis { step, lo, hi }
    }

    fn check_deadline(&self) -> Result<()> {
        match self.cfg.deadline {
            Some(d) if Instant::now() >= d => Err(Error::Timeout),
            _ => Ok(()),
        }
    }

    /// Whether some deterministic policy reaches exactly `x` from the root
    /// multi-belief in `k` steps.
    pub fn check_achievable_value(&self, x: &PayoffVector<Rational>) -> Result<bool> {
        let coords = x
            .coords
            .iter()
            .map(|c| match c {
                None => Ok(None),
                Some(v) => SmallRational::from_rational(v)
                    .map(Some)
                    .ok_or_else(|| Error::NumericOverflow(v.to_string())),
            })
            .collect::<Result<Vec<_>>>()?;
        let pi = vec![SmallRational::one(); self.n];
        self.cav(self.k, &self.initial, &pi, &coords)
    }

    fn cav(
        &self,
        ell: usize,
        mb: &MultiBelief<SmallRational>,
        pi: &[SmallRational],
        x: &[Option<SmallRational>],
    ) -> Result<bool> {
        self.check_deadline()?;
        if x.len() != mb.len()
            || x.iter().zip(mb.entries()).any(|(c, b)| c.is_none() != b.is_none())
        {
            return Ok(false);
        }
        let leaf = self.kernel.leaf_value(mb);
        if ell == 0 {
            return Ok(x == leaf.as_slice());
        }
        for a in 0..self.kernel.num_actions() {
            let branches = self.kernel.branches(mb, a);
            if self.partial_sum(0, ell, &branches, pi, &leaf, x)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Whether children for branches `j..` can be chosen so that their
    /// weighted sum plus the current reward equals `rem`.
    fn partial_sum(
        &self,
        j: usize,
        ell: usize,
        branches: &[Branch<SmallRational>],
        pi: &[SmallRational],
        leaf: &[Option<SmallRational>],
        rem: &[Option<SmallRational>],
    ) -> Result<bool> {
        if j == branches.len() {
            return Ok(rem == leaf);
        }
        let br = &branches[j];
        let child_pi: Vec<SmallRational> = pi.iter().zip(&br.weights).map(|(p, w)| p * w).collect();
        let live: Vec<usize> = (0..self.n)
            .filter(|&i| br.child.entries()[i].is_some())
            .collect();
        let axes: Vec<Axis> = live.iter().map(|&i| self.axis(&child_pi[i], ell)).collect();

        if self.cfg.direct_last && j + 1 == branches.len() {
            // rem − Σ w x = leaf forces every child coordinate
            let mut cand: Vec<Option<SmallRational>> = vec![None; self.n];
            for i in 0..self.n {
                match (&rem[i], &leaf[i]) {
                    (None, None) => {}
                    (Some(r), Some(l)) => {
                        if br.weights[i].is_zero() {
                            if r != l {
                                return Ok(false);
                            }
                        } else {
                            cand[i] = Some((r - l) / br.weights[i]);
                        }
                    }
                    _ => return Ok(false),
                }
            }
            for (axis, &i) in axes.iter().zip(&live) {
                if !axis.contains(cand[i].as_ref().expect("live child coordinate")) {
                    return Ok(false);
                }
            }
            return self.cav(ell - 1, &br.child, &child_pi, &cand);
        }

        let total = axes
            .iter()
            .try_fold(1u64, |acc, a| acc.checked_mul(a.len()))
            .unwrap_or(u64::MAX);
        if total > self.cfg.level_budget {
            return Err(Error::BudgetExceeded(format!(
                "{total} candidate child vectors at one observation"
            )));
        }
        if total == 0 {
            return Ok(false);
        }
        let mut index: Vec<i128> = axes.iter().map(|a| a.lo).collect();
        let mut cand: Vec<Option<SmallRational>> = vec![None; self.n];
        loop {
            let mut next_rem = rem.to_vec();
            for (axis_i, &i) in live.iter().enumerate() {
                let x = axes[axis_i].value(index[axis_i]);
                if let Some(r) = next_rem[i].as_mut() {
                    *r -= br.weights[i] * x;
                }
                cand[i] = Some(x);
            }
            if self.partial_sum(j + 1, ell, branches, pi, leaf, &next_rem)?
                && self.cav(ell - 1, &br.child, &child_pi, &cand)?
            {
                return Ok(true);
            }
            let mut d = 0;
            loop {
                if d == index.len() {
                    return Ok(false);
                }
                index[d] += 1;
                if index[d] <= axes[d].hi {
                    break;
                }
                index[d] = axes[d].lo;
                d += 1;
            }
        }
    }

    /// Root grid points, largest first.
    pub fn root_grid(&self) -> Vec<Rational> {
        let axis = self.axis(&SmallRational::one(), self.k + 1);
        (axis.lo..=axis.hi)
            .rev()
            .map(|p| axis.value(p).to_rational())
            .collect()
    }

    /// Whether the max-min value is at least `lambda`: searches `n`-tuples
    /// of root grid points whose convex hull meets `[λ, ∞)^n` and which are
    /// all achievable.
    pub fn solve(&self, lambda: &Rational) -> Result<bool> {
        let grid = self.root_grid();
        let n = self.n;
        let dims = n * n;
        let total = (grid.len() as u64)
            .checked_pow(dims as u32)
            .unwrap_or(u64::MAX);
        if total > self.cfg.tuple_budget {
            return Err(Error::BudgetExceeded(format!("{total} candidate point tuples")));
        }
        if grid.is_empty() {
            return Ok(false);
        }
        let mut index = vec![0usize; dims];
        loop {
            let points: Vec<PayoffVector<Rational>> = (0..n)
                .map(|j| {
                    PayoffVector::from_values((0..n).map(|i| grid[index[j * n + i]].clone()).collect())
                })
                .collect();
            if max_min_value(&points)?.value >= *lambda {
                let mut all = true;
                for p in &points {
                    if !self.check_achievable_value(p)? {
                        all = false;
                        break;
                    }
                }
                if all {
                    return Ok(true);
                }
            }
            let mut d = dims;
            loop {
                if d == 0 {
                    return Ok(false);
                }
                d -= 1;
                index[d] += 1;
                if index[d] < grid.len() {
                    break;
                }
                index[d] = 0;
            }
        }
    }

    /// Every achievable root payoff vector on the grid.
    pub fn achievable_points(&self) -> Result<Vec<PayoffVector<Rational>>> {
        let grid = self.root_grid();
        let total = (grid.len() as u64)
            .checked_pow(self.n as u32)
            .unwrap_or(u64::MAX);
        if total > self.cfg.tuple_budget {
            return Err(Error::BudgetExceeded(format!("{total} candidate points")));
        }
        let mut out = Vec::new();
        let mut index = vec![0usize; self.n];
        loop {
            let p = PayoffVector::from_values(index.iter().map(|&g| grid[g].clone()).collect());
            if self.check_achievable_value(&p)? {
                out.push(p);
            }
            let mut d = self.n;
            loop {
                if d == 0 {
                    return Ok(out);
                }
                d -= 1;
                index[d] += 1;
                if index[d] < grid.len() {
                    break;
                }
                index[d] = 0;
            }
        }
    }

    /// Max-min value over mixtures of achievable grid points.
    pub fn value(&self) -> Result<ValueResult<Rational>> {
        max_min_value(&self.achievable_points()?)
    }
}

/// Whether some deterministic policy reaches exactly `x` from `mb` in `k`
/// steps.
pub fn check_achievable_value(
    m: &MultiEnvPomdp,
    k: usize,
    mb: &MultiBelief<Rational>,
    x: &PayoffVector<Rational>,
) -> Result<bool> {
    ExactSolver::at(m, mb, k, ExactConfig::default())?.check_achievable_value(x)
}

/// Decides whether the max-min value at horizon `k` is at least `lambda`.
pub fn solve_exactspace(m: &MultiEnvPomdp, k: usize, lambda: &Rational) -> Result<bool> {
    ExactSolver::new(m, k, ExactConfig::default())?.solve(lambda)
}
